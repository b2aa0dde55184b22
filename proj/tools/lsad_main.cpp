// lsad: command-line front end.
//
//   lsad simulate --model bilinear --out data/
//   lsad replay --events data/events.csv --roster data/roster.txt --out run/
//   lsad fit --events ... --periods 10 --out posterior.json
//   lsad score --events ... --posterior posterior.json --period 10 --out run/
//   lsad evaluate --scores run/labelled.tsv --out run/
//
// Failures print one JSON line on stderr and exit non-zero.

#include "lsad/checkpoint.hpp"
#include "lsad/config.hpp"
#include "lsad/evalkit.hpp"
#include "lsad/events.hpp"
#include "lsad/replay.hpp"
#include "lsad/scoring.hpp"
#include "lsad/simgen.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lsad;

namespace {

struct Overrides {
  std::string config;
  std::string events;
  std::string roster;
  std::string out;
  std::string sampling;
  std::string periodicity;
  std::uint64_t seed = 0;
  int latent_dim = 0;
  double epsilon = 0.0;
  int width = 0;
  bool trim = false;
  bool no_tune = false;
  bool remove_anomalies = false;
  double threshold = 0.0;
  std::size_t top_k = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--events", o.events, "event file (time,src,dst)");
  cmd->add_option("--roster", o.roster, "node roster, one name per line");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--latent-dim", o.latent_dim, "latent dimension d");
  cmd->add_option("--epsilon", o.epsilon, "damping epsilon");
  cmd->add_option("--sampling", o.sampling, "all | proportion:q | count:k | ratio:r");
  cmd->add_option("--width", o.width, "bucket width in hours");
  cmd->add_flag("--trim-boundary", o.trim, "drop the first and last bucket");
  cmd->add_option("--periodicity", o.periodicity, "none | offline | burn_in");
  cmd->add_flag("--no-tune", o.no_tune, "keep all forgetting multipliers at 1");
  cmd->add_option("--threshold", o.threshold, "edge log-score threshold for subgraphs");
  cmd->add_option("--top-k", o.top_k, "alarms kept per period");
}

RunConfig make_config(const CLI::App* cmd, const Overrides& o) {
  RunConfig c = o.config.empty() ? default_config() : load_config(o.config);
  if (cmd->count("--events")) c.io.events = o.events;
  if (cmd->count("--roster")) c.io.roster = o.roster;
  if (cmd->count("--seed")) c.seed = o.seed;
  if (cmd->count("--latent-dim")) c.model.set_latent_dim(o.latent_dim);
  if (cmd->count("--epsilon")) c.model.damping_epsilon = o.epsilon;
  if (cmd->count("--sampling")) c.model.cc_sampling = parse_sampling(o.sampling);
  if (cmd->count("--width")) c.io.bucket_width_hours = o.width;
  if (o.trim) c.io.trim_boundary = true;
  if (cmd->count("--periodicity")) c.io.periodicity = o.periodicity;
  if (o.no_tune) c.replay.tune_forgetting = false;
  if (cmd->count("--threshold")) c.scoring.edge_threshold = o.threshold;
  if (cmd->count("--top-k")) c.scoring.top_k = o.top_k;
  if (o.remove_anomalies) c.replay.remove_anomalies = true;
  c.validate();
  return c;
}

struct Stream {
  IngestResult ingest;
  std::vector<PeriodSnapshot> snapshots;
  PeriodicityTable periodicity;
};

Stream load_stream(const RunConfig& c) {
  Stream s;
  IngestOptions opt;
  opt.allow_self_loops = c.model.allow_self_loops;
  opt.require_outgoing = c.io.require_outgoing;
  std::optional<NodeInterner> roster;
  if (!c.io.roster.empty()) roster = NodeInterner::load_roster(c.io.resolve(c.io.roster));
  s.ingest = ingest(c.io.resolve(c.io.events), opt, roster ? &*roster : nullptr);
  s.snapshots = bucketize(s.ingest.events, c.io.bucket_width_hours, c.io.trim_boundary);
  if (c.io.periodicity == "none") {
    s.periodicity = PeriodicityTable::none(c.io.bucket_width_hours);
  } else {
    std::optional<std::size_t> burn;
    if (c.io.periodicity == "burn_in") burn = c.io.burn_in_periods;
    s.periodicity = periodicity_shifts(s.snapshots, s.ingest.nodes.size(), c.io.bucket_width_hours,
                                       burn, c.model.allow_self_loops);
  }
  if (s.periodicity.empty_classes > 0 && c.io.periodicity != "none") {
    std::cerr << "warning: " << s.periodicity.empty_classes
              << " periodicity classes without data; their shift is 0\n";
  }
  return s;
}

std::ofstream open_out(const fs::path& p, const std::string& header, bool append) {
  const bool fresh = !append || !fs::exists(p);
  std::ofstream out(p, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.precision(17);
  if (fresh) out << header << '\n';
  return out;
}

constexpr const char* kAlarmHeader = "period\tkind\tn1\tn2\tn3\tn4\tlog_score\trank";
constexpr const char* kEdgeHeader = "period\tsrc\tdst\tlog_score\tprob";
constexpr const char* kPeriodHeader =
    "period\tedges\tnoncases\tlog_q\toffset\ttau_mu\ttau_pop\ttau_latent\ttune_score\tsweeps\t"
    "converged\tfit_seconds\tmean_sweep_seconds\tpd_skips\timproper_skips\talarms\tremoved_edges";
constexpr const char* kMetricHeader =
    "period\tcorr_all\tcorr_never\tauc_fit\tauc_true\tll_fit\tll_true";

void write_alarms(std::ostream& out, const std::vector<SubgraphAlarm>& alarms,
                  const NodeInterner& nodes) {
  for (const SubgraphAlarm& a : alarms) {
    out << a.period << '\t' << to_string(a.kind);
    for (NodeId v : a.nodes) out << '\t' << nodes.name(v);
    out << '\t' << a.log_score << '\t' << a.rank << '\n';
  }
}

void write_edges(std::ostream& out, const std::vector<EdgeScore>& scores, const NodeInterner& nodes) {
  for (const EdgeScore& e : scores) {
    out << e.period << '\t' << nodes.name(e.sender) << '\t' << nodes.name(e.receiver) << '\t'
        << e.log_score << '\t' << e.prob << '\n';
  }
}

void write_report(std::ostream& out, const PeriodReport& r) {
  out << r.period << '\t' << r.edges << '\t' << r.noncases << '\t' << r.log_q << '\t' << r.offset
      << '\t' << r.tau.tau_mu << '\t' << r.tau.tau_popularity << '\t' << r.tau.tau_latent << '\t'
      << r.tune_score << '\t' << r.sweeps << '\t' << (r.converged ? 1 : 0) << '\t'
      << r.fit_seconds << '\t' << r.mean_sweep_seconds << '\t' << r.pd_skips << '\t'
      << r.improper_skips << '\t' << r.alarms << '\t' << r.removed_edges << '\n';
}

// Simulated ground truth, regenerated from the spec written by `simulate`.
struct Truth {
  std::optional<BilinearDataset> bilinear;
  std::optional<DcsbmDataset> dcsbm;
  std::optional<DyadBitset> ever;

  std::vector<double> logits(std::size_t t) const {
    return bilinear ? bilinear->logits(t) : dcsbm->logits(t);
  }
  std::size_t periods() const {
    return bilinear ? bilinear->periods.size() : dcsbm->periods.size();
  }
};

json sim_spec_bilinear(const BilinearSimConfig& c) {
  return {{"model", "bilinear"},  {"nodes", c.n_nodes}, {"periods", c.periods},
          {"latent_dim", c.latent_dim}, {"rw_scale", c.rw_scale}, {"seed", c.seed}};
}

json sim_spec_dcsbm(const DcsbmConfig& c) {
  return {{"model", "dcsbm"},
          {"nodes", c.n_nodes},
          {"periods", c.periods},
          {"communities", c.n_communities},
          {"p_within", c.p_within},
          {"p_between", c.p_between},
          {"shift_period", c.shift_period},
          {"p_within_shifted", c.p_within_shifted},
          {"seed", c.seed}};
}

Truth load_truth(const fs::path& spec_path) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot read " + spec_path.string());
  const json j = json::parse(in);
  Truth t;
  std::size_t n = 0;
  if (j.at("model") == "bilinear") {
    BilinearSimConfig c;
    c.n_nodes = j.at("nodes");
    c.periods = j.at("periods");
    c.latent_dim = j.at("latent_dim");
    c.rw_scale = j.at("rw_scale");
    c.seed = j.at("seed");
    t.bilinear = gen_bilinear(c);
    n = c.n_nodes;
  } else if (j.at("model") == "dcsbm") {
    DcsbmConfig c;
    c.n_nodes = j.at("nodes");
    c.periods = j.at("periods");
    c.n_communities = j.at("communities");
    c.p_within = j.at("p_within");
    c.p_between = j.at("p_between");
    c.shift_period = j.at("shift_period");
    c.p_within_shifted = j.at("p_within_shifted");
    c.seed = j.at("seed");
    t.dcsbm = gen_dcsbm(c);
    n = c.n_nodes;
  } else {
    throw std::invalid_argument("unknown simulation model in " + spec_path.string());
  }
  const auto& periods = t.bilinear ? t.bilinear->periods : t.dcsbm->periods;
  t.ever = ever_observed(periods, n);
  return t;
}

int cmd_simulate(const std::string& model, std::size_t nodes, std::size_t periods, int latent_dim,
                 double rw_scale, std::uint64_t seed, int width, const fs::path& out) {
  fs::create_directories(out);
  json spec;
  std::vector<DyadSet> stream;
  if (model == "bilinear") {
    BilinearSimConfig c;
    c.n_nodes = nodes;
    c.periods = periods;
    c.latent_dim = latent_dim;
    c.rw_scale = rw_scale;
    c.seed = seed;
    stream = gen_bilinear(c).periods;
    spec = sim_spec_bilinear(c);
  } else if (model == "dcsbm") {
    DcsbmConfig c;
    c.n_nodes = nodes;
    c.periods = periods;
    c.seed = seed;
    if (c.shift_period > periods + 1) c.shift_period = periods + 1;
    stream = gen_dcsbm(c).periods;
    spec = sim_spec_dcsbm(c);
  } else {
    throw std::invalid_argument("unknown model '" + model + "' (bilinear | dcsbm)");
  }
  spec["width_hours"] = width;
  write_events(out / "events.csv", stream, width);
  write_roster(out / "roster.txt", nodes);
  std::ofstream(out / "sim.json") << spec.dump(2) << '\n';
  std::size_t total = 0;
  for (const auto& p : stream) total += p.size();
  std::cout << json{{"status", "ok"},
                    {"periods", stream.size()},
                    {"mean_edges", static_cast<double>(total) / static_cast<double>(stream.size())}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_replay(const RunConfig& cfg, const fs::path& out, std::optional<std::size_t> limit,
               const std::string& resume, const std::string& checkpoint_path,
               const std::string& truth_path, bool edge_scores) {
  fs::create_directories(out);
  Stream s = load_stream(cfg);
  std::optional<Truth> truth;
  if (!truth_path.empty()) truth = load_truth(truth_path);

  std::optional<ReplayDriver> driver;
  if (!resume.empty()) {
    driver.emplace(checkpoint_load(resume));
    if (driver->config().model.latent_dim != cfg.model.latent_dim) {
      throw std::invalid_argument("resume: configuration does not match the checkpoint");
    }
  } else {
    driver.emplace(cfg, s.ingest.nodes.size(), s.periodicity);
  }
  const bool append = !resume.empty();
  auto periods_out = open_out(out / "periods.tsv", kPeriodHeader, append);
  auto alarms_out = open_out(out / "alarms.tsv", kAlarmHeader, append);
  std::optional<std::ofstream> edges_out, metrics_out;
  if (edge_scores) edges_out = open_out(out / "edge_scores.tsv", kEdgeHeader, append);
  if (truth) metrics_out = open_out(out / "metrics.tsv", kMetricHeader, append);

  const std::size_t end = std::min(s.snapshots.size(), limit.value_or(s.snapshots.size()));
  const std::int64_t every = driver->config().replay.checkpoint_every;
  for (auto k = static_cast<std::size_t>(driver->next_period()); k < end; ++k) {
    const PeriodOutput po = driver->step(s.snapshots[k]);
    write_report(periods_out, po.report);
    write_alarms(alarms_out, po.alarms, s.ingest.nodes);
    if (edges_out) write_edges(*edges_out, po.scores, s.ingest.nodes);
    if (metrics_out && k < truth->periods()) {
      const std::vector<double> tl = truth->logits(k);
      const TruthMetrics m = compare_to_truth(driver->state(), tl, s.snapshots[k].edges,
                                              &*truth->ever, s.periodicity.offset(s.snapshots[k]));
      *metrics_out << k << '\t' << m.corr_all << '\t' << m.corr_never << '\t' << m.auc_fit << '\t'
                   << m.auc_true << '\t' << m.ll_fit << '\t' << m.ll_true << '\n';
      metrics_out->flush();
    }
    periods_out.flush();
    alarms_out.flush();
    if (!checkpoint_path.empty() && every > 0 && driver->next_period() % every == 0) {
      checkpoint_save(checkpoint_path, driver->checkpoint());
    }
  }
  if (!checkpoint_path.empty()) checkpoint_save(checkpoint_path, driver->checkpoint());
  std::cout << json{{"status", "ok"},
                    {"periods", driver->next_period()},
                    {"nodes", s.ingest.nodes.size()},
                    {"malformed", s.ingest.stats.malformed}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_fit(RunConfig cfg, std::size_t periods, const fs::path& out) {
  Stream s = load_stream(cfg);
  if (s.ingest.nodes.size() == 0) throw std::invalid_argument("fit: empty node universe");
  ReplayDriver driver(cfg, s.ingest.nodes.size(), s.periodicity);
  const std::size_t end = std::min(periods, s.snapshots.size());
  for (std::size_t k = 0; k < end; ++k) write_report(std::cerr, driver.step(s.snapshots[k]).report);
  std::ofstream o(out);
  if (!o) throw std::runtime_error("cannot write " + out.string());
  o << json{{"config", cfg}, {"state", param_state_to_json(driver.state())},
            {"next_period", driver.next_period()}}
           .dump()
    << '\n';
  std::cout << json{{"status", "ok"}, {"periods", end}}.dump() << '\n';
  return 0;
}

int cmd_score(const RunConfig& cfg, const fs::path& posterior, std::size_t period,
              const fs::path& out, bool scan) {
  Stream s = load_stream(cfg);
  if (period >= s.snapshots.size()) throw std::out_of_range("score: period beyond the data");
  fs::create_directories(out);
  const PeriodSnapshot& snap = s.snapshots[period];
  if (scan) {
    const std::size_t n = s.ingest.nodes.size();
    const std::size_t lo = period >= cfg.scoring.scan_window ? period - cfg.scoring.scan_window : 0;
    std::vector<std::vector<std::uint64_t>> hist;
    for (std::size_t k = lo; k < period; ++k) hist.push_back(scan_statistics(s.snapshots[k].edges, n));
    const ScanResult r = scan_stat_baseline(hist, snap.edges, n, cfg.scoring.scan_z);
    const auto z = scan_edge_scores(r, snap.edges.edges());
    auto o = open_out(out / "scan_scores.tsv", "period\tsrc\tdst\tz\tflagged", false);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const Edge& e = snap.edges.edges()[k];
      o << period << '\t' << s.ingest.nodes.name(e.src) << '\t' << s.ingest.nodes.name(e.dst)
        << '\t' << z[k] << '\t' << (z[k] > cfg.scoring.scan_z ? 1 : 0) << '\n';
    }
  } else {
    std::ifstream in(posterior);
    if (!in) throw std::runtime_error("cannot read " + posterior.string());
    const json j = json::parse(in);
    const ParamState st = param_state_from_json(j.at("state"));
    if (st.n_senders() != s.ingest.nodes.size()) {
      throw std::invalid_argument("score: posterior node count does not match the data");
    }
    const double offset = s.periodicity.offset(snap);
    const auto scores = score_edges(st, static_cast<std::int64_t>(period), snap.edges, offset);
    auto alarms =
        rank_alarms(enumerate_subgraphs(scores, cfg.scoring.edge_threshold), cfg.scoring.top_k);
    auto eo = open_out(out / "edge_scores.tsv", kEdgeHeader, false);
    write_edges(eo, scores, s.ingest.nodes);
    auto ao = open_out(out / "alarms.tsv", kAlarmHeader, false);
    write_alarms(ao, alarms, s.ingest.nodes);
  }
  std::cout << json{{"status", "ok"}, {"edges", snap.edges.size()}}.dump() << '\n';
  return 0;
}

int cmd_evaluate(const fs::path& scores_path, const fs::path& out, std::size_t bins,
                 const std::string& score_col, const std::string& label_col) {
  std::ifstream in(scores_path);
  if (!in) throw std::runtime_error("cannot read " + scores_path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("evaluate: empty score file");
  std::vector<std::string> head;
  {
    std::istringstream hs(line);
    for (std::string f; std::getline(hs, f, '\t');) head.push_back(f);
  }
  const auto col = [&](const std::string& name) {
    for (std::size_t k = 0; k < head.size(); ++k) {
      if (head[k] == name) return k;
    }
    throw std::invalid_argument("evaluate: missing column '" + name + "'");
  };
  const std::size_t sc = col(score_col);
  const std::size_t lc = col(label_col);
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, '\t');) f.push_back(x);
    if (f.size() <= std::max(sc, lc)) throw std::invalid_argument("evaluate: short row");
    scores.push_back(std::stod(f[sc]));
    labels.push_back(std::stoi(f[lc]) != 0 ? 1 : 0);
  }
  const double auc = auc_roc(scores, labels);
  const auto roc = roc_curve(scores, labels);
  const Histogram h = score_histograms(scores, labels, bins);
  fs::create_directories(out);
  write_roc(out / "roc.tsv", roc);
  write_histogram(out / "histogram.tsv", h);
  std::cout << json{{"status", "ok"}, {"auc", auc}, {"n", scores.size()}}.dump() << '\n';
  return 0;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"status", "error"}, {"kind", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilinear network anomaly scoring"};
  app.require_subcommand(1);

  // simulate
  std::string sim_model = "bilinear";
  std::size_t sim_nodes = 500, sim_periods = 100;
  int sim_d = 2, sim_width = 4;
  double sim_rw = 0.001;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "sim";
  auto* sim = app.add_subcommand("simulate", "generate a synthetic event stream");
  sim->add_option("--model", sim_model, "bilinear | dcsbm");
  sim->add_option("--nodes", sim_nodes);
  sim->add_option("--periods", sim_periods);
  sim->add_option("--latent-dim", sim_d);
  sim->add_option("--rw-scale", sim_rw);
  sim->add_option("--width", sim_width, "bucket width in hours");
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out, "output directory");

  // replay
  Overrides ro;
  std::size_t replay_limit = 0;
  std::string resume, ckpt, truth_path;
  std::int64_t ckpt_every = 0;
  bool edge_scores = false;
  auto* rep = app.add_subcommand("replay", "online tune / score / fit loop");
  add_common(rep, ro);
  rep->add_option("--out", ro.out, "output directory")->required();
  rep->add_flag("--remove-anomalies", ro.remove_anomalies,
                "exclude flagged subgraph edges from the next fit");
  rep->add_option("--periods", replay_limit, "stop after this many periods");
  rep->add_option("--checkpoint", ckpt, "checkpoint file written at the end");
  rep->add_option("--checkpoint-every", ckpt_every, "also checkpoint every N periods");
  rep->add_option("--resume", resume, "resume from a checkpoint")->check(CLI::ExistingFile);
  rep->add_option("--truth", truth_path, "sim.json of a simulated stream")->check(CLI::ExistingFile);
  rep->add_flag("--edge-scores", edge_scores, "write per-edge predictive scores");

  // fit
  Overrides fo;
  std::size_t fit_periods = 1;
  auto* fit = app.add_subcommand("fit", "fit the first periods and store the posterior");
  add_common(fit, fo);
  fit->add_option("--periods", fit_periods, "number of periods to fit");
  fit->add_option("--out", fo.out, "posterior JSON")->required();

  // score
  Overrides so;
  std::string posterior;
  std::size_t score_period = 0;
  bool scan = false;
  auto* score = app.add_subcommand("score", "score one period's edges and subgraphs");
  add_common(score, so);
  score->add_option("--posterior", posterior, "posterior JSON from fit");
  score->add_option("--period", score_period, "0-based period index")->required();
  score->add_option("--out", so.out, "output directory")->required();
  score->add_flag("--scan-baseline", scan, "scan-statistic baseline instead of the model");

  // evaluate
  std::string eval_scores, eval_out = "eval", score_col = "score", label_col = "label";
  std::size_t bins = 50;
  auto* ev = app.add_subcommand("evaluate", "AUC, ROC and histogram exports");
  ev->add_option("--scores", eval_scores, "TSV with score and label columns")->required();
  ev->add_option("--out", eval_out, "output directory");
  ev->add_option("--score-column", score_col);
  ev->add_option("--label-column", label_col);
  ev->add_option("--bins", bins);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*sim) {
      return cmd_simulate(sim_model, sim_nodes, sim_periods, sim_d, sim_rw, sim_seed, sim_width,
                          sim_out);
    }
    if (*rep) {
      RunConfig c = make_config(rep, ro);
      if (ckpt_every > 0) c.replay.checkpoint_every = ckpt_every;
      std::optional<std::size_t> limit;
      if (rep->count("--periods")) limit = replay_limit;
      return cmd_replay(c, ro.out, limit, resume, ckpt, truth_path, edge_scores);
    }
    if (*fit) return cmd_fit(make_config(fit, fo), fit_periods, fo.out);
    if (*score) {
      if (!scan && posterior.empty()) return fail("usage", "score needs --posterior or --scan-baseline", 2);
      return cmd_score(make_config(score, so), posterior, score_period, so.out, scan);
    }
    if (*ev) return cmd_evaluate(eval_scores, eval_out, bins, score_col, label_col);
  } catch (const IngestError& e) {
    return fail("ingest", e.what(), 3);
  } catch (const CheckpointVersionError& e) {
    return fail("checkpoint_version", e.what(), 4);
  } catch (const CheckpointCorrupt& e) {
    return fail("checkpoint_corrupt", e.what(), 4);
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
