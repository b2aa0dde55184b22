#include "lsad/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace lsad {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw std::invalid_argument(std::string(where) + ": unknown key '" + k + "'");
  }
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != cols) {
      throw std::invalid_argument("ragged matrix in config");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

void apply_env(RunConfig& c) {
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) c.io.data_dir = dir;
}

}  // namespace

std::filesystem::path IoConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path;
  return std::filesystem::path(data_dir) / path;
}

ModelConfig RunConfig::default_model() {
  ModelConfig m;
  m.cc_sampling = SamplingPolicy::edge_ratio(3.3);
  return m;
}

void RunConfig::validate() const {
  model.validate();
  const int w = io.bucket_width_hours;
  if (w <= 0 || 24 % w != 0) throw std::invalid_argument("bucket_width_hours must divide 24");
  if (io.periodicity != "none" && io.periodicity != "offline" && io.periodicity != "burn_in") {
    throw std::invalid_argument("periodicity must be none, offline or burn_in");
  }
  if (scoring.edge_threshold > 0.0) throw std::invalid_argument("edge_threshold must be <= 0");
  if (scoring.scan_window < 2) throw std::invalid_argument("scan_window must be >= 2");
  if (replay.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

SamplingPolicy parse_sampling(const std::string& s) {
  if (s == "all") return SamplingPolicy::all();
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad sampling policy: " + s);
  const std::string kind = s.substr(0, colon);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad sampling value: " + s);
  }
  if (kind == "proportion") return SamplingPolicy::proportion(v);
  if (kind == "count") return SamplingPolicy::count(v);
  if (kind == "ratio") return SamplingPolicy::edge_ratio(v);
  throw std::invalid_argument("bad sampling kind: " + kind);
}

std::string format_sampling(const SamplingPolicy& p) {
  switch (p.kind) {
    case SamplingPolicy::Kind::kAll: return "all";
    case SamplingPolicy::Kind::kProportion: return "proportion:" + json(p.value).dump();
    case SamplingPolicy::Kind::kCount: return "count:" + json(p.value).dump();
    case SamplingPolicy::Kind::kEdgeRatio: return "ratio:" + json(p.value).dump();
  }
  return "all";
}

void to_json(json& j, const SamplingPolicy& p) { j = format_sampling(p); }
void from_json(const json& j, SamplingPolicy& p) { p = parse_sampling(j.get<std::string>()); }

void to_json(json& j, const ModelConfig& c) {
  j = json{{"latent_dim", c.latent_dim},
           {"prior_mean_mu", c.prior_mean_mu},
           {"prior_var_mu", c.prior_var_mu},
           {"prior_var_alpha", c.prior_var_alpha},
           {"prior_var_beta", c.prior_var_beta},
           {"prior_cov_u", matrix_to_json(c.prior_cov_u)},
           {"prior_cov_v", matrix_to_json(c.prior_cov_v)},
           {"damping_epsilon", c.damping_epsilon},
           {"convergence_tol", c.convergence_tol},
           {"max_sweeps", c.max_sweeps},
           {"sampling", c.cc_sampling},
           {"tau_grid", c.tau_grid},
           {"allow_self_loops", c.allow_self_loops},
           {"latent_init_strength", c.latent_init_strength}};
}

void from_json(const json& j, ModelConfig& c) {
  check_keys(j,
             {"latent_dim", "prior_mean_mu", "prior_var_mu", "prior_var_alpha", "prior_var_beta",
              "prior_cov_u", "prior_cov_v", "damping_epsilon", "convergence_tol", "max_sweeps",
              "sampling", "tau_grid", "allow_self_loops", "latent_init_strength"},
             "model");
  if (auto it = j.find("latent_dim"); it != j.end()) c.set_latent_dim(it->get<int>());
  get_if(j, "prior_mean_mu", c.prior_mean_mu);
  get_if(j, "prior_var_mu", c.prior_var_mu);
  get_if(j, "prior_var_alpha", c.prior_var_alpha);
  get_if(j, "prior_var_beta", c.prior_var_beta);
  if (auto it = j.find("prior_cov_u"); it != j.end()) c.prior_cov_u = matrix_from_json(*it);
  if (auto it = j.find("prior_cov_v"); it != j.end()) c.prior_cov_v = matrix_from_json(*it);
  get_if(j, "damping_epsilon", c.damping_epsilon);
  get_if(j, "convergence_tol", c.convergence_tol);
  get_if(j, "max_sweeps", c.max_sweeps);
  get_if(j, "sampling", c.cc_sampling);
  get_if(j, "tau_grid", c.tau_grid);
  get_if(j, "allow_self_loops", c.allow_self_loops);
  get_if(j, "latent_init_strength", c.latent_init_strength);
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"seed", c.seed},
           {"model", c.model},
           {"io",
            {{"data_dir", c.io.data_dir},
             {"events", c.io.events},
             {"roster", c.io.roster},
             {"out_dir", c.io.out_dir},
             {"bucket_width_hours", c.io.bucket_width_hours},
             {"trim_boundary", c.io.trim_boundary},
             {"require_outgoing", c.io.require_outgoing},
             {"periodicity", c.io.periodicity},
             {"burn_in_periods", c.io.burn_in_periods}}},
           {"scoring",
            {{"edge_threshold", c.scoring.edge_threshold},
             {"top_k", c.scoring.top_k},
             {"scan_window", c.scoring.scan_window},
             {"scan_z", c.scoring.scan_z}}},
           {"replay",
            {{"tune_forgetting", c.replay.tune_forgetting},
             {"remove_anomalies", c.replay.remove_anomalies},
             {"checkpoint_every", c.replay.checkpoint_every}}}};
}

void from_json(const json& j, RunConfig& c) {
  check_keys(j, {"seed", "model", "io", "scoring", "replay"}, "config");
  get_if(j, "seed", c.seed);
  get_if(j, "model", c.model);
  if (auto it = j.find("io"); it != j.end()) {
    const json& io = *it;
    check_keys(io,
               {"data_dir", "events", "roster", "out_dir", "bucket_width_hours", "trim_boundary",
                "require_outgoing", "periodicity", "burn_in_periods"},
               "io");
    get_if(io, "data_dir", c.io.data_dir);
    get_if(io, "events", c.io.events);
    get_if(io, "roster", c.io.roster);
    get_if(io, "out_dir", c.io.out_dir);
    get_if(io, "bucket_width_hours", c.io.bucket_width_hours);
    get_if(io, "trim_boundary", c.io.trim_boundary);
    get_if(io, "require_outgoing", c.io.require_outgoing);
    get_if(io, "periodicity", c.io.periodicity);
    get_if(io, "burn_in_periods", c.io.burn_in_periods);
  }
  if (auto it = j.find("scoring"); it != j.end()) {
    const json& s = *it;
    check_keys(s, {"edge_threshold", "top_k", "scan_window", "scan_z"}, "scoring");
    get_if(s, "edge_threshold", c.scoring.edge_threshold);
    get_if(s, "top_k", c.scoring.top_k);
    get_if(s, "scan_window", c.scoring.scan_window);
    get_if(s, "scan_z", c.scoring.scan_z);
  }
  if (auto it = j.find("replay"); it != j.end()) {
    const json& r = *it;
    check_keys(r, {"tune_forgetting", "remove_anomalies", "checkpoint_every"}, "replay");
    get_if(r, "tune_forgetting", c.replay.tune_forgetting);
    get_if(r, "remove_anomalies", c.replay.remove_anomalies);
    get_if(r, "checkpoint_every", c.replay.checkpoint_every);
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  RunConfig c = j.get<RunConfig>();
  apply_env(c);
  c.validate();
  return c;
}

RunConfig default_config() {
  RunConfig c;
  apply_env(c);
  return c;
}

void save_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json(c).dump(2) << '\n';
}

}  // namespace lsad
