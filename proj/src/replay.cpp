#include "lsad/replay.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsad {

ReplayDriver::ReplayDriver(RunConfig config, std::size_t n_nodes, PeriodicityTable periodicity)
    : config_(std::move(config)),
      n_nodes_(n_nodes),
      periodicity_(std::move(periodicity)),
      rng_(config_.seed) {
  config_.validate();
  if (periodicity_.shifts.empty()) periodicity_ = PeriodicityTable::none(config_.io.bucket_width_hours);
  state_ = init_priors(config_.model, n_nodes_, n_nodes_);
}

ReplayDriver::ReplayDriver(const Checkpoint& c)
    : config_(c.config),
      n_nodes_(c.n_nodes),
      periodicity_(c.periodicity),
      state_(c.state),
      rng_(rng_from_string(c.rng_state)),
      next_period_(c.next_period),
      totals_(c.totals) {
  config_.validate();
  if (state_.n_senders() != n_nodes_ || state_.latent_dim != config_.model.latent_dim) {
    throw CheckpointCorrupt("checkpoint state does not match its configuration");
  }
}

PeriodOutput ReplayDriver::step(const PeriodSnapshot& snapshot) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig& mc = config_.model;
  const double offset = periodicity_.offset(snapshot);
  const DyadSet& edges = snapshot.edges;
  for (const Edge& e : edges) {
    if (e.src >= n_nodes_ || e.dst >= n_nodes_) throw std::out_of_range("snapshot node id out of range");
  }

  PeriodOutput out;
  PeriodReport& rep = out.report;
  rep.period = next_period_;
  rep.offset = offset;
  rep.edges = edges.size();

  // Non-edges for this period, shared by tuning and fitting.
  NoncaseSample sample = sample_noncases(edges, n_nodes_, mc.cc_sampling, mc.allow_self_loops, rng_);
  if (sample.factors.empty()) sample.log_q = state_.cc_log_q;
  rep.log_q = sample.log_q;

  ParamState predictive = state_;
  if (next_period_ > 0 && config_.replay.tune_forgetting) {
    std::vector<EvalDyad> eval;
    eval.reserve(edges.size() + sample.factors.size());
    for (const Edge& e : edges) eval.push_back({e.src, e.dst, true, 1.0});
    const double w = std::exp(-sample.log_q);
    for (const FactorRef& f : sample.factors) eval.push_back({f.sender, f.receiver, false, w});
    if (!eval.empty()) {
      const TuneResult tr = tune_forgetting(state_, eval, mc.tau_grid, offset);
      rep.tau = tr.best;
      rep.tune_score = tr.best_score;
      predictive = inflate_priors(state_, tr.best);
    }
  }
  predictive.period_index = next_period_;

  out.scores = score_edges(predictive, next_period_, edges, offset);
  out.alarms = rank_alarms(enumerate_subgraphs(out.scores, config_.scoring.edge_threshold),
                           config_.scoring.top_k);
  rep.alarms = out.alarms.size();

  std::vector<Edge> removed;
  if (config_.replay.remove_anomalies) {
    for (const SubgraphAlarm& a : out.alarms) {
      const auto& v = a.nodes;
      switch (a.kind) {
        case SubgraphKind::kPath3:
          removed.insert(removed.end(), {{v[0], v[1]}, {v[1], v[2]}, {v[2], v[3]}});
          break;
        case SubgraphKind::kStar3:
          removed.insert(removed.end(), {{v[0], v[1]}, {v[0], v[2]}, {v[0], v[3]}});
          break;
        case SubgraphKind::kFork:
          removed.insert(removed.end(), {{v[0], v[1]}, {v[1], v[2]}, {v[1], v[3]}});
          break;
      }
    }
  }
  const DyadSet removed_set(std::move(removed));
  rep.removed_edges = removed_set.size();

  std::vector<DyadObservation> obs;
  obs.reserve(edges.size());
  for (const Edge& e : edges) {
    if (!removed_set.empty() && removed_set.contains(e.src, e.dst)) continue;
    obs.push_back({e.src, e.dst, 1});
  }
  rep.noncases = sample.factors.size();

  const std::uint64_t fit_seed = rng_();
  const auto f0 = std::chrono::steady_clock::now();
  FitResult fit = fit_period(predictive, obs, sample.factors, sample.log_q, mc, offset, fit_seed);
  rep.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - f0).count();
  state_ = std::move(fit.state);
  state_.period_index = next_period_;
  rep.sweeps = fit.sweeps;
  rep.converged = fit.converged;
  rep.pd_skips = fit.stats.pd_skips;
  rep.improper_skips = fit.stats.improper_skips;
  rep.mean_sweep_seconds =
      fit.sweep_seconds.empty()
          ? 0.0
          : std::accumulate(fit.sweep_seconds.begin(), fit.sweep_seconds.end(), 0.0) /
                static_cast<double>(fit.sweep_seconds.size());
  totals_ += fit.stats;
  ++next_period_;
  rep.step_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Checkpoint ReplayDriver::checkpoint() const {
  Checkpoint c;
  c.config = config_;
  c.state = state_;
  c.totals = totals_;
  c.rng_state = rng_to_string(rng_);
  c.next_period = next_period_;
  c.n_nodes = n_nodes_;
  c.periodicity = periodicity_;
  return c;
}

}  // namespace lsad
