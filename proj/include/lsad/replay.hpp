#pragma once

// Online loop over period snapshots: tune, inflate, score, flag, fit.

#include "lsad/checkpoint.hpp"
#include "lsad/config.hpp"
#include "lsad/dynamics.hpp"
#include "lsad/ep_engine.hpp"
#include "lsad/events.hpp"
#include "lsad/scoring.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace lsad {

struct PeriodReport {
  std::int64_t period = 0;
  std::size_t edges = 0;
  std::size_t noncases = 0;
  double log_q = 0.0;
  double offset = 0.0;
  TauAssignment tau;
  double tune_score = 0.0;
  int sweeps = 0;
  bool converged = false;
  double fit_seconds = 0.0;   // fit_period only
  double step_seconds = 0.0;  // whole step
  double mean_sweep_seconds = 0.0;
  std::uint64_t pd_skips = 0;
  std::uint64_t improper_skips = 0;
  std::size_t alarms = 0;
  std::size_t removed_edges = 0;
};

struct PeriodOutput {
  PeriodReport report;
  std::vector<EdgeScore> scores;      // predictive scores of this period's edges
  std::vector<SubgraphAlarm> alarms;  // ranked, at most scoring.top_k
};

class ReplayDriver {
 public:
  ReplayDriver(RunConfig config, std::size_t n_nodes, PeriodicityTable periodicity);
  explicit ReplayDriver(const Checkpoint& checkpoint);

  /// Processes the next snapshot. The snapshot's edges must use ids below
  /// n_nodes.
  PeriodOutput step(const PeriodSnapshot& snapshot);

  Checkpoint checkpoint() const;

  const ParamState& state() const { return state_; }
  const RunConfig& config() const { return config_; }
  std::int64_t next_period() const { return next_period_; }
  const SweepStats& totals() const { return totals_; }

 private:
  RunConfig config_;
  std::size_t n_nodes_;
  PeriodicityTable periodicity_;
  ParamState state_;
  std::mt19937_64 rng_;
  std::int64_t next_period_ = 0;
  SweepStats totals_;
};

}  // namespace lsad
