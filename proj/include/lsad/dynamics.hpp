#pragma once

// Between-period evolution. A Gaussian random walk on every parameter is
// represented implicitly by scaling each posterior (co)variance with a
// forgetting multiplier tau >= 1; the multipliers are picked per group by a
// grid search on the average predictive likelihood of the next period.

#include "lsad/model.hpp"

#include <compare>
#include <span>
#include <vector>

namespace lsad {

struct TauAssignment {
  double tau_mu = 1.0;
  double tau_popularity = 1.0;  // alpha_i and beta_j
  double tau_latent = 1.0;      // u_i and v_j

  friend auto operator<=>(const TauAssignment&, const TauAssignment&) = default;
};

/// Next-period priors: means unchanged, each group's (co)variances times tau.
ParamState inflate_priors(const ParamState& state, const TauAssignment& taus);

/// A dyad in the tuning set. Non-edges drawn at rate q carry weight 1/q.
struct EvalDyad {
  NodeId sender = 0;
  NodeId receiver = 0;
  bool observed = false;
  double weight = 1.0;
};

struct TuneResult {
  TauAssignment best;
  double best_score = 0.0;
  std::size_t combinations = 0;
};

/// Full factorial search over `grid`^3 for the assignment maximizing the
/// weighted mean predictive likelihood of `eval`. Exact ties go to the
/// lexicographically smallest (tau_mu, tau_popularity, tau_latent).
TuneResult tune_forgetting(const ParamState& state, std::span<const EvalDyad> eval,
                           std::span<const double> grid, double periodicity_offset = 0.0);

}  // namespace lsad
