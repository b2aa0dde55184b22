#include "lsad/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

namespace lsad {

namespace {

void check_tau(double t) {
  if (!(t >= 1.0) || !std::isfinite(t)) {
    throw std::invalid_argument("forgetting multipliers must be finite and >= 1");
  }
}

Gaussian1D scale_variance(const Gaussian1D& g, double tau) {
  return {g.precision / tau, g.precision_mean / tau};
}

}  // namespace

ParamState inflate_priors(const ParamState& state, const TauAssignment& taus) {
  check_tau(taus.tau_mu);
  check_tau(taus.tau_popularity);
  check_tau(taus.tau_latent);
  ParamState next = state;
  if (taus.tau_mu != 1.0) next.mu = scale_variance(state.mu, taus.tau_mu);
  if (taus.tau_popularity != 1.0) {
    for (auto& g : next.alpha) g = scale_variance(g, taus.tau_popularity);
    for (auto& g : next.beta) g = scale_variance(g, taus.tau_popularity);
  }
  if (taus.tau_latent != 1.0) {
    for (auto& g : next.u) {
      g.precision /= taus.tau_latent;
      g.precision_mean /= taus.tau_latent;
    }
    for (auto& g : next.v) {
      g.precision /= taus.tau_latent;
      g.precision_mean /= taus.tau_latent;
    }
  }
  return next;
}

TuneResult tune_forgetting(const ParamState& state, std::span<const EvalDyad> eval,
                           std::span<const double> grid, double periodicity_offset) {
  if (eval.empty()) throw std::invalid_argument("tune_forgetting: empty evaluation set");
  if (grid.empty()) throw std::invalid_argument("tune_forgetting: empty grid");
  std::vector<double> taus(grid.begin(), grid.end());
  for (double t : taus) check_tau(t);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  if (taus.front() != 1.0) throw std::invalid_argument("tune_forgetting: grid must contain 1");

  // The variance of psi is affine in tau_mu and tau_popularity and quadratic
  // in tau_latent, so each dyad reduces to five numbers.
  struct Terms {
    double mean, var_mu, var_pop, lin, quad, weight;
    bool observed;
  };
  const StateMoments moments(state);
  std::vector<Terms> terms;
  terms.reserve(eval.size());
  double total_weight = 0.0;
  for (const EvalDyad& e : eval) {
    const auto lt = moments.latent_terms(e.sender, e.receiver);
    const double mean = moments.mu_mean() + moments.cc_log_q() + periodicity_offset +
                        moments.alpha_mean(e.sender) + moments.beta_mean(e.receiver) + lt.mean;
    terms.push_back({mean, moments.mu_var(),
                     moments.alpha_var(e.sender) + moments.beta_var(e.receiver), lt.linear,
                     lt.quadratic, e.weight, e.observed});
    total_weight += e.weight;
  }
  if (!(total_weight > 0.0)) throw std::invalid_argument("tune_forgetting: zero total weight");

  TuneResult result;
  bool have_best = false;
  for (double t_mu : taus) {
    for (double t_pop : taus) {
      for (double t_lat : taus) {
        double acc = 0.0;
        for (const Terms& t : terms) {
          const double var =
              t_mu * t.var_mu + t_pop * t.var_pop + t_lat * t.lin + t_lat * t_lat * t.quad;
          const double p = expit_gauss(t.mean, var);
          acc += t.weight * (t.observed ? p : 1.0 - p);
        }
        const double score = acc / total_weight;
        ++result.combinations;
        if (!have_best || score > result.best_score) {
          result.best = {t_mu, t_pop, t_lat};
          result.best_score = score;
          have_best = true;
        }
      }
    }
  }
  return result;
}

}  // namespace lsad
