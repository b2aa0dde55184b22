#pragma once

// Bilinear mixed-effects logistic model:
//   logit P(i -> j) = mu + offset + alpha_i + beta_j + u_i' v_j
// with a fully factorized Gaussian posterior approximation.

#include "lsad/gaussian.hpp"
#include "lsad/graph.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace lsad {

/// How non-edges are subsampled for a case-control fit.
struct SamplingPolicy {
  enum class Kind {
    kAll,         // every non-edge (the full fit, q = 1)
    kProportion,  // fraction q of the non-edges
    kCount,       // fixed number of non-edges
    kEdgeRatio,   // value * (number of edges) non-edges
  };
  Kind kind = Kind::kAll;
  double value = 1.0;

  static SamplingPolicy all() { return {}; }
  static SamplingPolicy proportion(double q) { return {Kind::kProportion, q}; }
  static SamplingPolicy count(double n) { return {Kind::kCount, n}; }
  static SamplingPolicy edge_ratio(double r) { return {Kind::kEdgeRatio, r}; }
};

struct ModelConfig {
  int latent_dim = 2;
  double prior_mean_mu = -6.5;
  double prior_var_mu = 0.1;
  double prior_var_alpha = 1.0;
  double prior_var_beta = 1.0;
  Eigen::MatrixXd prior_cov_u = default_latent_cov(2);
  Eigen::MatrixXd prior_cov_v = default_latent_cov(2);
  double damping_epsilon = 2.0;
  double convergence_tol = 1e-4;
  int max_sweeps = 50;
  SamplingPolicy cc_sampling = SamplingPolicy::all();
  std::vector<double> tau_grid = {1.0, 1.01, 1.1, 2.0};
  bool allow_self_loops = false;
  /// Strength of the random initial latent messages used when every latent
  /// prior mean is zero; 0 disables them.
  double latent_init_strength = 0.1;

  /// 0.75 on the diagonal, 0.15 off it (the simulation study's latent prior).
  static Eigen::MatrixXd default_latent_cov(int d);

  /// Sets latent_dim and resizes both latent prior covariances to the default.
  void set_latent_dim(int d);

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

struct ParamState {
  Gaussian1D mu;
  std::vector<Gaussian1D> alpha;
  std::vector<Gaussian1D> beta;
  std::vector<GaussianD> u;
  std::vector<GaussianD> v;
  int latent_dim = 0;
  std::int64_t period_index = 0;
  /// log of the non-edge sampling proportion the mu belief was fitted under.
  double cc_log_q = 0.0;

  std::size_t n_senders() const { return alpha.size(); }
  std::size_t n_receivers() const { return beta.size(); }

  /// True when every belief has positive (definite) precision.
  bool proper() const;
};

struct DyadObservation {
  NodeId sender = 0;
  NodeId receiver = 0;
  int label = 1;  // +1 edge, -1 non-edge

  friend bool operator==(const DyadObservation&, const DyadObservation&) = default;
};

ParamState init_priors(const ModelConfig& config, std::size_t n_senders,
                       std::size_t n_receivers);

struct PsiMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// Cached per-node means and covariances of a ParamState, for evaluating
/// many dyads without re-factorizing precisions.
class StateMoments {
 public:
  explicit StateMoments(const ParamState& state);

  /// Moments of psi; mu's mean includes the case-control correction when
  /// `corrected` is set.
  PsiMoments psi(NodeId i, NodeId j, double offset, bool corrected) const;

  /// Latent-term pieces: mean, tau-linear part and tau-quadratic part of
  /// var(u'v) when both covariances are scaled by tau.
  struct LatentTerms {
    double mean = 0.0;
    double linear = 0.0;
    double quadratic = 0.0;
  };
  LatentTerms latent_terms(NodeId i, NodeId j) const;

  double mu_mean() const { return mu_mean_; }
  double mu_var() const { return mu_var_; }
  double cc_log_q() const { return cc_log_q_; }
  double alpha_mean(NodeId i) const { return alpha_mean_[i]; }
  double alpha_var(NodeId i) const { return alpha_var_[i]; }
  double beta_mean(NodeId j) const { return beta_mean_[j]; }
  double beta_var(NodeId j) const { return beta_var_[j]; }
  std::size_t n_senders() const { return alpha_mean_.size(); }
  std::size_t n_receivers() const { return beta_mean_.size(); }
  int latent_dim() const { return latent_dim_; }

 private:
  void check_ids(NodeId i, NodeId j) const;

  int latent_dim_ = 0;
  double mu_mean_ = 0.0;
  double mu_var_ = 0.0;
  double cc_log_q_ = 0.0;
  std::vector<double> alpha_mean_, alpha_var_, beta_mean_, beta_var_;
  Eigen::MatrixXd u_mean_, v_mean_;  // d x n, column per node
  std::vector<Eigen::MatrixXd> u_cov_, v_cov_;
};

/// Mean and variance of psi under independent Gaussian beliefs. No
/// case-control correction is applied.
PsiMoments psi_moments(const ParamState& state, NodeId i, NodeId j,
                       double periodicity_offset);

/// Predictive edge probability, with the case-control mu correction.
double predictive_prob(const ParamState& state, NodeId i, NodeId j,
                       double periodicity_offset);

/// mu mean to use at scoring time: fitted mean + log q.
double cc_mean_correction(const ParamState& state);

}  // namespace lsad
