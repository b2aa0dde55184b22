#include "lsad/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lsad {

Eigen::MatrixXd ModelConfig::default_latent_cov(int d) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(d, d, 0.15);
  cov.diagonal().setConstant(0.75);
  return cov;
}

void ModelConfig::set_latent_dim(int d) {
  latent_dim = d;
  prior_cov_u = default_latent_cov(d);
  prior_cov_v = default_latent_cov(d);
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid model config: " + what);
  };
  if (latent_dim < 0 || latent_dim > 8) fail("latent_dim must be in [0, 8]");
  if (!(prior_var_mu > 0.0)) fail("prior_var_mu must be > 0");
  if (!(prior_var_alpha > 0.0)) fail("prior_var_alpha must be > 0");
  if (!(prior_var_beta > 0.0)) fail("prior_var_beta must be > 0");
  if (!std::isfinite(prior_mean_mu)) fail("prior_mean_mu must be finite");
  for (const auto* cov : {&prior_cov_u, &prior_cov_v}) {
    if (cov->rows() != latent_dim || cov->cols() != latent_dim) {
      fail("latent prior covariance must be latent_dim x latent_dim");
    }
    if (latent_dim > 0) {
      if (!cov->isApprox(cov->transpose())) fail("latent prior covariance must be symmetric");
      Eigen::LLT<Eigen::MatrixXd> llt(*cov);
      if (llt.info() != Eigen::Success) fail("latent prior covariance must be positive definite");
    }
  }
  if (!std::isfinite(damping_epsilon)) fail("damping_epsilon must be finite");
  if (!(convergence_tol > 0.0)) fail("convergence_tol must be > 0");
  if (max_sweeps < 1) fail("max_sweeps must be >= 1");
  switch (cc_sampling.kind) {
    case SamplingPolicy::Kind::kAll:
      break;
    case SamplingPolicy::Kind::kProportion:
      if (!(cc_sampling.value > 0.0 && cc_sampling.value <= 1.0)) {
        fail("sampling proportion must be in (0, 1]");
      }
      break;
    case SamplingPolicy::Kind::kCount:
    case SamplingPolicy::Kind::kEdgeRatio:
      if (!(cc_sampling.value > 0.0)) fail("sampling count/ratio must be > 0");
      break;
  }
  if (!(latent_init_strength >= 0.0) || !std::isfinite(latent_init_strength)) {
    fail("latent_init_strength must be finite and >= 0");
  }
  if (tau_grid.empty()) fail("tau_grid must not be empty");
  if (std::find(tau_grid.begin(), tau_grid.end(), 1.0) == tau_grid.end()) {
    fail("tau_grid must contain 1");
  }
  for (double t : tau_grid) {
    if (!(t >= 1.0) || !std::isfinite(t)) fail("tau_grid values must be finite and >= 1");
  }
}

bool ParamState::proper() const {
  if (!mu.proper()) return false;
  for (const auto& g : alpha) if (!g.proper()) return false;
  for (const auto& g : beta) if (!g.proper()) return false;
  for (const auto& g : u) if (!g.proper()) return false;
  for (const auto& g : v) if (!g.proper()) return false;
  return true;
}

ParamState init_priors(const ModelConfig& config, std::size_t n_senders,
                       std::size_t n_receivers) {
  config.validate();
  if (n_senders == 0 || n_receivers == 0) {
    throw std::invalid_argument("init_priors: node counts must be positive");
  }
  const int d = config.latent_dim;
  ParamState s;
  s.latent_dim = d;
  s.mu = Gaussian1D::from_moments(config.prior_mean_mu, config.prior_var_mu);
  s.alpha.assign(n_senders, Gaussian1D::from_moments(0.0, config.prior_var_alpha));
  s.beta.assign(n_receivers, Gaussian1D::from_moments(0.0, config.prior_var_beta));
  if (d > 0) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    s.u.assign(n_senders, GaussianD::from_moments(zero, config.prior_cov_u));
    s.v.assign(n_receivers, GaussianD::from_moments(zero, config.prior_cov_v));
  }
  return s;
}

StateMoments::StateMoments(const ParamState& state)
    : latent_dim_(state.latent_dim),
      mu_mean_(state.mu.mean()),
      mu_var_(state.mu.variance()),
      cc_log_q_(state.cc_log_q) {
  alpha_mean_.reserve(state.alpha.size());
  alpha_var_.reserve(state.alpha.size());
  for (const auto& g : state.alpha) {
    alpha_mean_.push_back(g.mean());
    alpha_var_.push_back(g.variance());
  }
  beta_mean_.reserve(state.beta.size());
  beta_var_.reserve(state.beta.size());
  for (const auto& g : state.beta) {
    beta_mean_.push_back(g.mean());
    beta_var_.push_back(g.variance());
  }
  if (latent_dim_ > 0) {
    auto fill = [&](const std::vector<GaussianD>& src, Eigen::MatrixXd& means,
                    std::vector<Eigen::MatrixXd>& covs) {
      means.resize(latent_dim_, static_cast<Eigen::Index>(src.size()));
      covs.reserve(src.size());
      for (std::size_t k = 0; k < src.size(); ++k) {
        covs.push_back(src[k].covariance());
        means.col(static_cast<Eigen::Index>(k)) = covs.back() * src[k].precision_mean;
      }
    };
    fill(state.u, u_mean_, u_cov_);
    fill(state.v, v_mean_, v_cov_);
  }
}

void StateMoments::check_ids(NodeId i, NodeId j) const {
  if (i >= alpha_mean_.size() || j >= beta_mean_.size()) {
    throw std::out_of_range("unknown node id in dyad (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
  }
}

StateMoments::LatentTerms StateMoments::latent_terms(NodeId i, NodeId j) const {
  check_ids(i, j);
  LatentTerms t;
  if (latent_dim_ == 0) return t;
  const auto mu_u = u_mean_.col(i);
  const auto mu_v = v_mean_.col(j);
  const auto& su = u_cov_[i];
  const auto& sv = v_cov_[j];
  t.mean = mu_u.dot(mu_v);
  t.linear = mu_u.dot(sv * mu_u) + mu_v.dot(su * mu_v);
  t.quadratic = (su * sv).trace();
  return t;
}

PsiMoments StateMoments::psi(NodeId i, NodeId j, double offset, bool corrected) const {
  const LatentTerms lt = latent_terms(i, j);
  PsiMoments m;
  m.mean = mu_mean_ + (corrected ? cc_log_q_ : 0.0) + offset + alpha_mean_[i] +
           beta_mean_[j] + lt.mean;
  m.var = mu_var_ + alpha_var_[i] + beta_var_[j] + lt.linear + lt.quadratic;
  return m;
}

namespace {

double latent_mean_var(const GaussianD& gu, const GaussianD& gv, double* var) {
  const Eigen::MatrixXd su = gu.covariance();
  const Eigen::MatrixXd sv = gv.covariance();
  const Eigen::VectorXd mu_u = su * gu.precision_mean;
  const Eigen::VectorXd mu_v = sv * gv.precision_mean;
  *var = mu_u.dot(sv * mu_u) + mu_v.dot(su * mu_v) + (su * sv).trace();
  return mu_u.dot(mu_v);
}

}  // namespace

PsiMoments psi_moments(const ParamState& state, NodeId i, NodeId j,
                       double periodicity_offset) {
  if (i >= state.alpha.size() || j >= state.beta.size()) {
    throw std::out_of_range("psi_moments: unknown node id");
  }
  PsiMoments m;
  m.mean = state.mu.mean() + periodicity_offset + state.alpha[i].mean() + state.beta[j].mean();
  m.var = state.mu.variance() + state.alpha[i].variance() + state.beta[j].variance();
  if (state.latent_dim > 0) {
    double lv = 0.0;
    m.mean += latent_mean_var(state.u[i], state.v[j], &lv);
    m.var += lv;
  }
  return m;
}

double predictive_prob(const ParamState& state, NodeId i, NodeId j,
                       double periodicity_offset) {
  PsiMoments m = psi_moments(state, i, j, periodicity_offset);
  m.mean += state.cc_log_q;
  return expit_gauss(m.mean, m.var);
}

double cc_mean_correction(const ParamState& state) {
  return state.mu.mean() + state.cc_log_q;
}

}  // namespace lsad
