#include "lsad/simgen.hpp"

#include "lsad/gaussian.hpp"
#include "lsad/model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

namespace lsad {

namespace {

Eigen::MatrixXd chol_factor(const Eigen::MatrixXd& cov, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(what) + " covariance is not positive definite");
  }
  return llt.matrixL();
}

Eigen::MatrixXd latent_cov_or_default(const Eigen::MatrixXd& cov, int d) {
  return cov.size() == 0 ? ModelConfig::default_latent_cov(d) : cov;
}

void draw_normals(std::mt19937_64& rng, Eigen::Ref<Eigen::MatrixXd> out) {
  std::normal_distribution<double> z;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = z(rng);
  }
}

}  // namespace

void BilinearSimConfig::validate() const {
  if (n_nodes < 2) throw std::invalid_argument("n_nodes must be at least 2");
  if (periods == 0) throw std::invalid_argument("periods must be positive");
  if (latent_dim < 0) throw std::invalid_argument("latent_dim must be non-negative");
  if (!(mu_var > 0.0 && alpha_var > 0.0 && beta_var > 0.0)) {
    throw std::invalid_argument("prior variances must be positive");
  }
  if (!(rw_scale >= 0.0)) throw std::invalid_argument("rw_scale must be >= 0");
  for (const auto* c : {&u_cov, &v_cov}) {
    if (c->size() != 0 && (c->rows() != latent_dim || c->cols() != latent_dim)) {
      throw std::invalid_argument("latent covariance must be latent_dim x latent_dim");
    }
  }
}

std::vector<double> BilinearDataset::logits(std::size_t t) const {
  const BilinearTruth& p = truth.at(t);
  const std::size_t n = n_nodes;
  Eigen::MatrixXd inter = p.u.transpose() * p.v;
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = i == j ? -std::numeric_limits<double>::infinity()
                              : p.mu + p.alpha[i] + p.beta[j] + inter(i, j);
    }
  }
  return out;
}

BilinearDataset gen_bilinear(const BilinearSimConfig& config) {
  config.validate();
  const int d = config.latent_dim;
  const auto n = static_cast<Eigen::Index>(config.n_nodes);
  const Eigen::MatrixXd lu = chol_factor(latent_cov_or_default(config.u_cov, d), "u");
  const Eigen::MatrixXd lv = chol_factor(latent_cov_or_default(config.v_cov, d), "v");
  const double rw = std::sqrt(config.rw_scale);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> z;
  BilinearDataset data;
  data.n_nodes = config.n_nodes;
  data.truth.reserve(config.periods);
  data.periods.reserve(config.periods);

  BilinearTruth cur;
  cur.mu = config.mu_mean + std::sqrt(config.mu_var) * z(rng);
  cur.alpha.resize(n);
  cur.beta.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) cur.alpha[i] = std::sqrt(config.alpha_var) * z(rng);
  for (Eigen::Index i = 0; i < n; ++i) cur.beta[i] = std::sqrt(config.beta_var) * z(rng);
  Eigen::MatrixXd noise(d, n);
  draw_normals(rng, noise);
  cur.u = lu * noise;
  draw_normals(rng, noise);
  cur.v = lv * noise;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t t = 0; t < config.periods; ++t) {
    if (t > 0) {
      cur.mu += rw * std::sqrt(config.mu_var) * z(rng);
      for (Eigen::Index i = 0; i < n; ++i) cur.alpha[i] += rw * std::sqrt(config.alpha_var) * z(rng);
      for (Eigen::Index i = 0; i < n; ++i) cur.beta[i] += rw * std::sqrt(config.beta_var) * z(rng);
      draw_normals(rng, noise);
      cur.u += rw * (lu * noise);
      draw_normals(rng, noise);
      cur.v += rw * (lv * noise);
    }
    data.truth.push_back(cur);
    const Eigen::MatrixXd inter = cur.u.transpose() * cur.v;
    std::vector<Edge> edges;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double p = expit(cur.mu + cur.alpha[i] + cur.beta[j] + inter(i, j));
        if (unif(rng) < p) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
      }
    }
    data.periods.emplace_back(std::move(edges));
  }
  return data;
}

void DcsbmConfig::validate() const {
  if (n_nodes < 2) throw std::invalid_argument("n_nodes must be at least 2");
  if (n_communities == 0 || n_communities > n_nodes) {
    throw std::invalid_argument("n_communities must lie in [1, n_nodes]");
  }
  if (periods == 0) throw std::invalid_argument("periods must be positive");
  for (double p : {p_within, p_between, p_within_shifted}) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("propensities must lie in (0, 1]");
  }
  if (shift_period < 1 || shift_period > periods + 1) {
    throw std::invalid_argument("shift_period must lie in [1, periods + 1]");
  }
  if (shifted_community < 1 || shifted_community > n_communities) {
    throw std::invalid_argument("shifted_community must lie in [1, n_communities]");
  }
  if (!(pareto_scale > 0.0 && pareto_shape > 0.0)) {
    throw std::invalid_argument("pareto parameters must be positive");
  }
}

double DcsbmDataset::rate(std::size_t t, NodeId i, NodeId j) const {
  const std::uint32_t ri = community[i];
  const std::uint32_t rj = community[j];
  double p = config.p_between;
  if (ri == rj) {
    p = config.p_within;
    if (ri + 1 == config.shifted_community && t + 1 >= config.shift_period) {
      p = config.p_within_shifted;
    }
  }
  return theta[i] * theta[j] * p;
}

std::vector<double> DcsbmDataset::logits(std::size_t t) const {
  constexpr double kEps = 1e-12;
  const std::size_t n = theta.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        out[i * n + j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double p = -std::expm1(-rate(t, static_cast<NodeId>(i), static_cast<NodeId>(j)));
      out[i * n + j] = logit(std::clamp(p, kEps, 1.0 - kEps));
    }
  }
  return out;
}

std::vector<double> normalize_theta(const std::vector<double>& raw,
                                    const std::vector<std::uint32_t>& community,
                                    std::size_t n_communities) {
  if (raw.size() != community.size()) throw std::invalid_argument("normalize_theta: size mismatch");
  std::vector<double> sum(n_communities, 0.0);
  std::vector<std::size_t> count(n_communities, 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    sum.at(community[i]) += raw[i];
    ++count[community[i]];
  }
  std::vector<double> theta(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto r = community[i];
    theta[i] = raw[i] * static_cast<double>(count[r]) / sum[r];
  }
  return theta;
}

DcsbmDataset gen_dcsbm(const DcsbmConfig& config) {
  config.validate();
  DcsbmDataset data;
  data.config = config;
  const std::size_t n = config.n_nodes;
  const std::size_t r = config.n_communities;
  data.community.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.community[i] = static_cast<std::uint32_t>(i * r / n);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> raw(n);
  for (double& x : raw) {
    // Inverse survival function on (0, 1].
    const double u = 1.0 - unif(rng);
    x = config.pareto_scale * std::pow(u, -1.0 / config.pareto_shape);
  }
  data.theta = normalize_theta(raw, data.community, r);

  data.periods.reserve(config.periods);
  for (std::size_t t = 0; t < config.periods; ++t) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        std::poisson_distribution<int> pois(
            data.rate(t, static_cast<NodeId>(i), static_cast<NodeId>(j)));
        if (pois(rng) > 0) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
      }
    }
    data.periods.emplace_back(std::move(edges));
  }
  return data;
}

std::string sim_node_name(NodeId i) { return "n" + std::to_string(i); }

void write_events(const std::filesystem::path& path, const std::vector<DyadSet>& periods,
                  int width_hours, std::int64_t origin) {
  if (width_hours <= 0 || 24 % width_hours != 0) {
    throw std::invalid_argument("bucket width must be a positive divisor of 24");
  }
  if (origin % 86400 != 0) throw std::invalid_argument("origin must be a UTC midnight");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "time,src,dst\n";
  const std::int64_t width = std::int64_t{width_hours} * 3600;
  for (std::size_t t = 0; t < periods.size(); ++t) {
    const std::int64_t start = origin + static_cast<std::int64_t>(t) * width;
    std::size_t k = 0;
    for (const Edge& e : periods[t]) {
      out << start + static_cast<std::int64_t>(k++ % static_cast<std::size_t>(width)) << ','
          << sim_node_name(e.src) << ',' << sim_node_name(e.dst) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_roster(const std::filesystem::path& path, std::size_t n_nodes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < n_nodes; ++i) out << sim_node_name(static_cast<NodeId>(i)) << '\n';
}

}  // namespace lsad
