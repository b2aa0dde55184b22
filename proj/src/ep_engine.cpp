#include "lsad/ep_engine.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace lsad {

SweepStats& SweepStats::operator+=(const SweepStats& o) {
  max_natural_param_delta = std::max(max_natural_param_delta, o.max_natural_param_delta);
  pd_skips += o.pd_skips;
  improper_skips += o.improper_skips;
  clamps += o.clamps;
  factors_processed += o.factors_processed;
  wall_seconds += o.wall_seconds;
  return *this;
}

// ---------------------------------------------------------------------------
// MessageStore

MessageStore::MessageStore(int latent_dim, std::vector<FactorRef> factors)
    : dim_(latent_dim),
      stride_(static_cast<std::size_t>(6 + 2 * (latent_dim * latent_dim + latent_dim))),
      factors_(std::move(factors)),
      data_(factors_.size() * stride_, 0.0) {
  if (latent_dim < 0) throw std::invalid_argument("MessageStore: negative latent_dim");
}

void MessageStore::reset() { std::fill(data_.begin(), data_.end(), 0.0); }

Gaussian1D MessageStore::scalar(std::size_t f, int off) const {
  const double* p = raw(f) + off;
  return {p[0], p[1]};
}

GaussianD MessageStore::latent(std::size_t f, int off) const {
  const double* p = raw(f) + off;
  const int d = dim_;
  GaussianD g = GaussianD::uniform(d);
  g.precision = Eigen::Map<const Eigen::MatrixXd>(p, d, d);
  g.precision_mean = Eigen::Map<const Eigen::VectorXd>(p + d * d, d);
  return g;
}

// ---------------------------------------------------------------------------
// Engine internals

class EpEngine::Impl {
 public:
  virtual ~Impl() = default;
  virtual SweepStats update(std::size_t f) = 0;
  virtual void export_state(ParamState& out) const = 0;
};

namespace detail {

struct Scalar {
  double precision;
  double precision_mean;
};

// Clamp a proper scalar belief to the precision ceiling (mean preserved).
inline bool clamp_scalar(Scalar& s) {
  if (s.precision <= kPrecisionCeiling) return false;
  const double mean = s.precision_mean / s.precision;
  s.precision = kPrecisionCeiling;
  s.precision_mean = mean * kPrecisionCeiling;
  return true;
}

}  // namespace detail

template <int D>
class EpEngine::Kernel final : public EpEngine::Impl {
  static constexpr int kStorage = (D == 0) ? 1 : D;
  using Vec = Eigen::Matrix<double, kStorage, 1>;
  using Mat = Eigen::Matrix<double, kStorage, kStorage>;
  using MatList = std::vector<Mat, Eigen::aligned_allocator<Mat>>;
  using VecList = std::vector<Vec, Eigen::aligned_allocator<Vec>>;
  using Scalar = detail::Scalar;

 public:
  Kernel(const ParamState& prior, MessageStore& store, double epsilon, double offset)
      : store_(store),
        dim_(prior.latent_dim),
        epsilon_(epsilon),
        offset_(offset),
        mu_{prior.mu.precision, prior.mu.precision_mean} {
    alpha_.reserve(prior.alpha.size());
    for (const auto& g : prior.alpha) alpha_.push_back({g.precision, g.precision_mean});
    beta_.reserve(prior.beta.size());
    for (const auto& g : prior.beta) beta_.push_back({g.precision, g.precision_mean});
    if constexpr (D != 0) {
      for (const auto& g : prior.u) {
        u_p_.push_back(g.precision);
        u_h_.push_back(g.precision_mean);
      }
      for (const auto& g : prior.v) {
        v_p_.push_back(g.precision);
        v_h_.push_back(g.precision_mean);
      }
    }
  }

  void export_state(ParamState& out) const override {
    out.mu = {mu_.precision, mu_.precision_mean};
    for (std::size_t k = 0; k < alpha_.size(); ++k) {
      out.alpha[k] = {alpha_[k].precision, alpha_[k].precision_mean};
    }
    for (std::size_t k = 0; k < beta_.size(); ++k) {
      out.beta[k] = {beta_[k].precision, beta_[k].precision_mean};
    }
    if constexpr (D != 0) {
      for (std::size_t k = 0; k < u_p_.size(); ++k) {
        out.u[k] = GaussianD(u_p_[k], u_h_[k]);
      }
      for (std::size_t k = 0; k < v_p_.size(); ++k) {
        out.v[k] = GaussianD(v_p_[k], v_h_[k]);
      }
    }
  }

  SweepStats update(std::size_t f) override {
    SweepStats st;
    st.factors_processed = 1;
    const FactorRef& fr = store_.factor(f);
    if (fr.kind != FactorKind::kDyad) return st;
    const NodeId i = fr.sender;
    const NodeId j = fr.receiver;
    const double y = static_cast<double>(fr.label);
    double* msg = store_.raw(f);

    // Cavity-like densities g = q * m (alpha = -1 flips the usual q / m).
    Scalar* targets[3] = {&mu_, &alpha_[i], &beta_[j]};
    double g_mean[3];
    double g_var[3];
    for (int k = 0; k < 3; ++k) {
      const double p = targets[k]->precision + msg[2 * k];
      const double h = targets[k]->precision_mean + msg[2 * k + 1];
      if (!(p > 0.0) || !std::isfinite(p)) {
        ++st.improper_skips;
        return st;
      }
      g_var[k] = 1.0 / p;
      g_mean[k] = h * g_var[k];
    }

    double log_c = -y * offset_;
    for (int k = 0; k < 3; ++k) log_c += -y * g_mean[k] + 0.5 * g_var[k];

    // Latent pieces.
    [[maybe_unused]] Mat gu_p, gv_p, cov_u, cov_v, a_u, a_v;
    [[maybe_unused]] Vec gu_h, gv_h, mean_u, mean_v, b_u, b_v;
    if constexpr (D != 0) {
      const int d = dim_;
      const int block = d * d + d;
      double* mu_msg = msg + 6;
      double* mv_msg = msg + 6 + block;
      gu_p = u_p_[i] + Eigen::Map<const Mat>(mu_msg, d, d);
      gu_h = u_h_[i] + Eigen::Map<const Vec>(mu_msg + d * d, d);
      gv_p = v_p_[j] + Eigen::Map<const Mat>(mv_msg, d, d);
      gv_h = v_h_[j] + Eigen::Map<const Vec>(mv_msg + d * d, d);
      Eigen::LLT<Mat> llt_u(gu_p);
      Eigen::LLT<Mat> llt_v(gv_p);
      if (llt_u.info() != Eigen::Success || llt_v.info() != Eigen::Success) {
        ++st.improper_skips;
        return st;
      }
      const Mat identity = Mat::Identity(d, d);
      cov_u = llt_u.solve(identity);
      cov_v = llt_v.solve(identity);
      mean_u = cov_u * gu_h;
      mean_v = cov_v * gv_h;
      a_u = gu_p - cov_v;
      a_v = gv_p - cov_u;
      Eigen::LLT<Mat> llt_au(a_u);
      Eigen::LLT<Mat> llt_av(a_v);
      if (llt_au.info() != Eigen::Success || llt_av.info() != Eigen::Success) {
        ++st.pd_skips;
        return st;
      }
      b_u = gu_h - y * mean_v;
      b_v = gv_h - y * mean_u;
      const double logdet_u = 2.0 * llt_u.matrixLLT().diagonal().array().log().sum();
      const double logdet_au = 2.0 * llt_au.matrixLLT().diagonal().array().log().sum();
      log_c += 0.5 * (b_u.dot(llt_au.solve(b_u)) - gu_h.dot(mean_u) + logdet_u - logdet_au);
    }
    if (!std::isfinite(log_c)) {
      ++st.improper_skips;
      return st;
    }
    const double w1 = shifted_weight(log_c);
    const double w0 = 1.0 - w1;

    // Scalar variables: mixture N(m, s2) + c N(m - y s2, s2).
    for (int k = 0; k < 3; ++k) {
      const double m = g_mean[k];
      const double s2 = g_var[k];
      const double proj_mean = m - w1 * y * s2;
      const double proj_var = s2 + w0 * w1 * s2 * s2;
      const double proj_p = 1.0 / proj_var;
      const double proj_h = proj_mean * proj_p;
      Scalar& q = *targets[k];
      Scalar next{epsilon_ * q.precision + (1.0 - epsilon_) * proj_p,
                  epsilon_ * q.precision_mean + (1.0 - epsilon_) * proj_h};
      if (!(next.precision > 0.0) || !std::isfinite(next.precision) ||
          !std::isfinite(next.precision_mean)) {
        ++st.improper_skips;
        continue;
      }
      if (detail::clamp_scalar(next)) ++st.clamps;
      const double dp = next.precision - q.precision;
      const double dh = next.precision_mean - q.precision_mean;
      msg[2 * k] += dp;
      msg[2 * k + 1] += dh;
      q = next;
      st.max_natural_param_delta =
          std::max({st.max_natural_param_delta, std::abs(dp), std::abs(dh)});
    }

    if constexpr (D != 0) {
      const int d = dim_;
      const int block = d * d + d;
      update_latent(u_p_[i], u_h_[i], gu_p, cov_u, mean_u, a_u, b_u, w0, w1, msg + 6, st);
      update_latent(v_p_[j], v_h_[j], gv_p, cov_v, mean_v, a_v, b_v, w0, w1,
                    msg + 6 + block, st);
    }
    return st;
  }

 private:
  // Projects base N(mean_g, cov_g) + c N(A^-1 b, A^-1) and applies the
  // damped update to (q_p, q_h) and its message.
  void update_latent(Mat& q_p, Vec& q_h, const Mat& /*g_p*/, const Mat& cov_g,
                     const Vec& mean_g, const Mat& a, const Vec& b, double w0, double w1,
                     double* msg, SweepStats& st) {
    const int d = dim_;
    const Mat identity = Mat::Identity(d, d);
    Eigen::LLT<Mat> llt_a(a);
    const Mat cov_s = llt_a.solve(identity);
    const Vec mean_s = cov_s * b;
    const Vec diff = mean_s - mean_g;
    const Vec proj_mean = mean_g + w1 * diff;
    Mat proj_cov = w0 * cov_g + w1 * cov_s + (w0 * w1) * diff * diff.transpose();
    proj_cov = (0.5 * (proj_cov + proj_cov.transpose())).eval();
    Eigen::LLT<Mat> llt_pc(proj_cov);
    if (llt_pc.info() != Eigen::Success) {
      ++st.improper_skips;
      return;
    }
    Mat proj_p = llt_pc.solve(identity);
    proj_p = (0.5 * (proj_p + proj_p.transpose())).eval();
    const Vec proj_h = proj_p * proj_mean;

    Mat next_p = epsilon_ * q_p + (1.0 - epsilon_) * proj_p;
    Vec next_h = epsilon_ * q_h + (1.0 - epsilon_) * proj_h;
    next_p = (0.5 * (next_p + next_p.transpose())).eval();
    if (!next_p.allFinite() || !next_h.allFinite()) {
      ++st.improper_skips;
      return;
    }
    Eigen::LLT<Mat> llt_next(next_p);
    if (llt_next.info() != Eigen::Success) {
      ++st.improper_skips;
      return;
    }
    if (next_p.diagonal().maxCoeff() > kPrecisionCeiling) {
      // Cap the eigenvalues of the precision, keeping the mean.
      const Vec mean = llt_next.solve(next_h);
      Eigen::SelfAdjointEigenSolver<Mat> es(next_p);
      const Vec capped = es.eigenvalues().cwiseMin(kPrecisionCeiling);
      next_p = es.eigenvectors() * capped.asDiagonal() * es.eigenvectors().transpose();
      next_h = next_p * mean;
      ++st.clamps;
    }
    const Mat dp = next_p - q_p;
    const Vec dh = next_h - q_h;
    Eigen::Map<Mat>(msg, d, d) += dp;
    Eigen::Map<Vec>(msg + d * d, d) += dh;
    q_p = next_p;
    q_h = next_h;
    st.max_natural_param_delta = std::max(
        {st.max_natural_param_delta, dp.cwiseAbs().maxCoeff(), dh.cwiseAbs().maxCoeff()});
  }

  MessageStore& store_;
  int dim_;
  double epsilon_;
  double offset_;
  Scalar mu_;
  std::vector<Scalar> alpha_;
  std::vector<Scalar> beta_;
  MatList u_p_, v_p_;
  VecList u_h_, v_h_;
};

// ---------------------------------------------------------------------------
// EpEngine

EpEngine::EpEngine(ParamState prior, std::vector<FactorRef> factors, double epsilon,
                   double periodicity_offset, std::optional<LatentInit> init)
    : prior_(std::move(prior)), store_(prior_.latent_dim, std::move(factors)) {
  if (!prior_.proper()) throw std::invalid_argument("EpEngine: prior beliefs must be proper");
  for (const auto& f : store_.factors()) {
    if (f.kind == FactorKind::kDyad &&
        (f.sender >= prior_.n_senders() || f.receiver >= prior_.n_receivers())) {
      throw std::out_of_range("EpEngine: factor references unknown node");
    }
    if (f.label != 1 && f.label != -1) {
      throw std::invalid_argument("EpEngine: factor labels must be +1 or -1");
    }
  }
  ParamState start = prior_;
  if (init && prior_.latent_dim > 0) seed_latent_messages(start, *init);
  switch (prior_.latent_dim) {
    case 0:
      impl_ = std::make_unique<Kernel<0>>(start, store_, epsilon, periodicity_offset);
      break;
    case 1:
      impl_ = std::make_unique<Kernel<1>>(start, store_, epsilon, periodicity_offset);
      break;
    case 2:
      impl_ = std::make_unique<Kernel<2>>(start, store_, epsilon, periodicity_offset);
      break;
    case 3:
      impl_ = std::make_unique<Kernel<3>>(start, store_, epsilon, periodicity_offset);
      break;
    default:
      impl_ = std::make_unique<Kernel<Eigen::Dynamic>>(start, store_, epsilon,
                                                       periodicity_offset);
      break;
  }
}

void EpEngine::seed_latent_messages(ParamState& start, const LatentInit& init) {
  if (!(init.strength > 0.0) || !std::isfinite(init.strength)) {
    throw std::invalid_argument("EpEngine: latent init strength must be positive");
  }
  const int d = prior_.latent_dim;
  const int block = store_.latent_block();
  std::mt19937_64 rng(init.seed);
  std::normal_distribution<double> z;
  std::vector<bool> u_done(prior_.n_senders(), false), v_done(prior_.n_receivers(), false);
  auto seed_one = [&](GaussianD& q, double* msg) {
    const Eigen::MatrixXd p0 = q.precision;
    Eigen::LLT<Eigen::MatrixXd> llt(p0);
    Eigen::VectorXd w(d);
    for (int k = 0; k < d; ++k) w[k] = z(rng);
    // r = L^-T w has covariance P0^-1.
    const Eigen::VectorXd r = llt.matrixU().solve(w);
    const Eigen::MatrixXd mp = init.strength * p0;
    const Eigen::VectorXd mh = mp * r;
    Eigen::Map<Eigen::MatrixXd>(msg, d, d) = mp;
    Eigen::Map<Eigen::VectorXd>(msg + d * d, d) = mh;
    q.precision += mp;
    q.precision_mean += mh;
  };
  for (std::size_t f = 0; f < store_.size(); ++f) {
    const FactorRef& fr = store_.factor(f);
    if (fr.kind != FactorKind::kDyad) continue;
    double* msg = store_.raw(f);
    if (!u_done[fr.sender]) {
      seed_one(start.u[fr.sender], msg + 6);
      u_done[fr.sender] = true;
    }
    if (!v_done[fr.receiver]) {
      seed_one(start.v[fr.receiver], msg + 6 + block);
      v_done[fr.receiver] = true;
    }
  }
}

EpEngine::~EpEngine() = default;
EpEngine::EpEngine(EpEngine&&) noexcept = default;
EpEngine& EpEngine::operator=(EpEngine&&) noexcept = default;

SweepStats EpEngine::update_factor(std::size_t f) {
  if (f >= store_.size()) throw std::out_of_range("EpEngine::update_factor: bad index");
  return impl_->update(f);
}

SweepStats EpEngine::sweep(std::mt19937_64& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(store_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  SweepStats total;
  for (std::size_t f : order) total += impl_->update(f);
  total.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return total;
}

ParamState EpEngine::state() const {
  ParamState out = prior_;
  impl_->export_state(out);
  return out;
}

// ---------------------------------------------------------------------------
// Case-control sampling

NoncaseSample sample_noncases(const DyadSet& occupied, std::size_t n_nodes,
                              const SamplingPolicy& policy, bool allow_self_loops,
                              std::mt19937_64& rng) {
  const std::uint64_t n = n_nodes;
  const std::uint64_t universe = allow_self_loops ? n * n : n * (n - (n > 0 ? 1 : 0));
  std::uint64_t occupied_eligible = 0;
  for (const Edge& e : occupied) {
    if (e.src >= n || e.dst >= n) throw std::out_of_range("sample_noncases: node out of range");
    if (allow_self_loops || e.src != e.dst) ++occupied_eligible;
  }
  NoncaseSample out;
  out.available = universe - occupied_eligible;
  const std::uint64_t m = out.available;
  if (m == 0) return out;

  std::uint64_t k = m;
  switch (policy.kind) {
    case SamplingPolicy::Kind::kAll:
      break;
    case SamplingPolicy::Kind::kProportion:
      if (!(policy.value > 0.0 && policy.value <= 1.0)) {
        throw std::invalid_argument("sample_noncases: proportion must be in (0, 1]");
      }
      k = static_cast<std::uint64_t>(std::llround(policy.value * static_cast<double>(m)));
      break;
    case SamplingPolicy::Kind::kCount:
      k = static_cast<std::uint64_t>(std::llround(policy.value));
      break;
    case SamplingPolicy::Kind::kEdgeRatio:
      k = static_cast<std::uint64_t>(
          std::llround(policy.value * static_cast<double>(occupied.size())));
      break;
  }
  // A ratio of nothing samples nothing; other policies take at least one.
  if (policy.kind == SamplingPolicy::Kind::kEdgeRatio && k == 0) return out;
  k = std::clamp<std::uint64_t>(k, 1, m);

  auto decode = [n](std::uint64_t key) {
    return FactorRef{static_cast<NodeId>(key / n), static_cast<NodeId>(key % n), -1,
                     FactorKind::kDyad};
  };
  auto eligible = [&](std::uint64_t key) {
    const NodeId i = static_cast<NodeId>(key / n);
    const NodeId j = static_cast<NodeId>(key % n);
    if (!allow_self_loops && i == j) return false;
    return !occupied.contains(i, j);
  };

  std::vector<std::uint64_t> keys;
  if (k == m || k > m / 4) {
    // Dense: enumerate every eligible dyad, then select k in order.
    std::vector<std::uint64_t> all;
    all.reserve(m);
    for (std::uint64_t key = 0; key < n * n; ++key) {
      if (eligible(key)) all.push_back(key);
    }
    if (k == m) {
      keys = std::move(all);
    } else {
      keys.reserve(k);
      std::sample(all.begin(), all.end(), std::back_inserter(keys), k, rng);
    }
  } else {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(k * 2);
    std::uniform_int_distribution<std::uint64_t> pick(0, n * n - 1);
    keys.reserve(k);
    while (keys.size() < k) {
      const std::uint64_t key = pick(rng);
      if (!eligible(key)) continue;
      if (chosen.insert(key).second) keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());
  }
  out.factors.reserve(keys.size());
  for (std::uint64_t key : keys) out.factors.push_back(decode(key));
  out.log_q = std::log(static_cast<double>(keys.size()) / static_cast<double>(m));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool latent_means_zero(const ParamState& s) {
  const auto zero = [](const GaussianD& g) { return g.precision_mean.isZero(0.0); };
  return std::all_of(s.u.begin(), s.u.end(), zero) && std::all_of(s.v.begin(), s.v.end(), zero);
}

}  // namespace

FitResult fit_period(const ParamState& prior, std::span<const DyadObservation> observations,
                     std::span<const FactorRef> noncases, double noncase_log_q,
                     const ModelConfig& config, double periodicity_offset,
                     std::uint64_t seed) {
  if (!std::isfinite(noncase_log_q) || noncase_log_q > 0.0) {
    throw std::invalid_argument("fit_period: log q must be finite and <= 0");
  }
  ParamState start = prior;
  const double shift = prior.cc_log_q - noncase_log_q;
  if (shift != 0.0) {
    start.mu.precision_mean += start.mu.precision * shift;
  }
  start.cc_log_q = noncase_log_q;

  std::vector<FactorRef> factors;
  factors.reserve(observations.size() + noncases.size());
  for (const auto& o : observations) {
    factors.push_back({o.sender, o.receiver, o.label, FactorKind::kDyad});
  }
  factors.insert(factors.end(), noncases.begin(), noncases.end());

  FitResult result;
  if (factors.empty()) {
    result.state = std::move(start);
    result.converged = true;
    return result;
  }
  std::mt19937_64 rng(seed);
  std::optional<LatentInit> init;
  if (config.latent_init_strength > 0.0 && latent_means_zero(start)) {
    init = LatentInit{rng(), config.latent_init_strength};
  }
  EpEngine engine(std::move(start), std::move(factors), config.damping_epsilon,
                  periodicity_offset, init);
  for (int s = 0; s < config.max_sweeps; ++s) {
    const SweepStats st = engine.sweep(rng);
    result.sweep_seconds.push_back(st.wall_seconds);
    result.stats += st;
    result.stats.max_natural_param_delta = st.max_natural_param_delta;
    ++result.sweeps;
    if (st.max_natural_param_delta < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  result.state = engine.state();
  return result;
}

}  // namespace lsad
