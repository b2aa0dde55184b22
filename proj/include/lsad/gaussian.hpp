#pragma once

// Gaussian beliefs and messages in natural-parameter form.
//
// A Gaussian is stored as (precision, precision * mean). Messages may be
// improper (non-positive precision); beliefs may not. Products and quotients
// of densities are sums and differences of natural parameters.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace lsad {

/// Beliefs are clamped to this variance floor / precision ceiling.
inline constexpr double kVarianceFloor = 1e-10;
inline constexpr double kPrecisionCeiling = 1e10;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity that must be positive definite is not.
class NotPositiveDefinite : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Gaussian1D {
  double precision = 0.0;
  double precision_mean = 0.0;

  static Gaussian1D uniform() { return {}; }
  static Gaussian1D from_moments(double mean, double variance) {
    return {1.0 / variance, mean / variance};
  }

  bool proper() const { return precision > 0.0 && std::isfinite(precision); }
  double mean() const { return precision_mean / precision; }
  double variance() const { return 1.0 / precision; }

  friend bool operator==(const Gaussian1D&, const Gaussian1D&) = default;
};

template <int D>
struct GaussianN {
  using Vector = Eigen::Matrix<double, D, 1>;
  using Matrix = Eigen::Matrix<double, D, D>;

  Matrix precision;
  Vector precision_mean;

  GaussianN() requires(D != Eigen::Dynamic)
      : precision(Matrix::Zero()), precision_mean(Vector::Zero()) {}
  GaussianN() requires(D == Eigen::Dynamic) = default;
  GaussianN(Matrix p, Vector h) : precision(std::move(p)), precision_mean(std::move(h)) {}

  static GaussianN uniform(int dim = D) {
    return {Matrix::Zero(dim, dim), Vector::Zero(dim)};
  }
  /// Throws NotPositiveDefinite when `covariance` is not PD.
  static GaussianN from_moments(const Vector& mean, const Matrix& covariance) {
    Eigen::LLT<Matrix> llt(covariance);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("covariance is not positive definite");
    }
    Matrix p = llt.solve(Matrix::Identity(covariance.rows(), covariance.cols()));
    p = 0.5 * (p + p.transpose()).eval();
    Vector h = p * mean;
    return {std::move(p), std::move(h)};
  }

  int dim() const { return static_cast<int>(precision_mean.size()); }

  bool proper() const {
    if (!precision.allFinite()) return false;
    Eigen::LLT<Matrix> llt(precision);
    return llt.info() == Eigen::Success;
  }
  Matrix covariance() const {
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("precision is not positive definite");
    }
    return llt.solve(Matrix::Identity(dim(), dim()));
  }
  Vector mean() const {
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("precision is not positive definite");
    }
    return llt.solve(precision_mean);
  }

  friend bool operator==(const GaussianN& a, const GaussianN& b) {
    return a.dim() == b.dim() && a.precision == b.precision &&
           a.precision_mean == b.precision_mean;
  }
};

using GaussianD = GaussianN<Eigen::Dynamic>;

template <int To, int From>
GaussianN<To> resize_gaussian(const GaussianN<From>& g) {
  return {typename GaussianN<To>::Matrix(g.precision),
          typename GaussianN<To>::Vector(g.precision_mean)};
}

// ---------------------------------------------------------------------------
// multiply / divide

inline Gaussian1D multiply(const Gaussian1D& a, const Gaussian1D& b) {
  return {a.precision + b.precision, a.precision_mean + b.precision_mean};
}

inline Gaussian1D divide(const Gaussian1D& a, const Gaussian1D& b) {
  return {a.precision - b.precision, a.precision_mean - b.precision_mean};
}

namespace detail {
template <int D>
void check_same_dim(const GaussianN<D>& a, const GaussianN<D>& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("gaussian dimension mismatch: " + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()));
  }
}
}  // namespace detail

template <int D>
GaussianN<D> multiply(const GaussianN<D>& a, const GaussianN<D>& b) {
  detail::check_same_dim(a, b);
  return {a.precision + b.precision, a.precision_mean + b.precision_mean};
}

template <int D>
GaussianN<D> divide(const GaussianN<D>& a, const GaussianN<D>& b) {
  detail::check_same_dim(a, b);
  return {a.precision - b.precision, a.precision_mean - b.precision_mean};
}

// ---------------------------------------------------------------------------
// Log moment generating functions. Labels are coded y = +1 / -1.

/// log E[exp(-y * x)] for x ~ g.
double log_mgf_scalar(const Gaussian1D& g, int y);

/// log E[exp(-y * u'v)] for independent u ~ gu, v ~ gv. Empty when
/// inv(cov_v) - cov_u is not positive definite (the expectation diverges).
template <int D>
std::optional<double> try_log_mgf_bilinear(const GaussianN<D>& gu,
                                           const GaussianN<D>& gv, int y) {
  using Matrix = typename GaussianN<D>::Matrix;
  using Vector = typename GaussianN<D>::Vector;
  const int d = gu.dim();
  Eigen::LLT<Matrix> llt_v(gv.precision);
  Eigen::LLT<Matrix> llt_u(gu.precision);
  if (llt_v.info() != Eigen::Success || llt_u.info() != Eigen::Success) {
    return std::nullopt;
  }
  const Matrix cov_v = llt_v.solve(Matrix::Identity(d, d));
  const Vector mean_v = llt_v.solve(gv.precision_mean);

  // Integrate exp(-y u'mean_v + u'cov_v u / 2) against q(u): completes the
  // square with curvature A = P_u - cov_v.
  const Matrix a = gu.precision - cov_v;
  Eigen::LLT<Matrix> llt_a(a);
  if (llt_a.info() != Eigen::Success) return std::nullopt;
  const Vector b = gu.precision_mean - static_cast<double>(y) * mean_v;

  const double quad_a = b.dot(llt_a.solve(b));
  const double quad_u = gu.precision_mean.dot(llt_u.solve(gu.precision_mean));
  const double logdet_u = 2.0 * llt_u.matrixLLT().diagonal().array().log().sum();
  const double logdet_a = 2.0 * llt_a.matrixLLT().diagonal().array().log().sum();
  return 0.5 * (quad_a - quad_u + logdet_u - logdet_a);
}

/// Throwing form of try_log_mgf_bilinear.
template <int D>
double log_mgf_bilinear(const GaussianN<D>& gu, const GaussianN<D>& gv, int y) {
  detail::check_same_dim(gu, gv);
  if (!gu.proper() || !gv.proper()) {
    throw std::domain_error("log_mgf_bilinear: improper input belief");
  }
  auto r = try_log_mgf_bilinear(gu, gv, y);
  if (!r) {
    throw NotPositiveDefinite("log_mgf_bilinear: inv(cov_v) - cov_u is not positive definite");
  }
  return *r;
}

// ---------------------------------------------------------------------------
// Two-component mixtures  base + c * shifted, weights 1/(1+c), c/(1+c).

template <class G>
struct Mixture2 {
  G base;
  G shifted;
  double log_weight_c = -std::numeric_limits<double>::infinity();
};

/// Weight of the shifted component, c / (1 + c), from log c.
inline double shifted_weight(double log_c) {
  if (log_c == -std::numeric_limits<double>::infinity()) return 0.0;
  if (log_c >= 0.0) return 1.0 / (1.0 + std::exp(-log_c));
  const double e = std::exp(log_c);
  return e / (1.0 + e);
}

/// Moment-matched Gaussian of the normalized mixture. Empty when a
/// component is improper or the matched covariance is degenerate.
std::optional<Gaussian1D> try_project_mixture(const Mixture2<Gaussian1D>& mix);

template <int D>
std::optional<GaussianN<D>> try_project_mixture(const Mixture2<GaussianN<D>>& mix) {
  using Matrix = typename GaussianN<D>::Matrix;
  using Vector = typename GaussianN<D>::Vector;
  if (mix.base.dim() != mix.shifted.dim() || std::isnan(mix.log_weight_c)) {
    return std::nullopt;
  }
  const double w1 = shifted_weight(mix.log_weight_c);
  const double w0 = 1.0 - w1;
  if (w1 == 0.0) return mix.base;
  const int d = mix.base.dim();
  Eigen::LLT<Matrix> l0(mix.base.precision);
  Eigen::LLT<Matrix> l1(mix.shifted.precision);
  if (l0.info() != Eigen::Success || l1.info() != Eigen::Success) return std::nullopt;
  const Matrix identity = Matrix::Identity(d, d);
  const Matrix s0 = l0.solve(identity);
  const Matrix s1 = l1.solve(identity);
  const Vector m0 = s0 * mix.base.precision_mean;
  const Vector m1 = s1 * mix.shifted.precision_mean;
  const Vector diff = m1 - m0;
  const Vector mean = m0 + w1 * diff;
  Matrix cov = w0 * s0 + w1 * s1 + (w0 * w1) * diff * diff.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::LLT<Matrix> lc(cov);
  if (lc.info() != Eigen::Success) return std::nullopt;
  Matrix p = lc.solve(identity);
  p = 0.5 * (p + p.transpose()).eval();
  Vector h = p * mean;
  return GaussianN<D>{std::move(p), std::move(h)};
}

/// Throwing form: NotPositiveDefinite on a degenerate projection.
Gaussian1D project_mixture(const Mixture2<Gaussian1D>& mix);

template <int D>
GaussianN<D> project_mixture(const Mixture2<GaussianN<D>>& mix) {
  detail::check_same_dim(mix.base, mix.shifted);
  auto r = try_project_mixture(mix);
  if (!r) throw NotPositiveDefinite("project_mixture: degenerate projection");
  return *r;
}

// ---------------------------------------------------------------------------

inline double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// Approximates E[expit(psi)] for psi ~ N(mean, var) by shrinking the mean
/// with (1 + pi var / 8)^(-1/2).
double expit_gauss(double mean_psi, double var_psi);

}  // namespace lsad
