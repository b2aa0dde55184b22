#include "lsad/gaussian.hpp"

#include <numbers>

namespace lsad {

double log_mgf_scalar(const Gaussian1D& g, int y) {
  if (!g.proper()) throw std::domain_error("log_mgf_scalar: improper belief");
  return -static_cast<double>(y) * g.mean() + 0.5 * g.variance();
}

std::optional<Gaussian1D> try_project_mixture(const Mixture2<Gaussian1D>& mix) {
  if (std::isnan(mix.log_weight_c)) return std::nullopt;
  const double w1 = shifted_weight(mix.log_weight_c);
  if (w1 == 0.0) return mix.base;
  if (!mix.base.proper() || !mix.shifted.proper()) return std::nullopt;
  const double w0 = 1.0 - w1;
  const double m0 = mix.base.mean();
  const double m1 = mix.shifted.mean();
  const double diff = m1 - m0;
  const double mean = m0 + w1 * diff;
  const double var =
      w0 * mix.base.variance() + w1 * mix.shifted.variance() + w0 * w1 * diff * diff;
  if (!(var > 0.0) || !std::isfinite(var)) return std::nullopt;
  return Gaussian1D::from_moments(mean, var);
}

Gaussian1D project_mixture(const Mixture2<Gaussian1D>& mix) {
  auto r = try_project_mixture(mix);
  if (!r) throw NotPositiveDefinite("project_mixture: degenerate projection");
  return *r;
}

double expit_gauss(double mean_psi, double var_psi) {
  if (var_psi < 0.0) throw std::domain_error("expit_gauss: negative variance");
  const double kappa = 1.0 / std::sqrt(1.0 + std::numbers::pi * var_psi / 8.0);
  return expit(kappa * mean_psi);
}

}  // namespace lsad
