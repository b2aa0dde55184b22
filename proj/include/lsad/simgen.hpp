#pragma once

// Synthetic network streams: a dynamic bilinear model and a degree-corrected
// block model with a propensity shift.

#include "lsad/graph.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lsad {

struct BilinearSimConfig {
  std::size_t n_nodes = 500;
  std::size_t periods = 100;
  int latent_dim = 2;
  double mu_mean = -6.5;
  double mu_var = 0.1;
  double alpha_var = 1.0;
  double beta_var = 1.0;
  Eigen::MatrixXd u_cov;  // empty: 0.75 diagonal, 0.15 off-diagonal
  Eigen::MatrixXd v_cov;
  double rw_scale = 0.001;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Generating parameters of one period. U and V hold one column per node.
struct BilinearTruth {
  double mu = 0.0;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
};

struct BilinearDataset {
  std::size_t n_nodes = 0;
  std::vector<BilinearTruth> truth;
  std::vector<DyadSet> periods;

  /// Row-major n x n generating logits of period t (diagonal set to -inf).
  std::vector<double> logits(std::size_t t) const;
};

BilinearDataset gen_bilinear(const BilinearSimConfig& config);

struct DcsbmConfig {
  std::size_t n_nodes = 500;
  std::size_t n_communities = 20;
  std::size_t periods = 100;
  double p_within = 0.2;
  double p_between = 0.1;
  std::size_t shift_period = 51;  // 1-based; periods >= this use p_within_shifted
  double p_within_shifted = 0.5;
  std::size_t shifted_community = 1;  // 1-based
  double pareto_scale = 1.0;
  double pareto_shape = 3.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DcsbmDataset {
  DcsbmConfig config;
  std::vector<std::uint32_t> community;  // 0-based
  std::vector<double> theta;
  std::vector<DyadSet> periods;

  /// Poisson rate of dyad (i, j) in 0-based period t.
  double rate(std::size_t t, NodeId i, NodeId j) const;
  /// Row-major n x n logits of P(count > 0), clamped away from 0 and 1.
  std::vector<double> logits(std::size_t t) const;
};

/// Draws theta' ~ Pareto(m, s) and rescales each community to mean 1.
/// Exposed for testing the normalization.
std::vector<double> normalize_theta(const std::vector<double>& raw,
                                    const std::vector<std::uint32_t>& community,
                                    std::size_t n_communities);

DcsbmDataset gen_dcsbm(const DcsbmConfig& config);

/// Node name used in simulated event files.
std::string sim_node_name(NodeId i);

/// Writes `time,src,dst` records, one per edge, with period t occupying
/// [origin + t * width, origin + (t + 1) * width). origin must be midnight UTC.
void write_events(const std::filesystem::path& path, const std::vector<DyadSet>& periods,
                  int width_hours, std::int64_t origin = 0);

/// One node name per line, in id order.
void write_roster(const std::filesystem::path& path, std::size_t n_nodes);

}  // namespace lsad
