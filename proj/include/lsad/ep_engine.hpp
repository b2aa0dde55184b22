#pragma once

// Power-EP message passing (alpha = -1) for the bilinear logistic model.
//
// Each dyad factor keeps one unnormalized Gaussian message per touched
// variable (mu, alpha_i, beta_j, u_i, v_j). Prior factors are exact Gaussians
// and are never updated, so they live in the prior ParamState rather than in
// the message store.

#include "lsad/graph.hpp"
#include "lsad/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace lsad {

/// The divergence index. The closed-form expectations hold only at -1.
inline constexpr double kPowerEpAlpha = -1.0;

enum class FactorKind : std::uint8_t { kDyad, kPrior };

struct FactorRef {
  NodeId sender = 0;
  NodeId receiver = 0;
  int label = 1;
  FactorKind kind = FactorKind::kDyad;

  friend bool operator==(const FactorRef&, const FactorRef&) = default;
};

struct SweepStats {
  double max_natural_param_delta = 0.0;
  std::uint64_t pd_skips = 0;
  std::uint64_t improper_skips = 0;
  std::uint64_t clamps = 0;
  std::uint64_t factors_processed = 0;
  double wall_seconds = 0.0;

  SweepStats& operator+=(const SweepStats& o);
};

/// Flat per-factor message storage: O(#factors), never O(N^2).
class MessageStore {
 public:
  MessageStore(int latent_dim, std::vector<FactorRef> factors);

  std::size_t size() const { return factors_.size(); }
  int latent_dim() const { return dim_; }
  const FactorRef& factor(std::size_t f) const { return factors_[f]; }
  const std::vector<FactorRef>& factors() const { return factors_; }

  Gaussian1D mu(std::size_t f) const { return scalar(f, 0); }
  Gaussian1D alpha(std::size_t f) const { return scalar(f, 2); }
  Gaussian1D beta(std::size_t f) const { return scalar(f, 4); }
  GaussianD u(std::size_t f) const { return latent(f, 6); }
  GaussianD v(std::size_t f) const { return latent(f, 6 + latent_block()); }

  /// Sets every message to the uniform (all-zero naturals) message.
  void reset();

  // Raw layout per factor: mu(P,h) alpha(P,h) beta(P,h) u(P[dxd], h[d]) v(...)
  double* raw(std::size_t f) { return data_.data() + f * stride_; }
  const double* raw(std::size_t f) const { return data_.data() + f * stride_; }
  int latent_block() const { return dim_ * dim_ + dim_; }

 private:
  Gaussian1D scalar(std::size_t f, int off) const;
  GaussianD latent(std::size_t f, int off) const;

  int dim_;
  std::size_t stride_;
  std::vector<FactorRef> factors_;
  std::vector<double> data_;
};

/// Random initial latent messages: for every latent variable, the first
/// factor touching it starts with precision strength * P0 and mean r drawn
/// from the variable's prior N(0, P0^-1). Breaks the u <-> v sign symmetry
/// that otherwise pins zero-mean latent beliefs at zero.
struct LatentInit {
  std::uint64_t seed = 0;
  double strength = 0.1;
};

class EpEngine {
 public:
  /// q starts at `prior` times the initial messages, which are uniform
  /// unless `init` is given.
  EpEngine(ParamState prior, std::vector<FactorRef> factors, double epsilon,
           double periodicity_offset = 0.0, std::optional<LatentInit> init = std::nullopt);
  ~EpEngine();
  EpEngine(EpEngine&&) noexcept;
  EpEngine& operator=(EpEngine&&) noexcept;

  /// One Power-EP update of every variable touched by factor `f`.
  SweepStats update_factor(std::size_t f);

  /// Processes every factor once, in an order shuffled with `rng`.
  SweepStats sweep(std::mt19937_64& rng);

  /// Current approximate posterior q.
  ParamState state() const;
  const ParamState& prior() const { return prior_; }
  const MessageStore& messages() const { return store_; }

 private:
  class Impl;
  template <int D>
  class Kernel;

  void seed_latent_messages(ParamState& start, const LatentInit& init);

  ParamState prior_;
  MessageStore store_;
  std::unique_ptr<Impl> impl_;
};

struct NoncaseSample {
  std::vector<FactorRef> factors;  // label -1
  double log_q = 0.0;              // log(sampled / available non-edges)
  std::uint64_t available = 0;     // non-edges eligible for sampling
};

/// Uniform sample without replacement of dyads absent from `occupied`
/// (edges plus any excluded dyads). Self-loops are never sampled unless
/// `allow_self_loops`. Result is sorted by (sender, receiver).
NoncaseSample sample_noncases(const DyadSet& occupied, std::size_t n_nodes,
                              const SamplingPolicy& policy, bool allow_self_loops,
                              std::mt19937_64& rng);

struct FitResult {
  ParamState state;
  SweepStats stats;  // accumulated over sweeps
  std::vector<double> sweep_seconds;
  int sweeps = 0;
  bool converged = false;
};

/// Runs sweeps until the largest message change falls below
/// config.convergence_tol or config.max_sweeps is reached. The mu prior is
/// rebased when `noncase_log_q` differs from the prior's cc_log_q.
FitResult fit_period(const ParamState& prior, std::span<const DyadObservation> observations,
                     std::span<const FactorRef> noncases, double noncase_log_q,
                     const ModelConfig& config, double periodicity_offset,
                     std::uint64_t seed);

}  // namespace lsad
