#pragma once

// Evaluation metrics and tabular exports.

#include "lsad/graph.hpp"
#include "lsad/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lsad {

/// Mann-Whitney AUC via a single sort; tied scores count one half.
/// Throws std::invalid_argument unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Bernoulli log-likelihood; probabilities clamped to [1e-12, 1 - 1e-12].
double loglik(std::span<const double> probs, std::span<const std::uint8_t> labels);

/// Pearson correlation. Throws on length mismatch or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of logit(true_probs) and logit(est_probs).
double logit_corr(std::span<const double> true_probs, std::span<const double> est_probs);

/// Dense n x n bit set over dyads.
class DyadBitset {
 public:
  explicit DyadBitset(std::size_t n_nodes = 0)
      : n_(n_nodes), words_((n_nodes * n_nodes + 63) / 64, 0) {}
  void set(NodeId i, NodeId j) {
    const std::size_t k = static_cast<std::size_t>(i) * n_ + j;
    words_[k / 64] |= std::uint64_t{1} << (k % 64);
  }
  bool test(NodeId i, NodeId j) const {
    const std::size_t k = static_cast<std::size_t>(i) * n_ + j;
    return (words_[k / 64] >> (k % 64)) & 1u;
  }
  std::size_t n_nodes() const { return n_; }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> words_;
};

/// Dyads present in at least one period.
DyadBitset ever_observed(std::span<const DyadSet> periods, std::size_t n_nodes);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC curve for "higher score = more positive", from (0,0) to (1,1) with one
/// point per distinct threshold. Both columns are non-decreasing.
std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const std::uint8_t> labels);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::uint64_t> negatives;
  std::vector<std::uint64_t> positives;
};

Histogram score_histograms(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           std::size_t bins);

/// Header: threshold\tfpr\ttpr
void write_roc(const std::filesystem::path& path, std::span<const RocPoint> roc);
/// Header: bin_lo\tbin_hi\tnegatives\tpositives
void write_histogram(const std::filesystem::path& path, const Histogram& h);

/// Fit quality of one period against known generating logits.
struct TruthMetrics {
  double corr_all = 0.0;    // logit correlation over all dyads
  double corr_never = 0.0;  // ... over dyads never observed in any period (NaN if none)
  double auc_fit = 0.0;     // AUC of fitted probabilities vs observed edges
  double auc_true = 0.0;    // AUC of generating probabilities vs observed edges
  double ll_fit = 0.0;
  double ll_true = 0.0;
};

/// `true_logits` is row-major n x n. Fitted logits use posterior means with
/// the case-control correction. Self-dyads are skipped.
TruthMetrics compare_to_truth(const ParamState& fitted, std::span<const double> true_logits,
                              const DyadSet& observed, const DyadBitset* ever,
                              double periodicity_offset = 0.0);

}  // namespace lsad
