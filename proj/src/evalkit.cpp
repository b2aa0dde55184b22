#include "lsad/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lsad {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  for (auto l : labels) pos += l ? 1 : 0;
  return {pos, labels.size() - pos};
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_sizes(scores.size(), labels.size(), "auc_roc");
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw std::invalid_argument("auc_roc: both classes must be present");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  long double rank_sum = 0.0L;
  std::size_t k = 0;
  while (k < idx.size()) {
    std::size_t e = k + 1;
    while (e < idx.size() && scores[idx[e]] == scores[idx[k]]) ++e;
    // Ranks k+1 .. e share their average.
    const long double avg = (static_cast<long double>(k + 1) + static_cast<long double>(e)) / 2.0L;
    for (std::size_t t = k; t < e; ++t) {
      if (labels[idx[t]]) rank_sum += avg;
    }
    k = e;
  }
  const long double p = static_cast<long double>(pos);
  const long double n = static_cast<long double>(neg);
  return static_cast<double>((rank_sum - p * (p + 1.0L) / 2.0L) / (p * n));
}

double loglik(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  check_sizes(probs.size(), labels.size(), "loglik");
  constexpr double kEps = 1e-12;
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = std::clamp(probs[k], kEps, 1.0 - kEps);
    acc += labels[k] ? std::log(p) : std::log1p(-p);
  }
  return acc;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size(), "pearson");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw std::invalid_argument("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double logit_corr(std::span<const double> true_probs, std::span<const double> est_probs) {
  check_sizes(true_probs.size(), est_probs.size(), "logit_corr");
  std::vector<double> a, b;
  a.reserve(true_probs.size());
  b.reserve(est_probs.size());
  for (std::size_t k = 0; k < true_probs.size(); ++k) {
    const double p = true_probs[k];
    const double q = est_probs[k];
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) {
      throw std::invalid_argument("logit_corr: probabilities must lie strictly inside (0, 1)");
    }
    a.push_back(logit(p));
    b.push_back(logit(q));
  }
  return pearson(a, b);
}

DyadBitset ever_observed(std::span<const DyadSet> periods, std::size_t n_nodes) {
  DyadBitset bits(n_nodes);
  for (const DyadSet& p : periods) {
    for (const Edge& e : p) bits.set(e.src, e.dst);
  }
  return bits;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const std::uint8_t> labels) {
  check_sizes(scores.size(), labels.size(), "roc_curve");
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_curve: both classes must be present");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> roc;
  roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0, k = 0;
  while (k < idx.size()) {
    const double thr = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == thr) {
      if (labels[idx[k]]) ++tp; else ++fp;
      ++k;
    }
    roc.push_back({thr, static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return roc;
}

Histogram score_histograms(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           std::size_t bins) {
  check_sizes(scores.size(), labels.size(), "score_histograms");
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("score_histograms: both classes must be present");
  }
  if (bins == 0) throw std::invalid_argument("score_histograms: bins must be positive");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double s : scores) {
    if (!std::isfinite(s)) continue;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("score_histograms: no finite scores");
  if (hi == lo) hi = lo + 1.0;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  h.negatives.assign(bins, 0);
  h.positives.assign(bins, 0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double s = std::clamp(scores[k], lo, hi);
    auto b = static_cast<std::size_t>((s - lo) / (hi - lo) * static_cast<double>(bins));
    b = std::min(b, bins - 1);
    (labels[k] ? h.positives : h.negatives)[b] += 1;
  }
  return h;
}

void write_roc(const std::filesystem::path& path, std::span<const RocPoint> roc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "threshold\tfpr\ttpr\n";
  for (const RocPoint& p : roc) out << p.threshold << '\t' << p.fpr << '\t' << p.tpr << '\n';
}

void write_histogram(const std::filesystem::path& path, const Histogram& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "bin_lo\tbin_hi\tnegatives\tpositives\n";
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    out << h.edges[b] << '\t' << h.edges[b + 1] << '\t' << h.negatives[b] << '\t'
        << h.positives[b] << '\n';
  }
}

TruthMetrics compare_to_truth(const ParamState& fitted, std::span<const double> true_logits,
                              const DyadSet& observed, const DyadBitset* ever,
                              double periodicity_offset) {
  const std::size_t n = fitted.n_senders();
  if (true_logits.size() != n * n) {
    throw std::invalid_argument("compare_to_truth: true_logits must be n x n");
  }
  const StateMoments moments(fitted);
  DyadBitset obs(n);
  for (const Edge& e : observed) obs.set(e.src, e.dst);

  std::vector<double> fit_logit, true_logit, fit_p, true_p;
  std::vector<double> never_fit, never_true;
  std::vector<std::uint8_t> labels;
  const std::size_t m = n * (n - 1);
  fit_logit.reserve(m);
  true_logit.reserve(m);
  labels.reserve(m);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (i == j) continue;
      const double f = moments.psi(i, j, periodicity_offset, true).mean;
      const double t = true_logits[static_cast<std::size_t>(i) * n + j];
      fit_logit.push_back(f);
      true_logit.push_back(t);
      labels.push_back(obs.test(i, j) ? 1 : 0);
      if (ever && !ever->test(i, j)) {
        never_fit.push_back(f);
        never_true.push_back(t);
      }
    }
  }
  fit_p.reserve(m);
  true_p.reserve(m);
  for (std::size_t k = 0; k < fit_logit.size(); ++k) {
    fit_p.push_back(expit(fit_logit[k]));
    true_p.push_back(expit(true_logit[k]));
  }
  TruthMetrics r;
  r.corr_all = pearson(true_logit, fit_logit);
  r.corr_never = never_fit.size() >= 2 ? pearson(never_true, never_fit)
                                       : std::numeric_limits<double>::quiet_NaN();
  const auto [pos, neg] = class_counts(labels);
  if (pos > 0 && neg > 0) {
    r.auc_fit = auc_roc(fit_logit, labels);
    r.auc_true = auc_roc(true_logit, labels);
  } else {
    r.auc_fit = r.auc_true = std::numeric_limits<double>::quiet_NaN();
  }
  r.ll_fit = loglik(fit_p, labels);
  r.ll_true = loglik(true_p, labels);
  return r;
}

}  // namespace lsad
