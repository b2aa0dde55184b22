#include "lsad/evalkit.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace lsad;

namespace {

double pair_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double num = 0, den = 0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b) {
      if (!y[a] || y[b]) continue;
      num += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
      den += 1;
    }
  return num / den;
}

double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(AucRoc, TrivialCases) {
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auc_roc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_DOUBLE_EQ(auc_roc(std::vector<double>{3, 3, 3, 3}, y), 0.5);
  EXPECT_THROW(auc_roc(std::vector<double>{1, 2}, std::vector<std::uint8_t>{1, 1}),
               std::invalid_argument);
}

TEST(AucRoc, SixPointPairOracle) {
  const std::vector<double> s{0.3, 0.7, 0.7, 0.1, 0.9, 0.3};
  const std::vector<std::uint8_t> y{1, 0, 1, 0, 1, 0};
  EXPECT_NEAR(auc_roc(s, y), pair_auc(s, y), 1e-15);
}

TEST(AucRoc, RandomPairOracleAndMonotoneInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> q(0, 20);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 5 + rng() % 200;
    std::vector<double> s(n), t(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = q(rng) / 4.0;
      y[k] = rng() % 3 == 0;
      t[k] = std::exp(3 * s[k]) - 7;
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auc_roc(s, y), pair_auc(s, y), 1e-12);
    EXPECT_EQ(auc_roc(s, y), auc_roc(t, y));
  }
}

TEST(Loglik, Values) {
  EXPECT_NEAR(loglik(std::vector<double>{0.5, 0.5, 0.5}, std::vector<std::uint8_t>{1, 0, 1}),
              -3 * std::log(2.0), 1e-15);
  EXPECT_NEAR(loglik(std::vector<double>{0.9}, std::vector<std::uint8_t>{1}), std::log(0.9), 1e-15);
  EXPECT_NEAR(loglik(std::vector<double>{0.0}, std::vector<std::uint8_t>{1}), std::log(1e-12), 1e-9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  std::vector<double> p(500);
  std::vector<std::uint8_t> y(500);
  double want = 0;
  for (std::size_t k = 0; k < 500; ++k) {
    p[k] = u(rng);
    y[k] = rng() % 2;
  }
  for (std::size_t k = 0; k < 500; ++k) want += y[k] ? std::log(p[k]) : std::log(1 - p[k]);
  EXPECT_NEAR(loglik(p, y), want, 1e-9);
}

TEST(LogitCorr, IdentityAffineAndOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> p(300), q(300), lp(300), lq(300), aff(300);
  for (std::size_t k = 0; k < 300; ++k) {
    p[k] = u(rng);
    q[k] = u(rng);
    lp[k] = logit(p[k]);
    lq[k] = logit(q[k]);
    aff[k] = expit(0.5 * lp[k] - 1.0);
  }
  EXPECT_NEAR(logit_corr(p, p), 1.0, 1e-12);
  EXPECT_NEAR(logit_corr(p, aff), 1.0, 1e-12);
  EXPECT_NEAR(logit_corr(p, q), naive_pearson(lp, lq), 1e-12);
  EXPECT_NEAR(pearson(lp, lq), naive_pearson(lp, lq), 1e-12);
  EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               std::invalid_argument);
  EXPECT_THROW(logit_corr(std::vector<double>{0.0, 0.5}, std::vector<double>{0.1, 0.5}),
               std::invalid_argument);
}

TEST(EverObserved, UnionOfPeriods) {
  const std::vector<DyadSet> ps{DyadSet({{0, 1}}), DyadSet({{2, 1}})};
  const DyadBitset b = ever_observed(ps, 3);
  EXPECT_TRUE(b.test(0, 1));
  EXPECT_TRUE(b.test(2, 1));
  EXPECT_FALSE(b.test(1, 0));
}

TEST(RocCurve, MonotoneAndPrefixStable) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<double> s(400);
  std::vector<std::uint8_t> y(400);
  for (std::size_t k = 0; k < 400; ++k) {
    y[k] = k % 5 == 0;
    s[k] = z(rng) + (y[k] ? 1.0 : 0.0);
  }
  const auto roc = roc_curve(s, y);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  for (std::size_t k = 1; k < roc.size(); ++k) {
    EXPECT_GE(roc[k].fpr, roc[k - 1].fpr);
    EXPECT_GE(roc[k].tpr, roc[k - 1].tpr);
  }
  // Restricting to FPR <= 5% gives a prefix of the full curve.
  std::vector<RocPoint> low;
  for (const auto& p : roc)
    if (p.fpr <= 0.05) low.push_back(p);
  for (std::size_t k = 0; k < low.size(); ++k) EXPECT_EQ(low[k].threshold, roc[k].threshold);
}

TEST(RocCurve, PerfectSeparationHitsCorner) {
  const auto roc = roc_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9},
                             std::vector<std::uint8_t>{0, 0, 1, 1});
  bool corner = false;
  for (const auto& p : roc) corner |= (p.fpr == 0.0 && p.tpr == 1.0);
  EXPECT_TRUE(corner);
}

TEST(Exports, EmptyClassIsAnErrorAndWritesNothing) {
  const auto dir = std::filesystem::temp_directory_path() / "lsad_exports";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::vector<double> s{0.1, 0.2};
  const std::vector<std::uint8_t> y{0, 0};
  EXPECT_THROW(roc_curve(s, y), std::invalid_argument);
  EXPECT_THROW(score_histograms(s, y, 5), std::invalid_argument);
  EXPECT_FALSE(std::filesystem::exists(dir / "roc.tsv"));

  const std::vector<std::uint8_t> y2{0, 1};
  write_roc(dir / "roc.tsv", roc_curve(s, y2));
  const Histogram h = score_histograms(s, y2, 4);
  EXPECT_EQ(h.edges.size(), 5u);
  EXPECT_EQ(h.negatives[0] + h.positives[3], 2u);
  write_histogram(dir / "h.tsv", h);
  std::ifstream in(dir / "roc.tsv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "threshold\tfpr\ttpr");
  std::ifstream hin(dir / "h.tsv");
  std::getline(hin, line);
  EXPECT_EQ(line, "bin_lo\tbin_hi\tnegatives\tpositives");
  std::filesystem::remove_all(dir);
}

TEST(CompareToTruth, PerfectFitAndNeverObserved) {
  ModelConfig c;
  c.set_latent_dim(0);
  ParamState s = init_priors(c, 4, 4);
  std::vector<double> truth(16, -std::numeric_limits<double>::infinity());
  s.mu = Gaussian1D::from_moments(-1.0, 1e-14);
  for (NodeId i = 0; i < 4; ++i) {
    s.alpha[i] = Gaussian1D::from_moments(0.3 * i, 1e-14);
    s.beta[i] = Gaussian1D::from_moments(-0.2 * i * i, 1e-14);
  }
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = 0; j < 4; ++j)
      if (i != j) truth[i * 4 + j] = -1.0 + 0.3 * i - 0.2 * j * j;
  const DyadSet obs({{0, 1}, {3, 0}, {2, 0}});
  const DyadBitset ever = ever_observed(std::vector<DyadSet>{obs}, 4);
  const TruthMetrics m = compare_to_truth(s, truth, obs, &ever);
  EXPECT_NEAR(m.corr_all, 1.0, 1e-9);
  EXPECT_NEAR(m.corr_never, 1.0, 1e-9);
  EXPECT_NEAR(m.auc_fit, m.auc_true, 1e-12);
  EXPECT_NEAR(m.ll_fit, m.ll_true, 1e-6);
}
