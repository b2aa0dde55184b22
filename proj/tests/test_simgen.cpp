#include "lsad/evalkit.hpp"
#include "lsad/simgen.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace lsad;

TEST(GenBilinear, ZeroRandomWalkKeepsParameters) {
  BilinearSimConfig c;
  c.n_nodes = 30;
  c.periods = 5;
  c.rw_scale = 0.0;
  const BilinearDataset d = gen_bilinear(c);
  ASSERT_EQ(d.truth.size(), 5u);
  for (std::size_t t = 1; t < 5; ++t) {
    EXPECT_EQ(d.truth[t].mu, d.truth[0].mu);
    EXPECT_EQ(d.truth[t].alpha, d.truth[0].alpha);
    EXPECT_EQ(d.truth[t].u, d.truth[0].u);
    EXPECT_EQ(d.truth[t].v, d.truth[0].v);
  }
}

TEST(GenBilinear, DefaultsGiveAboutTwoThousandEdges) {
  // Per-seed counts swing by a factor of two with the mu draw; the mean over
  // seeds is what sits near 2000.
  double total = 0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    BilinearSimConfig c;
    c.periods = 2;
    c.seed = static_cast<std::uint64_t>(seed);
    const BilinearDataset d = gen_bilinear(c);
    for (const DyadSet& p : d.periods) {
      total += static_cast<double>(p.size());
      for (const Edge& e : p) EXPECT_NE(e.src, e.dst);
    }
  }
  EXPECT_NEAR(total / (2.0 * seeds), 2000.0, 400.0);
}

TEST(GenBilinear, DeterministicUnderSeed) {
  BilinearSimConfig c;
  c.n_nodes = 50;
  c.periods = 4;
  c.seed = 9;
  const BilinearDataset a = gen_bilinear(c), b = gen_bilinear(c);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(a.periods[t].edges(), b.periods[t].edges());
    EXPECT_EQ(a.truth[t].u, b.truth[t].u);
  }
  c.seed = 10;
  EXPECT_NE(gen_bilinear(c).periods[0].edges(), a.periods[0].edges());
}

TEST(GenBilinear, LogitsMatchTruth) {
  BilinearSimConfig c;
  c.n_nodes = 10;
  c.periods = 2;
  const BilinearDataset d = gen_bilinear(c);
  const auto l = d.logits(1);
  const auto& tr = d.truth[1];
  EXPECT_NEAR(l[3 * 10 + 7], tr.mu + tr.alpha[3] + tr.beta[7] + tr.u.col(3).dot(tr.v.col(7)), 1e-12);
  EXPECT_EQ(l[4 * 10 + 4], -std::numeric_limits<double>::infinity());
}

TEST(GenBilinear, EmpiricalFrequenciesTrackTruth) {
  BilinearSimConfig c;
  c.n_nodes = 60;
  c.periods = 100;
  c.mu_mean = -1.5;
  c.rw_scale = 0.0;
  c.seed = 4;
  const BilinearDataset d = gen_bilinear(c);
  const auto l = d.logits(0);
  std::vector<double> truth, freq;
  for (NodeId i = 0; i < 60; ++i) {
    for (NodeId j = 0; j < 60; ++j) {
      if (i == j) continue;
      double k = 0;
      for (const DyadSet& p : d.periods) k += p.contains(i, j);
      if (k < 20) continue;
      truth.push_back(l[i * 60 + j]);
      freq.push_back(std::log((k + 0.5) / (100 - k + 0.5)));
    }
  }
  ASSERT_GT(truth.size(), 100u);
  EXPECT_GT(pearson(truth, freq), 0.5);
}

TEST(GenBilinear, RejectsNegativeWalk) {
  BilinearSimConfig c;
  c.rw_scale = -1.0;
  EXPECT_THROW(gen_bilinear(c), std::invalid_argument);
}

TEST(NormalizeTheta, EqualRawGivesUnitTheta) {
  const std::vector<std::uint32_t> com{0, 0, 1, 1, 1};
  const auto th = normalize_theta({2.5, 2.5, 7.0, 7.0, 7.0}, com, 2);
  for (double t : th) EXPECT_DOUBLE_EQ(t, 1.0);
}

TEST(GenDcsbm, CommunityMeanThetaIsOne) {
  DcsbmConfig c;
  c.periods = 2;
  c.shift_period = 3;
  const DcsbmDataset d = gen_dcsbm(c);
  std::vector<double> sum(c.n_communities, 0.0);
  std::vector<int> cnt(c.n_communities, 0);
  for (std::size_t i = 0; i < c.n_nodes; ++i) {
    sum[d.community[i]] += d.theta[i];
    ++cnt[d.community[i]];
    EXPECT_GT(d.theta[i], 0.0);
  }
  for (std::size_t r = 0; r < c.n_communities; ++r) {
    ASSERT_GT(cnt[r], 0);
    EXPECT_NEAR(sum[r] / cnt[r], 1.0, 1e-9);
  }
  // Unit weights reduce the rate to the block propensity.
  DcsbmDataset flat = d;
  std::fill(flat.theta.begin(), flat.theta.end(), 1.0);
  NodeId a = 0, b = 1, x = 0;
  while (d.community[x] == d.community[a]) ++x;
  EXPECT_DOUBLE_EQ(flat.rate(0, a, b), 0.2);
  EXPECT_DOUBLE_EQ(flat.rate(0, a, x), 0.1);
}

TEST(GenDcsbm, EdgeRateMatchesExpectation) {
  DcsbmConfig c;
  c.periods = 20;
  c.shift_period = 21;
  c.seed = 6;
  const DcsbmDataset d = gen_dcsbm(c);
  double expected = 0.0, observed = 0.0, var = 0.0;
  for (std::size_t t = 0; t < c.periods; ++t) {
    for (NodeId i = 0; i < c.n_nodes; ++i) {
      for (NodeId j = 0; j < c.n_nodes; ++j) {
        if (i == j) continue;
        const double p = -std::expm1(-d.rate(t, i, j));
        expected += p;
        var += p * (1 - p);
      }
    }
    observed += static_cast<double>(d.periods[t].size());
  }
  EXPECT_LT(std::abs(observed - expected), 3 * std::sqrt(var));
}

TEST(GenDcsbm, ShiftRaisesFirstCommunityOnly) {
  DcsbmConfig c;
  c.periods = 60;
  c.seed = 8;
  const DcsbmDataset d = gen_dcsbm(c);
  auto block_density = [&](std::size_t t0, std::size_t t1, std::uint32_t r, std::uint32_t s) {
    double k = 0, m = 0;
    for (std::size_t t = t0; t < t1; ++t)
      for (NodeId i = 0; i < c.n_nodes; ++i)
        for (NodeId j = 0; j < c.n_nodes; ++j) {
          if (i == j || d.community[i] != r || d.community[j] != s) continue;
          k += d.periods[t].contains(i, j);
          m += 1;
        }
    return std::pair(k / m, m);
  };
  const auto [before, m0] = block_density(40, 50, 0, 0);
  const auto [after, m1] = block_density(50, 60, 0, 0);
  EXPECT_GT(after, before + 0.1);
  EXPECT_NEAR(d.rate(55, 0, 1) / d.rate(45, 0, 1), 2.5, 1e-12);
  // Another block: the generating rate is unchanged and the densities agree.
  EXPECT_DOUBLE_EQ(d.rate(55, 30, 31), d.rate(45, 30, 31));
  const auto [b2, n2] = block_density(40, 50, 3, 3);
  const auto [a2, n3] = block_density(50, 60, 3, 3);
  EXPECT_LT(std::abs(a2 - b2), 4 * std::sqrt(0.25 / n2 + 0.25 / n3));
}

TEST(GenDcsbm, Deterministic) {
  DcsbmConfig c;
  c.periods = 3;
  c.shift_period = 2;
  EXPECT_EQ(gen_dcsbm(c).periods[2].edges(), gen_dcsbm(c).periods[2].edges());
  c.p_within = 1.5;
  EXPECT_THROW(gen_dcsbm(c), std::invalid_argument);
}

TEST(WriteEvents, Layout) {
  const auto dir = std::filesystem::temp_directory_path() / "lsad_write_events";
  std::filesystem::create_directories(dir);
  write_events(dir / "e.csv", {DyadSet({{0, 1}}), DyadSet({{2, 0}, {1, 2}})}, 4);
  std::ifstream in(dir / "e.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,src,dst");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].substr(rows[0].find(',')), ",n0,n1");
  const long t2 = std::stol(rows[2]);
  EXPECT_GE(t2, 4 * 3600);
  EXPECT_LT(t2, 8 * 3600);
  EXPECT_EQ(sim_node_name(12), "n12");
  std::filesystem::remove_all(dir);
}
