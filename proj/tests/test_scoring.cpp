#include "lsad/scoring.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <set>

using namespace lsad;

namespace {

EdgeScore es(NodeId i, NodeId j, double s, bool observed = true, std::int64_t period = 0) {
  return {i, j, period, observed, s, std::exp(s)};
}

std::vector<SubgraphAlarm> canonical(std::vector<SubgraphAlarm> a) {
  std::sort(a.begin(), a.end(), [](const SubgraphAlarm& x, const SubgraphAlarm& y) {
    return std::tuple(x.period, x.kind, x.nodes) < std::tuple(y.period, y.kind, y.nodes);
  });
  return a;
}

}  // namespace

TEST(LogExpit, Values) {
  EXPECT_NEAR(log_expit(0.0), -std::numbers::ln2, 1e-15);
  EXPECT_NEAR(log_expit(logit(1.503e-3)), std::log(1.503e-3), 1e-12);
  EXPECT_NEAR(std::log(1.503e-3), -6.500, 1e-3);
  EXPECT_NEAR(log_expit(-logit(0.999)), std::log(0.001), 1e-12);
  EXPECT_NEAR(log_expit(-800.0), -800.0, 1e-12);
  EXPECT_EQ(log_expit(800.0), 0.0);
}

TEST(ScoreEdges, ObservedAndInactive) {
  ModelConfig c;
  c.set_latent_dim(0);
  ParamState s = init_priors(c, 3, 3);
  s.mu = Gaussian1D::from_moments(-6.5, 1e-14);
  for (auto& a : s.alpha) a = Gaussian1D::from_moments(0.0, 1e-14);
  for (auto& b : s.beta) b = Gaussian1D::from_moments(0.0, 1e-14);
  const DyadSet edges({{0, 1}, {2, 1}});
  const std::vector<FactorRef> inactive{{1, 0, -1}};
  const auto sc = score_edges(s, 4, edges, 0.0, inactive);
  ASSERT_EQ(sc.size(), 3u);
  EXPECT_NEAR(sc[0].log_score, -6.5015, 1e-3);
  EXPECT_TRUE(sc[0].observed);
  EXPECT_EQ(sc[0].period, 4);
  EXPECT_NEAR(sc[0].prob, expit(-6.5), 1e-9);
  EXPECT_FALSE(sc[2].observed);
  EXPECT_NEAR(sc[2].log_score, std::log1p(-expit(-6.5)), 1e-9);
  for (const auto& e : sc) EXPECT_LE(e.log_score, 0.0);
}

TEST(EnumerateSubgraphs, SinglePath) {
  const std::vector<EdgeScore> sc{es(1, 2, -12), es(2, 3, -11), es(3, 4, -10)};
  const auto a = enumerate_subgraphs(sc, -10);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].kind, SubgraphKind::kPath3);
  EXPECT_EQ(a[0].log_score, -33.0);
  EXPECT_EQ(a[0].nodes, (std::array<NodeId, 4>{1, 2, 3, 4}));
}

TEST(EnumerateSubgraphs, ThresholdFiltersEdges) {
  const std::vector<EdgeScore> sc{es(1, 2, -12), es(2, 3, -9.9), es(3, 4, -10)};
  EXPECT_TRUE(enumerate_subgraphs(sc, -10).empty());
  EXPECT_THROW(enumerate_subgraphs(sc, 0.5), std::invalid_argument);
}

TEST(EnumerateSubgraphs, StarDedupIndependentOfOrder) {
  std::vector<EdgeScore> sc{es(0, 1, -11), es(0, 2, -15), es(0, 3, -12), es(0, 4, -20)};
  const auto a = enumerate_subgraphs(sc, -10);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].kind, SubgraphKind::kStar3);
  EXPECT_EQ(a[0].nodes, (std::array<NodeId, 4>{0, 2, 3, 4}));
  EXPECT_DOUBLE_EQ(a[0].log_score, -15.0 - 12.0 - 20.0);
  std::reverse(sc.begin(), sc.end());
  EXPECT_EQ(enumerate_subgraphs(sc, -10), a);
}

TEST(EnumerateSubgraphs, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  for (int g = 0; g < 50; ++g) {
    const NodeId n = 5 + static_cast<NodeId>(rng() % 8);
    std::uniform_int_distribution<NodeId> node(0, n - 1);
    std::uniform_real_distribution<double> score(-25.0, -0.5);
    std::set<std::pair<NodeId, NodeId>> used;
    std::vector<EdgeScore> sc;
    int below = 0;
    const int target = 4 + static_cast<int>(rng() % 27);
    while (below < target && used.size() < n * (n - 1u)) {
      const NodeId i = node(rng), j = node(rng);
      if (i == j || !used.insert({i, j}).second) continue;
      const double s = score(rng);
      const bool observed = rng() % 8 != 0;
      sc.push_back(es(i, j, s, observed, g % 2));
      if (observed && s <= -10) ++below;
    }
    ASSERT_LE(below, 30);
    const auto got = canonical(enumerate_subgraphs(sc, -10));
    const auto want = oracle::brute_force_subgraphs(sc, -10);
    ASSERT_EQ(got.size(), want.size()) << "graph " << g;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].kind, want[k].kind);
      EXPECT_EQ(got[k].nodes, want[k].nodes);
      EXPECT_EQ(got[k].period, want[k].period);
      EXPECT_EQ(got[k].log_score, want[k].log_score);
    }
    EXPECT_EQ(enumerate_subgraphs(sc, -10), enumerate_subgraphs(sc, -10));
  }
}

TEST(EnumerateSubgraphs, TinyGraphAllShapes) {
  // 6 nodes with a mix of shapes sharing edges.
  const std::vector<EdgeScore> sc{es(0, 1, -11), es(1, 2, -12), es(2, 3, -13), es(1, 3, -14),
                                  es(1, 4, -10.5), es(5, 1, -16), es(3, 0, -17)};
  const auto got = canonical(enumerate_subgraphs(sc, -10));
  const auto want = oracle::brute_force_subgraphs(sc, -10);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < got.size(); ++k) {
    EXPECT_EQ(got[k].nodes, want[k].nodes);
    EXPECT_EQ(got[k].log_score, want[k].log_score);
  }
}

TEST(RankAlarms, OrderAndTopK) {
  std::vector<SubgraphAlarm> a{
      {SubgraphKind::kFork, {1, 2, 3, 4}, 0, -30.0, 0},
      {SubgraphKind::kPath3, {1, 2, 3, 4}, 0, -30.0, 0},
      {SubgraphKind::kStar3, {0, 1, 2, 3}, 1, -50.0, 0},
      {SubgraphKind::kPath3, {0, 2, 3, 4}, 0, -30.0, 0},
  };
  const auto r = rank_alarms(a, 10);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].log_score, -50.0);
  EXPECT_EQ(r[1].kind, SubgraphKind::kPath3);
  EXPECT_EQ(r[1].nodes[0], 0u);
  EXPECT_EQ(r[2].kind, SubgraphKind::kPath3);
  EXPECT_EQ(r[3].kind, SubgraphKind::kFork);
  for (std::size_t k = 0; k < r.size(); ++k) EXPECT_EQ(r[k].rank, k + 1);
  EXPECT_EQ(rank_alarms(a, 2).size(), 2u);
  EXPECT_TRUE(rank_alarms({}, 5).empty());
}

TEST(SubgraphKind, StringRoundTrip) {
  for (auto k : {SubgraphKind::kPath3, SubgraphKind::kStar3, SubgraphKind::kFork}) {
    EXPECT_EQ(subgraph_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(subgraph_kind_from_string("ring"), std::invalid_argument);
}

TEST(ScanStatistics, TwoHopNeighbourhood) {
  // Chain 0-1-2-3-4-5: from 0 the ball reaches nodes 0..3 (two intermediates).
  const DyadSet e({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  const auto s = scan_statistics(e, 7);
  EXPECT_EQ(s[0], 3u);
  EXPECT_EQ(s[2], 5u);
  EXPECT_EQ(s[6], 0u);
}

TEST(ScanBaseline, ConstantHistoryFlagsNothing) {
  const DyadSet e({{0, 1}, {1, 2}});
  const auto st = scan_statistics(e, 4);
  const std::vector<std::vector<std::uint64_t>> hist(5, st);
  const ScanResult r = scan_stat_baseline(hist, e, 4, 3.0);
  for (double z : r.node_z) EXPECT_EQ(z, 0.0);
  EXPECT_TRUE(r.flagged_edges.empty());
  EXPECT_THROW(scan_stat_baseline(std::span(hist).first(1), e, 4, 3.0), std::invalid_argument);
}

TEST(ScanBaseline, JumpFlagsNodeAndAllItsEdges) {
  const std::size_t n = 60;
  std::vector<std::vector<std::uint64_t>> hist;
  for (int t = 0; t < 6; ++t) hist.push_back(std::vector<std::uint64_t>(n, t % 2));
  std::vector<Edge> e;
  for (NodeId j = 1; j <= 50; ++j) e.push_back({0, j});
  e.push_back({55, 56});
  const DyadSet cur(std::move(e));
  const ScanResult r = scan_stat_baseline(hist, cur, n, 3.0);
  EXPECT_TRUE(r.node_flagged[0]);
  std::size_t touching0 = 0;
  for (const Edge& x : r.flagged_edges) touching0 += (x.src == 0 || x.dst == 0);
  EXPECT_EQ(touching0, 50u);
  for (const Edge& x : cur) {
    const bool flagged = r.node_flagged[x.src] || r.node_flagged[x.dst];
    EXPECT_EQ(flagged, std::find(r.flagged_edges.begin(), r.flagged_edges.end(), x) !=
                           r.flagged_edges.end());
  }
  const auto scores = scan_edge_scores(r, cur.edges());
  std::set<double> levels(scores.begin(), scores.end());
  EXPECT_LE(levels.size(), n);
}
