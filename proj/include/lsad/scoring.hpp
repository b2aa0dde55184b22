#pragma once

#include "lsad/ep_engine.hpp"
#include "lsad/graph.hpp"
#include "lsad/model.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace lsad {

struct EdgeScore {
  NodeId sender = 0;
  NodeId receiver = 0;
  std::int64_t period = 0;
  bool observed = true;
  double log_score = 0.0;  // log predictive probability of the observed outcome
  double prob = 0.0;       // predictive edge probability
};

/// log expit(x), stable for large |x|.
double log_expit(double x);

/// Scores every edge of `edges` with log p-hat, and every dyad of `inactive`
/// with log(1 - p-hat). Case-control correction is applied.
std::vector<EdgeScore> score_edges(const ParamState& state, std::int64_t period,
                                   const DyadSet& edges, double periodicity_offset,
                                   std::span<const FactorRef> inactive = {});

enum class SubgraphKind : std::uint8_t { kPath3 = 0, kStar3 = 1, kFork = 2 };

std::string_view to_string(SubgraphKind kind);
SubgraphKind subgraph_kind_from_string(std::string_view s);

/// Node order per shape:
///   path3: a -> b -> c -> d             (dedup key: middle edge b -> c)
///   star3: hub -> l1, l2, l3 (l sorted)  (dedup key: hub)
///   fork:  a -> c, c -> l1, c -> l2     (dedup key: c)
/// log_score sums member edges in that order.
struct SubgraphAlarm {
  SubgraphKind kind = SubgraphKind::kPath3;
  std::array<NodeId, 4> nodes{};
  std::int64_t period = 0;
  double log_score = 0.0;
  std::size_t rank = 0;

  friend bool operator==(const SubgraphAlarm&, const SubgraphAlarm&) = default;
};

/// Builds 3-paths, 3-stars and forks from observed edges with
/// log_score <= threshold, keeping the lowest (log_score, nodes) per dedup key.
std::vector<SubgraphAlarm> enumerate_subgraphs(std::span<const EdgeScore> scored,
                                               double threshold);

/// Ascending by log_score; ties by (period, kind, nodes). Ranks start at 1.
std::vector<SubgraphAlarm> rank_alarms(std::vector<SubgraphAlarm> alarms, std::size_t top_k);

/// Locality statistic per node: number of directed edges among the nodes
/// reachable (ignoring direction) through at most two intermediate nodes.
std::vector<std::uint64_t> scan_statistics(const DyadSet& edges, std::size_t n_nodes);

struct ScanResult {
  std::vector<double> node_z;
  std::vector<bool> node_flagged;
  std::vector<Edge> flagged_edges;  // every current edge touching a flagged node
};

/// Trailing-window z-score of each node's scan statistic. `history` holds
/// the statistics of previous periods (oldest first, at least two).
ScanResult scan_stat_baseline(std::span<const std::vector<std::uint64_t>> history,
                              const DyadSet& current, std::size_t n_nodes,
                              double z_threshold);

/// Per-edge baseline anomaly score: max z of the two endpoints.
std::vector<double> scan_edge_scores(const ScanResult& result, std::span<const Edge> edges);

}  // namespace lsad
