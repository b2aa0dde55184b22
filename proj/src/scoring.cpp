#include "lsad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>

namespace lsad {

double log_expit(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

std::vector<EdgeScore> score_edges(const ParamState& state, std::int64_t period,
                                   const DyadSet& edges, double periodicity_offset,
                                   std::span<const FactorRef> inactive) {
  const StateMoments moments(state);
  std::vector<EdgeScore> out;
  out.reserve(edges.size() + inactive.size());
  auto score = [&](NodeId i, NodeId j, bool observed) {
    const PsiMoments m = moments.psi(i, j, periodicity_offset, /*corrected=*/true);
    const double z = m.mean / std::sqrt(1.0 + std::numbers::pi * m.var / 8.0);
    EdgeScore s;
    s.sender = i;
    s.receiver = j;
    s.period = period;
    s.observed = observed;
    s.prob = expit(z);
    s.log_score = observed ? log_expit(z) : log_expit(-z);
    out.push_back(s);
  };
  for (const Edge& e : edges) score(e.src, e.dst, true);
  for (const FactorRef& f : inactive) score(f.sender, f.receiver, false);
  return out;
}

std::string_view to_string(SubgraphKind kind) {
  switch (kind) {
    case SubgraphKind::kPath3:
      return "path3";
    case SubgraphKind::kStar3:
      return "star3";
    case SubgraphKind::kFork:
      return "fork";
  }
  return "unknown";
}

SubgraphKind subgraph_kind_from_string(std::string_view s) {
  if (s == "path3") return SubgraphKind::kPath3;
  if (s == "star3") return SubgraphKind::kStar3;
  if (s == "fork") return SubgraphKind::kFork;
  throw std::invalid_argument("unknown subgraph kind: " + std::string(s));
}

namespace {

// Candidate lists are cut at this length; the optimum never needs more than
// the best three, the slack only guards near-ties under rounding.
constexpr std::size_t kTopK = 6;

struct Neighbor {
  double score;
  NodeId node;
};

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return std::tie(a.score, a.node) < std::tie(b.score, b.node);
}

bool alarm_better(const SubgraphAlarm& a, const SubgraphAlarm& b) {
  return std::tie(a.log_score, a.nodes) < std::tie(b.log_score, b.nodes);
}

// Best `k` neighbors of a sorted list, skipping `exclude`.
template <class Pred>
std::vector<Neighbor> top_k(const std::vector<Neighbor>& sorted, std::size_t k, Pred exclude) {
  std::vector<Neighbor> out;
  for (const Neighbor& n : sorted) {
    if (exclude(n.node)) continue;
    out.push_back(n);
    if (out.size() == k) break;
  }
  return out;
}

void enumerate_period(std::int64_t period, const std::vector<EdgeScore>& edges,
                      std::vector<SubgraphAlarm>& out) {
  std::unordered_map<NodeId, std::vector<Neighbor>> outs;
  std::unordered_map<NodeId, std::vector<Neighbor>> ins;
  for (const EdgeScore& e : edges) {
    outs[e.sender].push_back({e.log_score, e.receiver});
    ins[e.receiver].push_back({e.log_score, e.sender});
  }
  for (auto& [node, list] : outs) std::sort(list.begin(), list.end(), neighbor_less);
  for (auto& [node, list] : ins) std::sort(list.begin(), list.end(), neighbor_less);
  static const std::vector<Neighbor> kEmpty;
  auto out_of = [&](NodeId n) -> const std::vector<Neighbor>& {
    auto it = outs.find(n);
    return it == outs.end() ? kEmpty : it->second;
  };
  auto in_of = [&](NodeId n) -> const std::vector<Neighbor>& {
    auto it = ins.find(n);
    return it == ins.end() ? kEmpty : it->second;
  };

  // 3-stars, one per hub.
  for (const auto& [hub, list] : outs) {
    const auto leaves = top_k(list, kTopK, [hub = hub](NodeId n) { return n == hub; });
    if (leaves.size() < 3) continue;
    SubgraphAlarm best;
    bool have = false;
    for (std::size_t x = 0; x < leaves.size(); ++x) {
      for (std::size_t y = x + 1; y < leaves.size(); ++y) {
        for (std::size_t z = y + 1; z < leaves.size(); ++z) {
          std::array<Neighbor, 3> l{leaves[x], leaves[y], leaves[z]};
          std::sort(l.begin(), l.end(),
                    [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
          SubgraphAlarm c{SubgraphKind::kStar3,
                          {hub, l[0].node, l[1].node, l[2].node},
                          period,
                          l[0].score + l[1].score + l[2].score,
                          0};
          if (!have || alarm_better(c, best)) {
            best = c;
            have = true;
          }
        }
      }
    }
    out.push_back(best);
  }

  // Forks, one per center: a -> c, c -> l1, c -> l2.
  for (const auto& [center, list] : outs) {
    const auto targets = top_k(list, kTopK, [c = center](NodeId n) { return n == c; });
    if (targets.size() < 2) continue;
    const auto sources = top_k(in_of(center), kTopK, [c = center](NodeId n) { return n == c; });
    SubgraphAlarm best;
    bool have = false;
    for (const Neighbor& a : sources) {
      for (std::size_t x = 0; x < targets.size(); ++x) {
        for (std::size_t y = x + 1; y < targets.size(); ++y) {
          Neighbor l1 = targets[x];
          Neighbor l2 = targets[y];
          if (a.node == l1.node || a.node == l2.node) continue;
          if (l2.node < l1.node) std::swap(l1, l2);
          SubgraphAlarm c{SubgraphKind::kFork,
                          {a.node, center, l1.node, l2.node},
                          period,
                          a.score + l1.score + l2.score,
                          0};
          if (!have || alarm_better(c, best)) {
            best = c;
            have = true;
          }
        }
      }
    }
    if (have) out.push_back(best);
  }

  // 3-paths, one per middle edge b -> c.
  for (const EdgeScore& mid : edges) {
    const NodeId b = mid.sender;
    const NodeId c = mid.receiver;
    if (b == c) continue;
    const auto heads = top_k(in_of(b), kTopK, [b, c](NodeId n) { return n == b || n == c; });
    if (heads.empty()) continue;
    const auto tails = top_k(out_of(c), kTopK, [b, c](NodeId n) { return n == b || n == c; });
    SubgraphAlarm best;
    bool have = false;
    for (const Neighbor& a : heads) {
      for (const Neighbor& d : tails) {
        if (a.node == d.node) continue;
        SubgraphAlarm cand{SubgraphKind::kPath3,
                           {a.node, b, c, d.node},
                           period,
                           a.score + mid.log_score + d.score,
                           0};
        if (!have || alarm_better(cand, best)) {
          best = cand;
          have = true;
        }
      }
    }
    if (have) out.push_back(best);
  }
}

}  // namespace

std::vector<SubgraphAlarm> enumerate_subgraphs(std::span<const EdgeScore> scored,
                                               double threshold) {
  if (threshold > 0.0) throw std::invalid_argument("enumerate_subgraphs: threshold must be <= 0");
  // Keep sub-threshold observed edges, one per (period, dyad).
  std::map<std::tuple<std::int64_t, NodeId, NodeId>, EdgeScore> kept;
  for (const EdgeScore& e : scored) {
    if (!e.observed || !(e.log_score <= threshold)) continue;
    auto key = std::make_tuple(e.period, e.sender, e.receiver);
    auto [it, inserted] = kept.emplace(key, e);
    if (!inserted && e.log_score < it->second.log_score) it->second = e;
  }
  std::map<std::int64_t, std::vector<EdgeScore>> by_period;
  for (const auto& [key, e] : kept) by_period[e.period].push_back(e);

  std::vector<SubgraphAlarm> out;
  for (const auto& [period, edges] : by_period) enumerate_period(period, edges, out);
  std::sort(out.begin(), out.end(), [](const SubgraphAlarm& a, const SubgraphAlarm& b) {
    return std::tie(a.period, a.kind, a.nodes) < std::tie(b.period, b.kind, b.nodes);
  });
  return out;
}

std::vector<SubgraphAlarm> rank_alarms(std::vector<SubgraphAlarm> alarms, std::size_t top_k) {
  std::sort(alarms.begin(), alarms.end(), [](const SubgraphAlarm& a, const SubgraphAlarm& b) {
    return std::tie(a.log_score, a.period, a.kind, a.nodes) <
           std::tie(b.log_score, b.period, b.kind, b.nodes);
  });
  if (alarms.size() > top_k) alarms.resize(top_k);
  for (std::size_t r = 0; r < alarms.size(); ++r) alarms[r].rank = r + 1;
  return alarms;
}

std::vector<std::uint64_t> scan_statistics(const DyadSet& edges, std::size_t n_nodes) {
  std::vector<std::vector<NodeId>> undirected(n_nodes);
  std::vector<std::vector<NodeId>> out(n_nodes);
  for (const Edge& e : edges) {
    if (e.src >= n_nodes || e.dst >= n_nodes) {
      throw std::out_of_range("scan_statistics: node out of range");
    }
    out[e.src].push_back(e.dst);
    if (e.src != e.dst) {
      undirected[e.src].push_back(e.dst);
      undirected[e.dst].push_back(e.src);
    }
  }
  for (auto& l : undirected) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }

  std::vector<std::uint64_t> stats(n_nodes, 0);
  std::vector<std::size_t> stamp(n_nodes, 0);
  std::vector<NodeId> members;
  std::vector<NodeId> frontier, next;
  for (std::size_t v = 0; v < n_nodes; ++v) {
    if (undirected[v].empty() && out[v].empty()) continue;
    const std::size_t mark = v + 1;
    members.assign(1, static_cast<NodeId>(v));
    stamp[v] = mark;
    frontier.assign(1, static_cast<NodeId>(v));
    for (int depth = 0; depth < 3 && !frontier.empty(); ++depth) {
      next.clear();
      for (NodeId x : frontier) {
        for (NodeId w : undirected[x]) {
          if (stamp[w] == mark) continue;
          stamp[w] = mark;
          members.push_back(w);
          next.push_back(w);
        }
      }
      frontier.swap(next);
    }
    std::uint64_t count = 0;
    for (NodeId x : members) {
      for (NodeId w : out[x]) {
        if (stamp[w] == mark) ++count;
      }
    }
    stats[v] = count;
  }
  return stats;
}

ScanResult scan_stat_baseline(std::span<const std::vector<std::uint64_t>> history,
                              const DyadSet& current, std::size_t n_nodes,
                              double z_threshold) {
  if (history.size() < 2) {
    throw std::invalid_argument("scan_stat_baseline: need at least two periods of history");
  }
  for (const auto& h : history) {
    if (h.size() != n_nodes) throw std::invalid_argument("scan_stat_baseline: history size mismatch");
  }
  const std::vector<std::uint64_t> now = scan_statistics(current, n_nodes);
  ScanResult r;
  r.node_z.assign(n_nodes, 0.0);
  r.node_flagged.assign(n_nodes, false);
  const double w = static_cast<double>(history.size());
  for (std::size_t v = 0; v < n_nodes; ++v) {
    double mean = 0.0;
    for (const auto& h : history) mean += static_cast<double>(h[v]);
    mean /= w;
    double ss = 0.0;
    for (const auto& h : history) {
      const double d = static_cast<double>(h[v]) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (w - 1.0));
    const double diff = static_cast<double>(now[v]) - mean;
    double z = 0.0;
    if (sd > 0.0) {
      z = diff / sd;
    } else if (diff != 0.0) {
      z = diff > 0.0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    }
    r.node_z[v] = z;
    r.node_flagged[v] = z > z_threshold;
  }
  for (const Edge& e : current) {
    if (r.node_flagged[e.src] || r.node_flagged[e.dst]) r.flagged_edges.push_back(e);
  }
  return r;
}

std::vector<double> scan_edge_scores(const ScanResult& result, std::span<const Edge> edges) {
  std::vector<double> s;
  s.reserve(edges.size());
  for (const Edge& e : edges) s.push_back(std::max(result.node_z.at(e.src), result.node_z.at(e.dst)));
  return s;
}

}  // namespace lsad
