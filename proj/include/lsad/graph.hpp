#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <vector>

namespace lsad {

using NodeId = std::uint32_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable sorted set of directed dyads.
class DyadSet {
 public:
  DyadSet() = default;
  explicit DyadSet(std::vector<Edge> edges) : edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  bool contains(NodeId i, NodeId j) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
  }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  const std::vector<Edge>& edges() const { return edges_; }

  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }

  DyadSet united(const DyadSet& other) const {
    std::vector<Edge> all;
    all.reserve(edges_.size() + other.edges_.size());
    std::set_union(edges_.begin(), edges_.end(), other.edges_.begin(), other.edges_.end(),
                   std::back_inserter(all));
    DyadSet out;
    out.edges_ = std::move(all);
    return out;
  }

 private:
  std::vector<Edge> edges_;
};

}  // namespace lsad
