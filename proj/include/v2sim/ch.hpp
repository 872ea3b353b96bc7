#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "v2sim/network.hpp"
#include "v2sim/routing.hpp"

namespace v2sim {

// Contraction hierarchy over the edge graph (one node per road edge, arc
// e -> f weighted by w(f)). Immutable once built; queries are const and may
// run concurrently. Costs equal Dijkstra's on the weights it was built from;
// among equal-cost paths it may pick a different one than Dijkstra.
class ChOverlay {
 public:
  static ChOverlay build(const RoadNetwork& net, const EdgeWeights& w);

  std::optional<Route> query(EdgeIndex origin, EdgeIndex dest) const;

  std::size_t node_count() const { return rank_.size(); }
  std::size_t shortcut_count() const { return shortcuts_; }
  std::uint32_t rank(EdgeIndex e) const { return rank_[e]; }

 private:
  struct Arc {
    std::uint32_t to;
    double cost;
    std::int64_t mid;  // -1 for original arcs, else the contracted middle node
  };

  void unpack(std::uint32_t from, std::uint32_t to, std::vector<EdgeIndex>& out) const;
  const Arc* find_up(std::uint32_t from, std::uint32_t to) const;
  const Arc* find_down(std::uint32_t from, std::uint32_t to) const;

  std::vector<std::uint32_t> rank_;
  // Upward arcs (rank[to] > rank[from]) indexed by tail, and downward arcs
  // stored reversed: down_[v] holds arcs u -> v with rank[u] > rank[v].
  std::vector<std::vector<Arc>> up_;
  std::vector<std::vector<Arc>> down_;
  std::size_t shortcuts_ = 0;
};

}  // namespace v2sim
