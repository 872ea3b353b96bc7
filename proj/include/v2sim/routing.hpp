#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "v2sim/network.hpp"

namespace v2sim {

enum class Algorithm { Dijkstra, AStar, CH };

// An edge path from origin to destination, both included. `cost` is the
// summed weight of every edge after the origin: a vehicle starts at the
// downstream end of its origin edge and finishes at the end of the last one.
struct Route {
  std::vector<EdgeIndex> edges;
  double cost = 0.0;
};

double path_length(const RoadNetwork& net, std::span<const EdgeIndex> path);
double path_time(const EdgeWeights& weights, std::span<const EdgeIndex> path);

// Equal-cost paths are broken toward the lexicographically smallest sequence
// of edge ids.
std::optional<Route> dijkstra_route(const RoadNetwork& net, const EdgeWeights& w,
                                    EdgeIndex origin, EdgeIndex dest);

// Euclidean / max-speed heuristic (scaled to stay consistent); falls back to
// Dijkstra when the network has no coordinates. `use_heuristic = false`
// runs the same search with h = 0.
std::optional<Route> astar_route(const RoadNetwork& net, const EdgeWeights& w,
                                 EdgeIndex origin, EdgeIndex dest,
                                 bool use_heuristic = true);

class ChOverlay;

// Dispatches to one of the three algorithms. CH builds a throwaway overlay
// when none is supplied.
std::optional<Route> route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest,
                           const EdgeWeights& w, Algorithm algo,
                           const ChOverlay* overlay = nullptr);

// Full single-source tree: cost beyond origin to every edge and the length
// of the chosen (cost-optimal, lexicographically smallest) path.
struct SearchTree {
  std::vector<double> cost;    // +inf when unreachable
  std::vector<double> length;  // metres after the origin
  std::vector<EdgeIndex> parent;
  EdgeIndex origin = 0;

  bool reached(EdgeIndex e) const;
  std::vector<EdgeIndex> path_to(EdgeIndex e) const;
};

SearchTree shortest_path_tree(const RoadNetwork& net, const EdgeWeights& w, EdgeIndex origin);

// Routing service for a simulation case. Dijkstra and A* always read the live
// weights; CH overlays are cached per weight mode and, for Fastest weights,
// rebuilt once `ch_rebuild_interval` simulated seconds have elapsed.
class Router {
 public:
  Router(const RoadNetwork& net, Algorithm algo, double ch_rebuild_interval = 900.0);
  ~Router();
  Router(Router&&) noexcept;
  Router& operator=(Router&&) noexcept;

  std::optional<Route> route(EdgeIndex origin, EdgeIndex dest, const EdgeWeights& w,
                             double now);
  Algorithm algorithm() const { return algo_; }
  int ch_builds() const { return ch_builds_; }

 private:
  const RoadNetwork* net_;
  Algorithm algo_;
  double rebuild_interval_;
  std::unique_ptr<ChOverlay> shortest_;
  std::unique_ptr<ChOverlay> fastest_;
  double fastest_built_at_ = 0.0;
  int ch_builds_ = 0;
};

}  // namespace v2sim
