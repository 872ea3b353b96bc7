#include "v2sim/routing.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "v2sim/ch.hpp"

namespace v2sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr EdgeIndex kNone = std::numeric_limits<EdgeIndex>::max();

struct Label {
  double key;
  double g;
  EdgeIndex node;
};

struct LabelGreater {
  bool operator()(const Label& a, const Label& b) const {
    if (a.key != b.key) return a.key > b.key;
    if (a.g != b.g) return a.g > b.g;
    return a.node > b.node;
  }
};

std::vector<EdgeIndex> chain(const std::vector<EdgeIndex>& parent, EdgeIndex origin,
                             EdgeIndex e) {
  std::vector<EdgeIndex> out;
  for (EdgeIndex cur = e;; cur = parent[cur]) {
    out.push_back(cur);
    if (cur == origin) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Is path(origin..a) lexicographically smaller (by edge id) than path(origin..b)?
bool lex_less(const RoadNetwork& net, const std::vector<EdgeIndex>& parent, EdgeIndex origin,
              EdgeIndex a, EdgeIndex b) {
  if (a == b) return false;
  const auto pa = chain(parent, origin, a);
  const auto pb = chain(parent, origin, b);
  return std::lexicographical_compare(
      pa.begin(), pa.end(), pb.begin(), pb.end(),
      [&](EdgeIndex x, EdgeIndex y) { return net.id_rank(x) < net.id_rank(y); });
}

// Best-first search on the edge graph. With h == 0 this is Dijkstra; with a
// consistent h it is A*. Heap ties on key are broken by smaller g, so every
// cost-tight predecessor of a node is settled before the node itself and the
// lexicographic parent choice is final when the node is popped.
template <class Heuristic>
void search(const RoadNetwork& net, const EdgeWeights& w, EdgeIndex origin,
            std::optional<EdgeIndex> target, Heuristic&& h, std::vector<double>& dist,
            std::vector<EdgeIndex>& parent) {
  const auto n = net.edge_count();
  dist.assign(n, kInf);
  parent.assign(n, kNone);
  std::vector<char> closed(n, 0);
  std::priority_queue<Label, std::vector<Label>, LabelGreater> pq;
  dist[origin] = 0.0;
  parent[origin] = origin;
  pq.push({h(origin), 0.0, origin});
  while (!pq.empty()) {
    const Label top = pq.top();
    pq.pop();
    const EdgeIndex u = top.node;
    if (closed[u] || top.g > dist[u]) continue;
    closed[u] = 1;
    if (target && u == *target) break;
    for (EdgeIndex v : net.successors(u)) {
      const double nd = dist[u] + w.weight(v);
      if (nd < dist[v]) {
        dist[v] = nd;
        parent[v] = u;
        closed[v] = 0;  // reopen; only matters if h is slightly inconsistent
        pq.push({nd + h(v), nd, v});
      } else if (nd == dist[v] && !closed[v] && v != origin &&
                 lex_less(net, parent, origin, u, parent[v])) {
        parent[v] = u;
      }
    }
  }
}

std::optional<Route> extract(const std::vector<double>& dist, const std::vector<EdgeIndex>& parent,
                             EdgeIndex origin, EdgeIndex dest) {
  if (dist[dest] == kInf) return std::nullopt;
  return Route{chain(parent, origin, dest), dist[dest]};
}

}  // namespace

double path_length(const RoadNetwork& net, std::span<const EdgeIndex> path) {
  double s = 0.0;
  for (EdgeIndex e : path) s += net.edge(e).length;
  return s;
}

double path_time(const EdgeWeights& weights, std::span<const EdgeIndex> path) {
  double s = 0.0;
  for (EdgeIndex e : path) s += weights.weight(e);
  return s;
}

std::optional<Route> dijkstra_route(const RoadNetwork& net, const EdgeWeights& w,
                                    EdgeIndex origin, EdgeIndex dest) {
  if (origin == dest) return Route{{origin}, 0.0};
  std::vector<double> dist;
  std::vector<EdgeIndex> parent;
  search(net, w, origin, dest, [](EdgeIndex) { return 0.0; }, dist, parent);
  return extract(dist, parent, origin, dest);
}

std::optional<Route> astar_route(const RoadNetwork& net, const EdgeWeights& w,
                                 EdgeIndex origin, EdgeIndex dest, bool use_heuristic) {
  if (origin == dest) return Route{{origin}, 0.0};
  std::vector<double> dist;
  std::vector<EdgeIndex> parent;
  if (!use_heuristic || !net.has_coordinates()) {
    search(net, w, origin, dest, [](EdgeIndex) { return 0.0; }, dist, parent);
    return extract(dist, parent, origin, dest);
  }
  // The (1 - 1e-6) margin keeps f non-decreasing along tight arcs despite
  // rounding in the Euclidean term.
  double factor = net.heuristic_scale() * (1.0 - 1e-6);
  if (w.mode() == WeightMode::Fastest) factor /= net.max_speed_limit();
  const Point goal = net.edge_end(dest);
  search(
      net, w, origin, dest,
      [&](EdgeIndex e) { return factor * distance(net.edge_end(e), goal); }, dist, parent);
  return extract(dist, parent, origin, dest);
}

std::optional<Route> route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest,
                           const EdgeWeights& w, Algorithm algo, const ChOverlay* overlay) {
  switch (algo) {
    case Algorithm::Dijkstra:
      return dijkstra_route(net, w, origin, dest);
    case Algorithm::AStar:
      return astar_route(net, w, origin, dest);
    case Algorithm::CH:
      if (overlay) return overlay->query(origin, dest);
      return ChOverlay::build(net, w).query(origin, dest);
  }
  return std::nullopt;
}

bool SearchTree::reached(EdgeIndex e) const { return cost[e] != kInf; }

std::vector<EdgeIndex> SearchTree::path_to(EdgeIndex e) const {
  if (!reached(e)) return {};
  return chain(parent, origin, e);
}

SearchTree shortest_path_tree(const RoadNetwork& net, const EdgeWeights& w, EdgeIndex origin) {
  SearchTree t;
  t.origin = origin;
  search(net, w, origin, std::nullopt, [](EdgeIndex) { return 0.0; }, t.cost, t.parent);
  // Lengths follow the final parent pointers; settle order is cost order, so
  // a single pass in cost order suffices.
  std::vector<EdgeIndex> order;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e)
    if (t.cost[e] != kInf) order.push_back(e);
  std::sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) {
    return t.cost[a] != t.cost[b] ? t.cost[a] < t.cost[b] : a < b;
  });
  t.length.assign(net.edge_count(), kInf);
  t.length[origin] = 0.0;
  for (EdgeIndex e : order) {
    if (e == origin) continue;
    t.length[e] = t.length[t.parent[e]] + net.edge(e).length;
  }
  return t;
}

Router::Router(const RoadNetwork& net, Algorithm algo, double ch_rebuild_interval)
    : net_(&net), algo_(algo), rebuild_interval_(ch_rebuild_interval) {}

Router::~Router() = default;
Router::Router(Router&&) noexcept = default;
Router& Router::operator=(Router&&) noexcept = default;

std::optional<Route> Router::route(EdgeIndex origin, EdgeIndex dest, const EdgeWeights& w,
                                   double now) {
  if (algo_ != Algorithm::CH) return v2sim::route(*net_, origin, dest, w, algo_);
  if (w.mode() == WeightMode::Shortest) {
    if (!shortest_) {
      shortest_ = std::make_unique<ChOverlay>(ChOverlay::build(*net_, w));
      ++ch_builds_;
    }
    return shortest_->query(origin, dest);
  }
  if (!fastest_ || now - fastest_built_at_ >= rebuild_interval_) {
    fastest_ = std::make_unique<ChOverlay>(ChOverlay::build(*net_, w));
    fastest_built_at_ = now;
    ++ch_builds_;
  }
  return fastest_->query(origin, dest);
}

}  // namespace v2sim
