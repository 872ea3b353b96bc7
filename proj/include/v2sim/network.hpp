#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace v2sim {

using EdgeIndex = std::uint32_t;
using JunctionIndex = std::uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

struct JunctionSpec {
  std::string id;
  std::optional<Point> pos;
};

// Edge description with junctions referenced by id, as found in network.json.
struct EdgeSpec {
  std::string id;
  std::string from;
  std::string to;
  double length_m = 0.0;
  double speed_mps = 0.0;
  int lanes = 1;
  bool dead_end = false;
};

struct Edge {
  std::string id;
  JunctionIndex from = 0;
  JunctionIndex to = 0;
  double length = 0.0;       // m
  double speed_limit = 0.0;  // m/s
  int lanes = 1;
  bool dead_end = false;     // U-turn permitted at the downstream end

  double free_flow_time() const { return length / speed_limit; }
};

// Directed road graph. Immutable after construction, so a single instance
// can be shared by any number of concurrent readers.
//
// Routing happens on the edge graph: a state is "standing at the end of
// edge e", and e may continue onto any outgoing edge of e.to except its own
// reverse, which is only allowed when e is a dead end.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  RoadNetwork(std::vector<JunctionSpec> junctions, std::vector<EdgeSpec> edges);

  static RoadNetwork from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::size_t junction_count() const { return junction_ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Edge& edge(EdgeIndex e) const { return edges_[e]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& junction_id(JunctionIndex j) const { return junction_ids_[j]; }

  std::optional<EdgeIndex> find_edge(std::string_view id) const;
  EdgeIndex edge_index(std::string_view id) const;  // throws ConfigError
  std::optional<JunctionIndex> find_junction(std::string_view id) const;

  std::span<const EdgeIndex> out_edges(JunctionIndex j) const;
  std::span<const EdgeIndex> successors(EdgeIndex e) const;

  bool has_coordinates() const { return has_coordinates_; }
  const std::optional<Point>& junction_pos(JunctionIndex j) const { return junction_pos_[j]; }
  // Downstream end of the edge; requires coordinates.
  Point edge_end(EdgeIndex e) const;

  double max_speed_limit() const { return max_speed_; }
  // Largest s such that s * euclid(from, to) <= length for every edge, capped
  // at 1. Scales A* heuristics so they stay consistent even when declared
  // lengths are shorter than the straight line.
  double heuristic_scale() const { return heuristic_scale_; }

  // Position of e's id in lexicographic order of all edge ids.
  std::uint32_t id_rank(EdgeIndex e) const { return id_rank_[e]; }

 private:
  std::vector<std::string> junction_ids_;
  std::vector<std::optional<Point>> junction_pos_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, EdgeIndex> edge_lookup_;
  std::unordered_map<std::string, JunctionIndex> junction_lookup_;
  std::vector<std::uint32_t> out_offsets_;
  std::vector<EdgeIndex> out_list_;
  std::vector<std::uint32_t> succ_offsets_;
  std::vector<EdgeIndex> succ_list_;
  std::vector<std::uint32_t> id_rank_;
  bool has_coordinates_ = false;
  double max_speed_ = 0.0;
  double heuristic_scale_ = 1.0;
};

enum class WeightMode { Shortest, Fastest };

// Per-edge routing weights. Shortest mode is the edge length and never
// changes. Fastest mode tracks the average passing time (APT) of each edge
// as an exponential moving average of observed traversals, floored at the
// free-flow time.
class EdgeWeights {
 public:
  static constexpr double kDefaultSmoothing = 0.25;

  EdgeWeights(const RoadNetwork& net, WeightMode mode,
              double smoothing = kDefaultSmoothing);

  WeightMode mode() const { return mode_; }
  double weight(EdgeIndex e) const { return w_[e]; }
  std::span<const double> values() const { return w_; }

  // Feeds one traversal-time observation (seconds). No-op in Shortest mode.
  void observe(EdgeIndex e, double seconds);
  // Overwrites an APT directly (tests, scenario presets); floored likewise.
  void set_apt(EdgeIndex e, double seconds);
  double free_flow(EdgeIndex e) const { return floor_[e]; }

 private:
  WeightMode mode_;
  double smoothing_;
  std::vector<double> w_;
  std::vector<double> floor_;
};

}  // namespace v2sim
