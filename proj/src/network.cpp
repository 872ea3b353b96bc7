#include "v2sim/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "v2sim/error.hpp"

namespace v2sim {

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

RoadNetwork::RoadNetwork(std::vector<JunctionSpec> junctions, std::vector<EdgeSpec> edges) {
  junction_ids_.reserve(junctions.size());
  junction_pos_.reserve(junctions.size());
  has_coordinates_ = !junctions.empty();
  for (auto& j : junctions) {
    if (!junction_lookup_.emplace(j.id, static_cast<JunctionIndex>(junction_ids_.size())).second)
      throw ConfigError("duplicate junction id '" + j.id + "'");
    if (!j.pos) has_coordinates_ = false;
    junction_ids_.push_back(std::move(j.id));
    junction_pos_.push_back(j.pos);
  }

  edges_.reserve(edges.size());
  for (auto& spec : edges) {
    auto from = find_junction(spec.from);
    auto to = find_junction(spec.to);
    if (!from || !to)
      throw ConfigError("edge '" + spec.id + "' references unknown junction");
    if (!(spec.length_m > 0.0))
      throw ConfigError("edge '" + spec.id + "': length_m must be > 0");
    if (!(spec.speed_mps > 0.0))
      throw ConfigError("edge '" + spec.id + "': speed_mps must be > 0");
    if (spec.lanes < 1)
      throw ConfigError("edge '" + spec.id + "': lanes must be >= 1");
    if (!edge_lookup_.emplace(spec.id, static_cast<EdgeIndex>(edges_.size())).second)
      throw ConfigError("duplicate edge id '" + spec.id + "'");
    edges_.push_back(Edge{std::move(spec.id), *from, *to, spec.length_m, spec.speed_mps,
                          spec.lanes, spec.dead_end});
    max_speed_ = std::max(max_speed_, edges_.back().speed_limit);
  }

  // CSR adjacency by junction.
  const auto nj = junction_ids_.size();
  out_offsets_.assign(nj + 1, 0);
  for (const auto& e : edges_) ++out_offsets_[e.from + 1];
  std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
  out_list_.resize(edges_.size());
  {
    auto cursor = out_offsets_;
    for (EdgeIndex i = 0; i < edges_.size(); ++i) out_list_[cursor[edges_[i].from]++] = i;
  }

  // Edge-graph successors with the U-turn rule.
  succ_offsets_.assign(edges_.size() + 1, 0);
  for (EdgeIndex i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    for (EdgeIndex f : out_edges(e.to)) {
      const bool is_reverse = edges_[f].to == e.from;
      if (is_reverse && !e.dead_end) continue;
      succ_list_.push_back(f);
    }
    succ_offsets_[i + 1] = static_cast<std::uint32_t>(succ_list_.size());
  }

  std::vector<EdgeIndex> order(edges_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](EdgeIndex a, EdgeIndex b) { return edges_[a].id < edges_[b].id; });
  id_rank_.resize(edges_.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;

  if (has_coordinates_) {
    for (const auto& e : edges_) {
      const double d = distance(*junction_pos_[e.from], *junction_pos_[e.to]);
      if (d > 0.0) heuristic_scale_ = std::min(heuristic_scale_, e.length / d);
    }
  }
}

std::optional<EdgeIndex> RoadNetwork::find_edge(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

EdgeIndex RoadNetwork::edge_index(std::string_view id) const {
  auto e = find_edge(id);
  if (!e) throw ConfigError("unknown edge '" + std::string(id) + "'");
  return *e;
}

std::optional<JunctionIndex> RoadNetwork::find_junction(std::string_view id) const {
  auto it = junction_lookup_.find(std::string(id));
  if (it == junction_lookup_.end()) return std::nullopt;
  return it->second;
}

std::span<const EdgeIndex> RoadNetwork::out_edges(JunctionIndex j) const {
  return {out_list_.data() + out_offsets_[j], out_list_.data() + out_offsets_[j + 1]};
}

std::span<const EdgeIndex> RoadNetwork::successors(EdgeIndex e) const {
  return {succ_list_.data() + succ_offsets_[e], succ_list_.data() + succ_offsets_[e + 1]};
}

Point RoadNetwork::edge_end(EdgeIndex e) const {
  const auto& p = junction_pos_[edges_[e].to];
  if (!p) throw ConfigError("network has no junction coordinates");
  return *p;
}

RoadNetwork RoadNetwork::from_json(const nlohmann::json& j) {
  std::vector<JunctionSpec> junctions;
  std::vector<EdgeSpec> edges;
  try {
    for (const auto& jj : j.at("junctions")) {
      JunctionSpec s{jj.at("id").get<std::string>(), std::nullopt};
      if (jj.contains("x") && jj.contains("y"))
        s.pos = Point{jj.at("x").get<double>(), jj.at("y").get<double>()};
      junctions.push_back(std::move(s));
    }
    for (const auto& ej : j.at("edges")) {
      EdgeSpec s;
      s.id = ej.at("id").get<std::string>();
      s.from = ej.at("from").get<std::string>();
      s.to = ej.at("to").get<std::string>();
      s.length_m = ej.at("length_m").get<double>();
      s.speed_mps = ej.at("speed_mps").get<double>();
      s.lanes = ej.value("lanes", 1);
      s.dead_end = ej.value("dead_end", false);
      edges.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("network.json: ") + ex.what());
  }
  return RoadNetwork(std::move(junctions), std::move(edges));
}

nlohmann::json RoadNetwork::to_json() const {
  nlohmann::json j;
  j["junctions"] = nlohmann::json::array();
  for (std::size_t i = 0; i < junction_ids_.size(); ++i) {
    nlohmann::json jj{{"id", junction_ids_[i]}};
    if (junction_pos_[i]) {
      jj["x"] = junction_pos_[i]->x;
      jj["y"] = junction_pos_[i]->y;
    }
    j["junctions"].push_back(std::move(jj));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : edges_) {
    j["edges"].push_back({{"id", e.id},
                          {"from", junction_ids_[e.from]},
                          {"to", junction_ids_[e.to]},
                          {"length_m", e.length},
                          {"speed_mps", e.speed_limit},
                          {"lanes", e.lanes},
                          {"dead_end", e.dead_end}});
  }
  return j;
}

EdgeWeights::EdgeWeights(const RoadNetwork& net, WeightMode mode, double smoothing)
    : mode_(mode), smoothing_(smoothing) {
  const auto n = net.edge_count();
  w_.resize(n);
  floor_.resize(n);
  for (EdgeIndex e = 0; e < n; ++e) {
    floor_[e] = net.edge(e).free_flow_time();
    w_[e] = mode == WeightMode::Shortest ? net.edge(e).length : floor_[e];
  }
}

void EdgeWeights::observe(EdgeIndex e, double seconds) {
  if (mode_ == WeightMode::Shortest) return;
  w_[e] = std::max(floor_[e], (1.0 - smoothing_) * w_[e] + smoothing_ * seconds);
}

void EdgeWeights::set_apt(EdgeIndex e, double seconds) {
  if (mode_ == WeightMode::Shortest) return;
  w_[e] = std::max(floor_[e], seconds);
}

}  // namespace v2sim
