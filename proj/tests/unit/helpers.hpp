#pragma once

#include <string>
#include <vector>

#include "v2sim/network.hpp"

namespace v2sim::test {

inline EdgeSpec road(std::string id, std::string from, std::string to, double len,
                     double speed = 10.0, int lanes = 1, bool dead_end = false) {
  return EdgeSpec{std::move(id), std::move(from), std::move(to), len, speed, lanes, dead_end};
}

inline std::vector<JunctionSpec> junctions(const std::vector<std::string>& ids) {
  std::vector<JunctionSpec> out;
  for (const auto& id : ids) out.push_back({id, std::nullopt});
  return out;
}

// Straight line of `n` junctions joined by one-way edges e0..e(n-2).
inline RoadNetwork corridor(int n, double len, double speed = 10.0, int lanes = 1) {
  std::vector<JunctionSpec> js;
  std::vector<EdgeSpec> es;
  for (int i = 0; i < n; ++i) js.push_back({"j" + std::to_string(i), Point{i * len, 0.0}});
  for (int i = 0; i + 1 < n; ++i)
    es.push_back(road("e" + std::to_string(i), "j" + std::to_string(i),
                      "j" + std::to_string(i + 1), len, speed, lanes));
  return RoadNetwork(std::move(js), std::move(es));
}

}  // namespace v2sim::test
