#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2sim/decisions.hpp"
#include "v2sim/ev.hpp"
#include "v2sim/microtraffic.hpp"
#include "v2sim/network.hpp"
#include "v2sim/pdn.hpp"
#include "v2sim/routing.hpp"
#include "v2sim/stations.hpp"
#include "v2sim/tripgen.hpp"
#include "v2sim/v2g.hpp"

namespace v2sim {

// scenario.json; every field optional.
struct ScenarioConfig {
  int days = 2;
  double dt = 1.0;
  double dt_pdn = 300.0;
  double record_interval = 60.0;
  bool warmup = false;
  DepartureStrategy strategy = DepartureStrategy::Threshold;
  Algorithm routing = Algorithm::AStar;
  double ch_rebuild_s = 900.0;
  SelectionConfig selection;
  StepConfig traffic;
  bool pdn = true;
  bool pdn_linear = false;
  bool v2g = true;
  V2gWindow v2g_window{{{8 * 3600.0, 10 * 3600.0}, {13 * 3600.0, 16 * 3600.0}}};
  std::string v2g_strategy = "proportional";
  std::optional<double> v2g_price;  // overrides the PDN default
  std::size_t fleet_size = 500;     // used when evs.json is absent
  CoefficientRanges coefficients;

  void validate() const;  // throws ConfigError naming the field
  static ScenarioConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

Algorithm parse_algorithm(const std::string& s);
const char* to_string(Algorithm a);

// Everything a case needs, loaded from a scenario directory:
//   network.json (required), scenario.json, stations.json, prototypes.json,
//   evs.json, placemodel.json, pdn.json, schedule.json, trips.json.
// Missing optional files fall back to inferred stations, the reference
// prototypes, a generated fleet, the default place model, the bundled 33-bus
// feeder, an empty schedule and generated trips.
struct Scenario {
  std::filesystem::path dir;
  ScenarioConfig cfg;
  RoadNetwork net;
  std::vector<EvPrototype> prototypes;
  std::vector<ChargingStation> stations;
  std::optional<std::vector<EvRecord>> evs;
  PlaceModel places;
  std::optional<std::vector<TripChain>> trips;
  PdnCase pdn;
  std::vector<ScheduleEvent> schedule;
  std::uint64_t content_hash = 0;

  // Cross-file checks: station buses exist, fleet prototypes and edges exist,
  // trip edges exist, schedule stations exist.
  void validate() const;
};

Scenario load_scenario(const std::filesystem::path& dir);
void save_scenario(const Scenario& s, const std::filesystem::path& dir);

nlohmann::json read_json(const std::filesystem::path& p);  // ConfigError on failure
void write_json(const std::filesystem::path& p, const nlohmann::json& j);

// Home edges for generated fleets: every edge that carries an SCS.
std::vector<std::string> home_edges(const Scenario& s);

std::vector<EvRecord> generate_evs(const Scenario& s, std::uint64_t seed);
std::vector<TripChain> generate_trips(const Scenario& s, const std::vector<EvRecord>& evs,
                                      std::uint64_t seed, int days);

}  // namespace v2sim
