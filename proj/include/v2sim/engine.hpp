#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2sim/decisions.hpp"
#include "v2sim/microtraffic.hpp"
#include "v2sim/pdn.hpp"
#include "v2sim/plugin.hpp"
#include "v2sim/record.hpp"
#include "v2sim/routing.hpp"
#include "v2sim/scenario.hpp"
#include "v2sim/stations.hpp"
#include "v2sim/v2g.hpp"

namespace v2sim {

inline constexpr const char* kVersion = "1.0.0";

// One simulation case: a scenario plus per-case overrides.
struct CaseSpec {
  std::string name;
  std::shared_ptr<const Scenario> scenario;
  std::uint64_t seed = 1;
  std::optional<int> days;
  std::optional<double> dt;
  std::optional<double> dt_pdn;
  std::optional<DepartureStrategy> strategy;
  std::optional<bool> v2g;
  std::optional<bool> pdn;
  std::optional<double> v2g_price;
  std::map<std::string, double> prices;   // station id -> $/kWh at start
  std::vector<ScheduleEvent> schedule;    // merged with the scenario schedule
  std::filesystem::path out_dir;          // empty: keep in memory only
};

// Scenario configuration with the case overrides applied; throws ConfigError.
ScenarioConfig effective_config(const CaseSpec& spec);

// Hash of everything that determines a run.
std::uint64_t case_hash(const CaseSpec& spec);

struct EvRuntime {
  EdgeIndex final_dest = 0;
  std::optional<std::size_t> fcs_target;  // station index
  std::optional<std::size_t> scs_pile;    // station index
};

// Shared state of a running case. Plugins read and modify it in their hooks.
struct World {
  World(const CaseSpec& spec, ScenarioConfig cfg);

  const Scenario& scenario;
  const RoadNetwork& net;
  const ScenarioConfig cfg;
  std::uint64_t seed;
  double t = 0.0;
  double dt;
  bool recording = false;

  std::vector<ElectricVehicle> fleet;
  std::vector<EvRuntime> runtime;
  std::vector<ChargingStation> stations;
  std::vector<std::optional<std::size_t>> scs_at_edge;  // per edge
  EdgeWeights weights;
  Router router;
  Traffic traffic;
  LowBatterySet low_battery;
  DepartureStrategy strategy;

  // Grid energy delivered per station since the last PDN boundary.
  std::vector<double> interval_kwh;
  // V2G-enabled SCS indices, the injection order of the PDN case.
  std::vector<std::size_t> v2g_stations;
  // Offers for the interval starting at the next PDN boundary.
  std::vector<V2gOffer> v2g_offers;
  // Per-EV discharge allocation (kW) of the current interval.
  std::vector<double> v2g_alloc;
  std::vector<char> discharging;
  // Grid-side V2G injection per station during the current step.
  std::vector<double> v2g_step_kw;
  std::optional<PdnSolution> pdn;

  RunRecord record;
  std::vector<std::string> warnings;

  // Load (kW) of each station bus for the interval that just ended.
  std::vector<StationLoad> interval_loads() const;
};

// Solves the feeder at every PDN boundary with the station loads averaged
// over the interval that just ended and the current V2G offers.
class PdnPlugin : public Plugin {
 public:
  explicit PdnPlugin(double interval_s) : interval_(interval_s) {}
  std::string name() const override { return "pdn"; }
  double step_interval() const override { return interval_; }
  void init(World& w) override;
  void pre_step(World& w, double t) override;

 private:
  double interval_;
  PdnCase base_;
  std::unique_ptr<PdnOptimizer> primary_;
  std::unique_ptr<PdnOptimizer> linear_;
  int consecutive_infeasible_ = 0;
};

// Collects offers before each PDN boundary, allocates the dispatched power
// and discharges the allocated EVs every step inside the window.
class V2gPlugin : public Plugin {
 public:
  explicit V2gPlugin(V2gStrategy strategy) : strategy_(std::move(strategy)) {}
  std::string name() const override { return "v2g"; }
  std::vector<std::string> dependencies() const override { return {"pdn"}; }
  void init(World& w) override;
  void pre_step(World& w, double t) override;
  void post_step(World& w, double t) override;

 private:
  void collect_offers(World& w, double t_next);
  V2gStrategy strategy_;
  std::vector<std::vector<Allocation>> allocations_;  // per v2g station
};

class Simulation {
 public:
  explicit Simulation(const CaseSpec& spec);
  ~Simulation();

  // Extra plugins registered after the built-in ones.
  void add_plugin(std::unique_ptr<Plugin> p);
  std::vector<std::string> plugin_order() const { return plugins_.order(); }

  RunRecord run();
  const World& world() const { return *world_; }

 private:
  void step(double t);
  void depart(EvIndex i, double t);
  void route_to_fcs(EvIndex i, std::size_t k, const SearchTree& tree, double t);
  void drive_to(EvIndex i, EdgeIndex dest, double t);
  void arrive_at_destination(EvIndex i);
  void lost_fcs(EvIndex i, double t);
  void to_low_battery(EvIndex i, double t);
  SearchTree tree_from(EdgeIndex e) const;
  void record_bucket_start(double t);
  void record_bucket_end(double t);

  CaseSpec spec_;
  std::unique_ptr<World> world_;
  PluginManager plugins_;
  std::unique_ptr<ScheduleCursor> schedule_;
  double start_ = 0.0;
  std::size_t fcs_count_ = 0;
  std::vector<double> bucket_fcs_, bucket_scs_charge_, bucket_scs_v2g_;
  std::vector<double> bucket_row_;
  double bucket_t_ = 0.0;
};

RunRecord run_case(const CaseSpec& spec);

struct CaseResult {
  std::string name;
  std::optional<RunRecord> record;
  std::string error;  // empty on success
  double seconds = 0.0;
};

// Runs every case on `workers` threads. Each case is single-threaded and owns
// its state; a failing case does not stop the others. Records are written to
// each non-empty out_dir, which must be distinct.
std::vector<CaseResult> run_parallel(const std::vector<CaseSpec>& specs, int workers);

// cases.json: {"cases": [{"name", "scenario", "seed", "days", "dt", "dt_pdn",
// "strategy", "v2g", "v2g_price", "prices", "schedule", "out"}]}. Relative
// paths resolve against `base`.
std::vector<CaseSpec> cases_from_json(const nlohmann::json& j, const std::filesystem::path& base);

}  // namespace v2sim
