#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "v2sim/ev.hpp"
#include "v2sim/microtraffic.hpp"
#include "v2sim/stations.hpp"

namespace v2sim {

// Daily periods [start, end) in seconds after midnight.
struct V2gWindow {
  std::vector<std::pair<double, double>> periods;

  bool contains(double t) const;
  void validate() const;  // throws ConfigError

  static V2gWindow from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct V2gParticipant {
  EvIndex ev;
  double p_v_kw;
};

struct V2gOffer {
  std::size_t station = 0;  // index into the station list
  std::string station_id;
  double capacity_kw = 0.0;
  std::vector<V2gParticipant> participants;
};

// Sum of V2G power of piled EVs with soc >= k_v; empty outside the window or
// for stations without V2G.
V2gOffer station_capacity(const ChargingStation& scs, std::size_t index,
                          std::span<const ElectricVehicle> fleet, const V2gWindow& window,
                          double t);

struct Allocation {
  EvIndex ev;
  double kw;
};

using V2gStrategy = std::function<std::vector<Allocation>(const V2gOffer&, double p_vcr)>;

// p_v * p_vcr / P_vc for every participant.
std::vector<Allocation> proportional_strategy(const V2gOffer& offer, double p_vcr);

// Runs `strategy` and enforces its contract: sum equals p_vcr, every EV within
// [0, p_v]. Throws CapacityExceeded when p_vcr > P_vc.
std::vector<Allocation> allocate(const V2gOffer& offer, double p_vcr,
                                 const V2gStrategy& strategy = proportional_strategy);

class StrategyRegistry {
 public:
  StrategyRegistry();  // "proportional" (alias "equal") preinstalled
  void add(const std::string& name, V2gStrategy s);
  const V2gStrategy& get(const std::string& name) const;  // throws ConfigError
  std::vector<std::string> names() const;

 private:
  std::map<std::string, V2gStrategy> strategies_;
};

struct DischargeReport {
  std::vector<Allocation> actual;  // grid-side kW delivered per EV this step
  double injected_kw = 0.0;        // sum of `actual`
  double battery_kwh = 0.0;        // energy drawn from batteries
  double shortfall_kw = 0.0;       // requested but undeliverable
};

// Discharges each EV by its allocation for dt seconds; battery energy drops by
// kw * dt / discharge_eff. Allocations an EV cannot cover (empty battery,
// absent from `present`) are re-spread once over the others, within their
// p_v; what remains is reported as shortfall.
DischargeReport apply_discharge(std::span<const Allocation> allocations,
                                std::span<ElectricVehicle> fleet, double dt,
                                std::span<const char> present = {});

}  // namespace v2sim
