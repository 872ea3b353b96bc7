#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2sim/ev.hpp"
#include "v2sim/network.hpp"
#include "v2sim/routing.hpp"
#include "v2sim/stations.hpp"

namespace v2sim {

enum class DepartureStrategy { Threshold, Distance };

DepartureStrategy parse_strategy(const std::string& s);  // throws ConfigError
const char* to_string(DepartureStrategy s);

struct SelectionConfig {
  double nearby_m = 10000.0;   // Euclidean radius around the EV
  double t_w = 1800.0;         // mean full-charge time, s
  bool count_charging = false; // n_w includes piled EVs as well as the queue
};

// k_r * L <= range. A missing path is unreachable.
bool reachable(const ElectricVehicle& ev, std::optional<double> path_length_m);

// f = omega * (T_d + n_w * T_w) / 3600 + c * (1 - soc) * capacity / charge_eff
// with omega in $/h and times in seconds.
double fcs_score(const ElectricVehicle& ev, double drive_time_s, int n_w, double t_w,
                 double upp);

int waiting_count(const ChargingStation& st, const SelectionConfig& cfg);

// Best nearby, online and reachable FCS seen from the root of `tree`, a
// fastest-path tree rooted at the EV's current edge. Ties go to the smallest
// station id. nullopt means no feasible FCS.
std::optional<std::size_t> select_fcs(const ElectricVehicle& ev, const RoadNetwork& net,
                                      const SearchTree& tree,
                                      std::span<const ChargingStation> stations,
                                      const SelectionConfig& cfg);

struct DeparturePlan {
  enum class Kind { Direct, ViaFcs, NoFeasibleFcs } kind = Kind::Direct;
  std::optional<std::size_t> fcs;
};

// Decides between driving straight to `dest` and detouring through an FCS.
// `tree` is rooted at the trip origin.
DeparturePlan plan_departure(const ElectricVehicle& ev, EdgeIndex dest, DepartureStrategy strategy,
                             const RoadNetwork& net, const SearchTree& tree,
                             std::span<const ChargingStation> stations,
                             const SelectionConfig& cfg);

enum class ArrivalAction { ChargeSlow, ParkOnly };

// Does not touch the station; the caller occupies the pile on ChargeSlow.
ArrivalAction on_arrival(const ElectricVehicle& ev, const ChargingStation* scs);

struct NearestFcs {
  std::size_t station;
  double drive_time_s;
};

// Online FCS with the smallest fastest-path time from the tree root.
std::optional<NearestFcs> nearest_online_fcs(const SearchTree& tree,
                                             std::span<const ChargingStation> stations);

struct LowBatteryEntry {
  EvIndex ev;
  EdgeIndex removed_at;
  double t_removed;
  std::optional<std::size_t> target;
  double t_teleport;
};

struct Teleport {
  EvIndex ev;
  std::size_t station;
  FcsArrival outcome;
};

// EVs taken off the road with an empty battery, waiting to reappear at the
// nearest FCS after twice the normal drive time.
class LowBatterySet {
 public:
  using NearestFn = std::function<std::optional<NearestFcs>(EdgeIndex)>;

  // When no FCS is online, `retry_s` is used as the timer instead.
  explicit LowBatterySet(double retry_s = 300.0) : retry_s_(retry_s) {}

  void add(EvIndex ev, EdgeIndex at, double t, const NearestFn& nearest);
  std::vector<Teleport> step(double t, std::vector<ChargingStation>& stations,
                             const NearestFn& nearest);

  bool contains(EvIndex ev) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<LowBatteryEntry>& entries() const { return entries_; }

 private:
  double retry_s_;
  std::vector<LowBatteryEntry> entries_;
};

}  // namespace v2sim
