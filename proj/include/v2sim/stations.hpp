#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2sim/ev.hpp"
#include "v2sim/microtraffic.hpp"
#include "v2sim/network.hpp"

namespace v2sim {

enum class StationKind { FCS, SCS };

struct ChargingStation {
  std::string id;
  StationKind kind = StationKind::SCS;
  EdgeIndex edge = 0;
  int piles = 0;
  double upp = 0.0;  // $/kWh
  bool online = true;
  std::string pdn_bus;
  bool v2g_enabled = false;
  std::vector<EvIndex> occupants;
  std::deque<EvIndex> queue;  // FCS only

  bool has_free_pile() const { return static_cast<int>(occupants.size()) < piles; }
  bool is_fast() const { return kind == StationKind::FCS; }
};

enum class FcsArrival { PileAssigned, Queued, StationOffline };
enum class ScsArrival { PileAssigned, Rejected };

FcsArrival fcs_arrive(ChargingStation& st, EvIndex ev);
ScsArrival scs_arrive(ChargingStation& st, EvIndex ev);

// Releases a pile (or queue slot); returns false when the EV was not there.
bool leave_station(ChargingStation& st, EvIndex ev);

struct EnergyDelivery {
  EvIndex ev;
  double grid_kwh;
};

struct FcsStepReport {
  std::vector<EnergyDelivery> delivered;
  std::vector<EvIndex> departures;  // fully charged, pile freed
  std::vector<EvIndex> promoted;    // moved from the queue onto a pile
  double load_kw = 0.0;             // grid-side mean power over the step
};

// Charges every piled EV for dt seconds, releases those that reach soc 1 and
// refills freed piles from the queue head within the same step.
FcsStepReport fcs_step(ChargingStation& st, std::span<ElectricVehicle> fleet, double dt);

struct ScsStepReport {
  std::vector<EnergyDelivery> delivered;
  double load_kw = 0.0;
};

// Slow charging: occupants charge towards soc 1 and keep their pile
// afterwards. With `only_below_kv` (V2G window active) an occupant charges
// only while its soc is below its own k_v. `skip`, indexed by EV, marks EVs
// that must not charge this step because they are discharging.
ScsStepReport scs_step(ChargingStation& st, std::span<ElectricVehicle> fleet, double dt,
                       bool only_below_kv, std::span<const char> skip = {});

// ---- runtime schedule -------------------------------------------------------

enum class ScheduleAction { SetOnline, SetOffline, SetPrice, SetPiles, SetDepartureStrategy };

struct ScheduleEvent {
  double t = 0.0;
  std::string station;  // empty for global actions
  ScheduleAction action = ScheduleAction::SetOnline;
  double value = 0.0;   // price or pile count
  std::string text;     // strategy name
};

std::vector<ScheduleEvent> schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const std::vector<ScheduleEvent>& events);

struct ScheduleOutcome {
  std::vector<ScheduleEvent> applied;
  // EVs that lost their place (offline station, fewer piles) and must pick a
  // new FCS or give up the pile.
  std::vector<std::pair<std::size_t, EvIndex>> evicted;  // (station index, ev)
  std::optional<std::string> strategy;
};

// Applies time-ordered events one by one while t >= event time. Calls must
// use non-decreasing t.
class ScheduleCursor {
 public:
  explicit ScheduleCursor(std::vector<ScheduleEvent> events);

  ScheduleOutcome apply(std::vector<ChargingStation>& stations, double t);
  bool done() const { return next_ >= events_.size(); }
  const std::vector<ScheduleEvent>& events() const { return events_; }

 private:
  std::vector<ScheduleEvent> events_;
  std::size_t next_ = 0;
  double last_t_ = -std::numeric_limits<double>::infinity();
};

// Applies one event to a station set; exposed for direct use and tests.
void apply_event(std::vector<ChargingStation>& stations, const ScheduleEvent& ev,
                 ScheduleOutcome& out);

// ---- files ----------------------------------------------------------------

struct StationDefaults {
  int fcs_piles = 10;
  int scs_piles = 10;
  double fcs_price = 1.5;
  double scs_price = 0.5;
  bool scs_v2g = true;
};

std::vector<ChargingStation> stations_from_json(const nlohmann::json& j, const RoadNetwork& net);
nlohmann::json stations_to_json(const std::vector<ChargingStation>& stations,
                                const RoadNetwork& net);

// FCS edges are those whose id starts with "CS"; every other edge gets one
// SCS, except the "-CS..." return halves of FCS roads. PDN buses are assigned
// round-robin over `buses` (skipping none when empty).
std::vector<ChargingStation> infer_stations(const RoadNetwork& net, const StationDefaults& d,
                                            std::span<const std::string> buses);

}  // namespace v2sim
