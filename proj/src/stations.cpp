#include "v2sim/stations.hpp"

#include <algorithm>
#include <unordered_map>

#include "v2sim/error.hpp"

namespace v2sim {

FcsArrival fcs_arrive(ChargingStation& st, EvIndex ev) {
  if (!st.online) return FcsArrival::StationOffline;
  if (st.has_free_pile()) {
    st.occupants.push_back(ev);
    return FcsArrival::PileAssigned;
  }
  st.queue.push_back(ev);
  return FcsArrival::Queued;
}

ScsArrival scs_arrive(ChargingStation& st, EvIndex ev) {
  if (!st.online || !st.has_free_pile()) return ScsArrival::Rejected;
  st.occupants.push_back(ev);
  return ScsArrival::PileAssigned;
}

bool leave_station(ChargingStation& st, EvIndex ev) {
  if (auto it = std::find(st.occupants.begin(), st.occupants.end(), ev); it != st.occupants.end()) {
    st.occupants.erase(it);
    return true;
  }
  if (auto it = std::find(st.queue.begin(), st.queue.end(), ev); it != st.queue.end()) {
    st.queue.erase(it);
    return true;
  }
  return false;
}

FcsStepReport fcs_step(ChargingStation& st, std::span<ElectricVehicle> fleet, double dt) {
  FcsStepReport rep;
  if (!st.online) return rep;
  double total = 0.0;
  std::vector<EvIndex> stay;
  stay.reserve(st.occupants.size());
  for (EvIndex i : st.occupants) {
    auto& ev = fleet[i];
    const double offered = charging_power(ev, ChargeMode::Fast) * dt / 3600.0;
    const double taken = ev.soc < 1.0 ? charge_from_grid(ev, offered) : 0.0;
    if (taken > 0.0) {
      rep.delivered.push_back({i, taken});
      total += taken;
    }
    if (ev.soc >= 1.0)
      rep.departures.push_back(i);
    else
      stay.push_back(i);
  }
  st.occupants = std::move(stay);
  while (st.has_free_pile() && !st.queue.empty()) {
    st.occupants.push_back(st.queue.front());
    rep.promoted.push_back(st.queue.front());
    st.queue.pop_front();
  }
  rep.load_kw = total * 3600.0 / dt;
  return rep;
}

ScsStepReport scs_step(ChargingStation& st, std::span<ElectricVehicle> fleet, double dt,
                       bool only_below_kv, std::span<const char> skip) {
  ScsStepReport rep;
  if (!st.online) return rep;
  double total = 0.0;
  for (EvIndex i : st.occupants) {
    if (i < skip.size() && skip[i]) continue;
    auto& ev = fleet[i];
    if (ev.soc >= 1.0) continue;
    if (only_below_kv && ev.soc >= ev.k_v) continue;
    const double taken = charge_from_grid(ev, charging_power(ev, ChargeMode::Slow) * dt / 3600.0);
    if (taken > 0.0) {
      rep.delivered.push_back({i, taken});
      total += taken;
    }
  }
  rep.load_kw = total * 3600.0 / dt;
  return rep;
}

// ---- schedule ---------------------------------------------------------------

namespace {

struct ActionName {
  ScheduleAction action;
  const char* name;
};

constexpr ActionName kActions[] = {
    {ScheduleAction::SetOnline, "online"},
    {ScheduleAction::SetOffline, "offline"},
    {ScheduleAction::SetPrice, "price"},
    {ScheduleAction::SetPiles, "piles"},
    {ScheduleAction::SetDepartureStrategy, "strategy"},
};

ScheduleAction parse_action(const std::string& s) {
  for (const auto& a : kActions)
    if (s == a.name) return a.action;
  throw ConfigError("schedule: unknown action '" + s + "'");
}

const char* action_name(ScheduleAction a) {
  for (const auto& x : kActions)
    if (x.action == a) return x.name;
  return "?";
}

}  // namespace

std::vector<ScheduleEvent> schedule_from_json(const nlohmann::json& j) {
  std::vector<ScheduleEvent> out;
  try {
    const auto& arr = j.is_object() ? j.at("events") : j;
    for (const auto& e : arr) {
      ScheduleEvent ev;
      ev.t = e.at("t").get<double>();
      ev.station = e.value("station", std::string{});
      ev.action = parse_action(e.at("action").get<std::string>());
      switch (ev.action) {
        case ScheduleAction::SetPrice:
        case ScheduleAction::SetPiles:
          ev.value = e.at("value").get<double>();
          break;
        case ScheduleAction::SetDepartureStrategy:
          ev.text = e.at("value").get<std::string>();
          break;
        default:
          break;
      }
      if (ev.action == ScheduleAction::SetPiles && ev.value < 0)
        throw ConfigError("schedule: pile count must be >= 0");
      if (ev.action != ScheduleAction::SetDepartureStrategy && ev.station.empty())
        throw ConfigError(std::string("schedule: action '") + action_name(ev.action) +
                          "' needs a station");
      out.push_back(std::move(ev));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("schedule.json: ") + ex.what());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScheduleEvent& a, const ScheduleEvent& b) { return a.t < b.t; });
  return out;
}

nlohmann::json schedule_to_json(const std::vector<ScheduleEvent>& events) {
  auto arr = nlohmann::json::array();
  for (const auto& e : events) {
    nlohmann::json j{{"t", e.t}, {"action", action_name(e.action)}};
    if (!e.station.empty()) j["station"] = e.station;
    if (e.action == ScheduleAction::SetPrice || e.action == ScheduleAction::SetPiles)
      j["value"] = e.value;
    if (e.action == ScheduleAction::SetDepartureStrategy) j["value"] = e.text;
    arr.push_back(std::move(j));
  }
  return {{"events", arr}};
}

void apply_event(std::vector<ChargingStation>& stations, const ScheduleEvent& ev,
                 ScheduleOutcome& out) {
  if (ev.action == ScheduleAction::SetDepartureStrategy) {
    out.strategy = ev.text;
    out.applied.push_back(ev);
    return;
  }
  auto it = std::find_if(stations.begin(), stations.end(),
                         [&](const ChargingStation& s) { return s.id == ev.station; });
  if (it == stations.end()) throw UnknownStation("schedule: unknown station '" + ev.station + "'");
  const auto idx = static_cast<std::size_t>(it - stations.begin());
  auto& st = *it;
  switch (ev.action) {
    case ScheduleAction::SetOnline:
      st.online = true;
      break;
    case ScheduleAction::SetOffline:
      st.online = false;
      for (EvIndex e : st.occupants) out.evicted.emplace_back(idx, e);
      for (EvIndex e : st.queue) out.evicted.emplace_back(idx, e);
      st.occupants.clear();
      st.queue.clear();
      break;
    case ScheduleAction::SetPrice:
      st.upp = ev.value;
      break;
    case ScheduleAction::SetPiles:
      st.piles = static_cast<int>(ev.value);
      while (static_cast<int>(st.occupants.size()) > st.piles) {
        out.evicted.emplace_back(idx, st.occupants.back());
        st.occupants.pop_back();
      }
      while (st.online && st.has_free_pile() && !st.queue.empty()) {
        st.occupants.push_back(st.queue.front());
        st.queue.pop_front();
      }
      break;
    case ScheduleAction::SetDepartureStrategy:
      break;
  }
  out.applied.push_back(ev);
}

ScheduleCursor::ScheduleCursor(std::vector<ScheduleEvent> events) : events_(std::move(events)) {
  std::stable_sort(events_.begin(), events_.end(),
                   [](const ScheduleEvent& a, const ScheduleEvent& b) { return a.t < b.t; });
}

ScheduleOutcome ScheduleCursor::apply(std::vector<ChargingStation>& stations, double t) {
  if (t < last_t_) throw Error("schedule: time went backwards");
  last_t_ = t;
  ScheduleOutcome out;
  while (next_ < events_.size() && events_[next_].t <= t) apply_event(stations, events_[next_++], out);
  return out;
}

// ---- files ------------------------------------------------------------------

std::vector<ChargingStation> stations_from_json(const nlohmann::json& j, const RoadNetwork& net) {
  std::vector<ChargingStation> out;
  std::unordered_map<std::string, int> seen;
  std::vector<int> per_edge(net.edge_count(), 0);
  try {
    for (const auto& sj : j) {
      ChargingStation st;
      st.id = sj.at("id").get<std::string>();
      const auto kind = sj.at("kind").get<std::string>();
      if (kind == "FCS")
        st.kind = StationKind::FCS;
      else if (kind == "SCS")
        st.kind = StationKind::SCS;
      else
        throw ConfigError("station '" + st.id + "': kind must be FCS or SCS");
      st.edge = net.edge_index(sj.at("edge").get<std::string>());
      st.piles = sj.at("piles").get<int>();
      st.upp = sj.at("upp").get<double>();
      st.pdn_bus = sj.value("pdn_bus", std::string{});
      st.v2g_enabled = st.kind == StationKind::SCS && sj.value("v2g", false);
      st.online = sj.value("online", true);
      if (st.piles < 0) throw ConfigError("station '" + st.id + "': piles must be >= 0");
      if (st.upp < 0) throw ConfigError("station '" + st.id + "': upp must be >= 0");
      if (seen[st.id]++) throw ConfigError("duplicate station id '" + st.id + "'");
      if (per_edge[st.edge]++)
        throw ConfigError("edge '" + net.edge(st.edge).id + "' carries more than one station");
      out.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("stations.json: ") + ex.what());
  }
  return out;
}

nlohmann::json stations_to_json(const std::vector<ChargingStation>& stations,
                                const RoadNetwork& net) {
  auto arr = nlohmann::json::array();
  for (const auto& s : stations)
    arr.push_back({{"id", s.id},
                   {"kind", s.is_fast() ? "FCS" : "SCS"},
                   {"edge", net.edge(s.edge).id},
                   {"piles", s.piles},
                   {"upp", s.upp},
                   {"pdn_bus", s.pdn_bus},
                   {"v2g", s.v2g_enabled}});
  return arr;
}

std::vector<ChargingStation> infer_stations(const RoadNetwork& net, const StationDefaults& d,
                                            std::span<const std::string> buses) {
  std::vector<ChargingStation> fcs, scs;
  std::size_t next_bus = 0;
  auto bus = [&]() -> std::string {
    if (buses.empty()) return {};
    return buses[next_bus++ % buses.size()];
  };
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const auto& id = net.edge(e).id;
    ChargingStation st;
    st.edge = e;
    if (id.rfind("CS", 0) == 0) {
      st.id = id;
      st.kind = StationKind::FCS;
      st.piles = d.fcs_piles;
      st.upp = d.fcs_price;
      fcs.push_back(std::move(st));
    } else if (id.rfind("-CS", 0) != 0) {
      st.id = "scs_" + id;
      st.kind = StationKind::SCS;
      st.piles = d.scs_piles;
      st.upp = d.scs_price;
      st.v2g_enabled = d.scs_v2g;
      scs.push_back(std::move(st));
    }
  }
  for (auto& s : fcs) s.pdn_bus = bus();
  for (auto& s : scs) s.pdn_bus = bus();
  fcs.insert(fcs.end(), std::make_move_iterator(scs.begin()), std::make_move_iterator(scs.end()));
  return fcs;
}

}  // namespace v2sim
