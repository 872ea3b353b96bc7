#include "v2sim/decisions.hpp"

#include <algorithm>

#include "v2sim/error.hpp"

namespace v2sim {

DepartureStrategy parse_strategy(const std::string& s) {
  if (s == "threshold") return DepartureStrategy::Threshold;
  if (s == "distance") return DepartureStrategy::Distance;
  throw ConfigError("strategy must be 'threshold' or 'distance', got '" + s + "'");
}

const char* to_string(DepartureStrategy s) {
  return s == DepartureStrategy::Threshold ? "threshold" : "distance";
}

bool reachable(const ElectricVehicle& ev, std::optional<double> path_length_m) {
  if (!path_length_m) return false;
  return ev.k_r * *path_length_m <= ev.range_m();
}

double fcs_score(const ElectricVehicle& ev, double drive_time_s, int n_w, double t_w,
                 double upp) {
  const double hours = (drive_time_s + n_w * t_w) / 3600.0;
  const double purchase = (1.0 - ev.soc) * ev.capacity() / ev.charge_eff();
  return ev.omega * hours + upp * purchase;
}

int waiting_count(const ChargingStation& st, const SelectionConfig& cfg) {
  int n = static_cast<int>(st.queue.size());
  if (cfg.count_charging) n += static_cast<int>(st.occupants.size());
  return n;
}

std::optional<std::size_t> select_fcs(const ElectricVehicle& ev, const RoadNetwork& net,
                                      const SearchTree& tree,
                                      std::span<const ChargingStation> stations,
                                      const SelectionConfig& cfg) {
  const bool geo = net.has_coordinates();
  const Point here = geo ? net.edge_end(tree.origin) : Point{};
  std::optional<std::size_t> best;
  double best_f = 0.0;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& st = stations[i];
    if (!st.is_fast() || !st.online || !tree.reached(st.edge)) continue;
    if (geo && distance(here, net.edge_end(st.edge)) >= cfg.nearby_m) continue;
    if (!reachable(ev, tree.length[st.edge])) continue;
    const double f = fcs_score(ev, tree.cost[st.edge], waiting_count(st, cfg), cfg.t_w, st.upp);
    if (!best || f < best_f || (f == best_f && st.id < stations[*best].id)) {
      best = i;
      best_f = f;
    }
  }
  return best;
}

DeparturePlan plan_departure(const ElectricVehicle& ev, EdgeIndex dest, DepartureStrategy strategy,
                             const RoadNetwork& net, const SearchTree& tree,
                             std::span<const ChargingStation> stations,
                             const SelectionConfig& cfg) {
  bool detour = false;
  if (strategy == DepartureStrategy::Threshold) {
    detour = ev.soc < ev.k_f;
  } else {
    std::optional<double> len;
    if (tree.reached(dest)) len = tree.length[dest];
    detour = !reachable(ev, len);
  }
  DeparturePlan plan;
  if (!detour) return plan;
  plan.fcs = select_fcs(ev, net, tree, stations, cfg);
  plan.kind = plan.fcs ? DeparturePlan::Kind::ViaFcs : DeparturePlan::Kind::NoFeasibleFcs;
  return plan;
}

ArrivalAction on_arrival(const ElectricVehicle& ev, const ChargingStation* scs) {
  if (ev.soc < ev.k_s && scs && scs->online && scs->has_free_pile())
    return ArrivalAction::ChargeSlow;
  return ArrivalAction::ParkOnly;
}

std::optional<NearestFcs> nearest_online_fcs(const SearchTree& tree,
                                             std::span<const ChargingStation> stations) {
  std::optional<NearestFcs> best;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto& st = stations[i];
    if (!st.is_fast() || !st.online || !tree.reached(st.edge)) continue;
    const double t = tree.cost[st.edge];
    if (!best || t < best->drive_time_s ||
        (t == best->drive_time_s && st.id < stations[best->station].id))
      best = NearestFcs{i, t};
  }
  return best;
}

void LowBatterySet::add(EvIndex ev, EdgeIndex at, double t, const NearestFn& nearest) {
  LowBatteryEntry e{ev, at, t, std::nullopt, t + retry_s_};
  if (auto n = nearest(at)) {
    e.target = n->station;
    e.t_teleport = t + 2.0 * n->drive_time_s;
  }
  entries_.push_back(e);
}

std::vector<Teleport> LowBatterySet::step(double t, std::vector<ChargingStation>& stations,
                                          const NearestFn& nearest) {
  std::vector<Teleport> out;
  std::vector<LowBatteryEntry> keep;
  for (auto& e : entries_) {
    if (t < e.t_teleport) {
      keep.push_back(e);
      continue;
    }
    if (e.target && stations[*e.target].online) {
      out.push_back({e.ev, *e.target, fcs_arrive(stations[*e.target], e.ev)});
      continue;
    }
    if (auto n = nearest(e.removed_at)) {
      e.target = n->station;
      e.t_teleport = t + 2.0 * n->drive_time_s;
    } else {
      e.target.reset();
      e.t_teleport = t + retry_s_;
    }
    e.t_removed = t;
    keep.push_back(e);
  }
  entries_ = std::move(keep);
  return out;
}

bool LowBatterySet::contains(EvIndex ev) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const LowBatteryEntry& e) { return e.ev == ev; });
}

}  // namespace v2sim
