#include "v2sim/engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include "v2sim/error.hpp"
#include "v2sim/rng.hpp"

namespace v2sim {

namespace {

constexpr double kDay = 86400.0;

bool on_grid(double t, double interval) {
  const double r = std::fmod(t, interval);
  return std::abs(r) < 1e-9 || interval - std::abs(r) < 1e-9;
}

std::size_t fleet_size_of(const Scenario& s, const ScenarioConfig& cfg) {
  return s.evs ? s.evs->size() : cfg.fleet_size;
}

}  // namespace

ScenarioConfig effective_config(const CaseSpec& spec) {
  if (!spec.scenario) throw ConfigError("case '" + spec.name + "' has no scenario");
  ScenarioConfig c = spec.scenario->cfg;
  if (spec.days) c.days = *spec.days;
  if (spec.dt) c.dt = *spec.dt;
  if (spec.dt_pdn) c.dt_pdn = *spec.dt_pdn;
  if (spec.strategy) c.strategy = *spec.strategy;
  if (spec.pdn) {
    c.pdn = *spec.pdn;
    if (!c.pdn && !spec.v2g) c.v2g = false;
  }
  if (spec.v2g) c.v2g = *spec.v2g;
  if (spec.v2g_price) c.v2g_price = *spec.v2g_price;
  c.traffic.dt = c.dt;
  c.validate();
  return c;
}

std::uint64_t case_hash(const CaseSpec& spec) {
  const auto cfg = effective_config(spec);
  std::string s = std::to_string(spec.scenario->content_hash) + '\n' + cfg.to_json().dump() +
                  '\n' + std::to_string(spec.seed) + '\n';
  for (const auto& [k, v] : spec.prices) s += k + '=' + format_number(v) + '\n';
  s += schedule_to_json(spec.schedule).dump();
  return fnv1a(s);
}

// ---- world --------------------------------------------------------------------

World::World(const CaseSpec& spec, ScenarioConfig c)
    : scenario(*spec.scenario),
      net(scenario.net),
      cfg(std::move(c)),
      seed(spec.seed),
      dt(cfg.dt),
      stations(scenario.stations),
      weights(net, WeightMode::Fastest),
      router(net, cfg.routing, cfg.ch_rebuild_s),
      traffic(net, cfg.traffic, derive_seed(spec.seed, "traffic"), fleet_size_of(scenario, cfg)),
      low_battery(300.0),
      strategy(cfg.strategy) {
  const double warm = cfg.warmup ? kDay : 0.0;
  const auto records = scenario.evs ? *scenario.evs : generate_evs(scenario, seed);
  fleet.reserve(records.size());
  for (const auto& r : records) {
    auto proto = std::find_if(scenario.prototypes.begin(), scenario.prototypes.end(),
                              [&](const EvPrototype& p) { return p.id == r.prototype; });
    if (proto == scenario.prototypes.end())
      throw ConfigError("ev '" + r.id + "' references unknown prototype '" + r.prototype + "'");
    ElectricVehicle ev;
    ev.id = r.id;
    ev.proto = &*proto;
    ev.soc = r.soc;
    ev.omega = r.omega;
    ev.k_r = r.k_r;
    ev.k_s = r.k_s;
    ev.k_f = r.k_f;
    ev.k_v = r.k_v;
    ev.home = net.edge_index(r.home);
    ev.location = ev.home;
    fleet.push_back(std::move(ev));
  }

  const int trip_days = cfg.days + (cfg.warmup ? 1 : 0);
  const auto chains =
      scenario.trips ? *scenario.trips : generate_trips(scenario, records, seed, trip_days);
  std::map<std::string, const TripChain*> by_ev;
  for (const auto& ch : chains) by_ev[ch.ev] = &ch;
  for (auto& ev : fleet) {
    auto it = by_ev.find(ev.id);
    if (it == by_ev.end()) continue;
    for (const auto& tr : it->second->trips)
      ev.trips.push_back({tr.depart - warm, net.edge_index(tr.origin), net.edge_index(tr.dest)});
    record.counters.trip_overflow_days += static_cast<std::uint64_t>(it->second->overflow_days);
  }

  for (const auto& [id, price] : spec.prices) {
    auto st = std::find_if(stations.begin(), stations.end(),
                           [&](const ChargingStation& s) { return s.id == id; });
    if (st == stations.end()) throw UnknownStation("price override for unknown station '" + id + "'");
    st->upp = price;
  }

  runtime.resize(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) runtime[i].final_dest = fleet[i].home;
  scs_at_edge.assign(net.edge_count(), std::nullopt);
  for (std::size_t k = 0; k < stations.size(); ++k)
    if (!stations[k].is_fast()) scs_at_edge[stations[k].edge] = k;
  interval_kwh.assign(stations.size(), 0.0);
  v2g_step_kw.assign(stations.size(), 0.0);
  if (cfg.v2g)
    for (std::size_t k = 0; k < stations.size(); ++k)
      if (!stations[k].is_fast() && stations[k].v2g_enabled) v2g_stations.push_back(k);
  v2g_alloc.assign(fleet.size(), 0.0);
  discharging.assign(fleet.size(), 0);
}

std::vector<StationLoad> World::interval_loads() const {
  std::vector<StationLoad> out;
  for (std::size_t k = 0; k < stations.size(); ++k) {
    if (stations[k].pdn_bus.empty()) continue;
    out.push_back({stations[k].pdn_bus, interval_kwh[k] * 3600.0 / cfg.dt_pdn, 0.0});
  }
  return out;
}

// ---- PDN plugin -----------------------------------------------------------------

void PdnPlugin::init(World& w) {
  base_ = w.scenario.pdn;
  base_.interval_s = w.cfg.dt_pdn;
  if (w.cfg.v2g_price) base_.v2g_price = *w.cfg.v2g_price;
  std::vector<V2gInjection> inj;
  for (auto k : w.v2g_stations)
    inj.push_back({w.stations[k].id, w.stations[k].pdn_bus, 0.0, base_.v2g_price});
  const auto structure = attach_loads(base_, {}, inj);
  primary_ = std::make_unique<PdnOptimizer>(structure, w.cfg.pdn_linear);
  if (!w.cfg.pdn_linear) linear_ = std::make_unique<PdnOptimizer>(structure, true);

  auto& tab = w.record.pdn;
  tab.header = {"t", "objective", "solver", "iterations", "cone_gap"};
  for (const auto& g : base_.gens) tab.header.push_back("gen_" + g.id + "_kw");
  for (const auto& b : base_.buses) tab.header.push_back("v_" + b.id);
  for (const auto& i : inj) tab.header.push_back("v2g_" + i.station + "_kw");
}

void PdnPlugin::pre_step(World& w, double t) {
  const auto loads = w.interval_loads();
  std::fill(w.interval_kwh.begin(), w.interval_kwh.end(), 0.0);
  std::vector<V2gInjection> inj;
  for (std::size_t j = 0; j < w.v2g_stations.size(); ++j) {
    const auto& st = w.stations[w.v2g_stations[j]];
    const double cap = j < w.v2g_offers.size() ? w.v2g_offers[j].capacity_kw : 0.0;
    inj.push_back({st.id, st.pdn_bus, cap, base_.v2g_price});
  }
  const auto c = attach_loads(base_, loads, inj);

  int solver = 0;  // 0 cone relaxation, 1 linear model, 2 no solution
  w.pdn.reset();
  try {
    auto sol = primary_->solve(c);
    if (sol.status == socp::Status::MaxIterations && linear_) {
      w.warnings.push_back("t=" + format_number(t) + ": pdn iteration limit, linear fallback");
      sol = linear_->solve(c);
      if (w.recording) ++w.record.counters.pdn_fallbacks;
    }
    solver = sol.linearized ? 1 : 0;
    w.pdn = std::move(sol);
    consecutive_infeasible_ = 0;
  } catch (const Infeasible& ex) {
    ++w.record.counters.pdn_infeasible;
    if (++consecutive_infeasible_ >= 2)
      throw Infeasible("pdn infeasible in two consecutive intervals (t=" + format_number(t) +
                       "): " + ex.what());
    w.warnings.push_back("t=" + format_number(t) + ": " + ex.what());
    solver = 2;
    if (linear_) {
      try {
        w.pdn = linear_->solve(c);
        solver = 1;
      } catch (const Infeasible&) {
      }
    }
  }

  if (!w.recording) return;
  ++w.record.counters.pdn_solves;
  std::vector<double> row{t, 0.0, static_cast<double>(solver), 0.0, 0.0};
  if (w.pdn) {
    row[1] = w.pdn->objective;
    row[3] = w.pdn->iterations;
    row[4] = w.pdn->cone_gap;
    for (double p : w.pdn->p_gen_kw) row.push_back(p);
    for (double v : w.pdn->v) row.push_back(std::sqrt(std::max(v, 0.0)));
    for (double p : w.pdn->p_v2g_kw) row.push_back(p);
  } else {
    row.resize(w.record.pdn.header.size(), 0.0);
  }
  w.record.pdn.rows.push_back(std::move(row));
}

// ---- V2G plugin -----------------------------------------------------------------

void V2gPlugin::init(World& w) {
  allocations_.assign(w.v2g_stations.size(), {});
  collect_offers(w, w.t);
}

void V2gPlugin::collect_offers(World& w, double t_next) {
  w.v2g_offers.clear();
  for (auto k : w.v2g_stations)
    w.v2g_offers.push_back(station_capacity(w.stations[k], k, w.fleet, w.cfg.v2g_window, t_next));
}

void V2gPlugin::pre_step(World& w, double t) {
  if (on_grid(t, w.cfg.dt_pdn)) {
    std::fill(w.v2g_alloc.begin(), w.v2g_alloc.end(), 0.0);
    std::fill(w.discharging.begin(), w.discharging.end(), 0);
    for (std::size_t j = 0; j < w.v2g_stations.size(); ++j) {
      const auto& offer = w.v2g_offers[j];
      const double dispatched = w.pdn && j < w.pdn->p_v2g_kw.size() ? w.pdn->p_v2g_kw[j] : 0.0;
      const double p_vcr = std::clamp(dispatched, 0.0, offer.capacity_kw);
      allocations_[j] = allocate(offer, p_vcr, strategy_);
      double sum = 0.0;
      for (const auto& a : allocations_[j]) {
        w.v2g_alloc[a.ev] = a.kw;
        w.discharging[a.ev] = a.kw > 0.0;
        sum += a.kw;
      }
      if (w.recording && (offer.capacity_kw > 0.0 || p_vcr > 0.0))
        w.record.v2g.push_back({t, offer.station_id, offer.capacity_kw, p_vcr, sum,
                                static_cast<int>(offer.participants.size())});
    }
  }
  if (!w.cfg.v2g_window.contains(t)) return;
  std::vector<char> present(w.fleet.size(), 0);
  for (std::size_t j = 0; j < w.v2g_stations.size(); ++j) {
    const auto k = w.v2g_stations[j];
    bool any = false;
    for (const auto& a : allocations_[j]) {
      const auto& rt = w.runtime[a.ev];
      const bool here = w.fleet[a.ev].status == EvStatus::ChargingSlow && rt.scs_pile == k;
      present[a.ev] = here;
      if (!here) w.discharging[a.ev] = 0;
      any = any || a.kw > 0.0;
    }
    if (!any) continue;
    const auto rep = apply_discharge(allocations_[j], w.fleet, w.dt, present);
    w.v2g_step_kw[k] = rep.injected_kw;
    w.record.ledger.v2g_grid_kwh += rep.injected_kw * w.dt / 3600.0;
    w.record.ledger.v2g_drawn_kwh += rep.battery_kwh;
  }
}

void V2gPlugin::post_step(World& w, double t) {
  if (on_grid(t + w.dt, w.cfg.dt_pdn)) collect_offers(w, t + w.dt);
}

// ---- simulation -----------------------------------------------------------------

Simulation::Simulation(const CaseSpec& spec) : spec_(spec) {
  auto cfg = effective_config(spec_);
  world_ = std::make_unique<World>(spec_, std::move(cfg));
  auto& w = *world_;
  if (w.cfg.pdn) plugins_.register_plugin(std::make_unique<PdnPlugin>(w.cfg.dt_pdn));
  if (w.cfg.v2g) {
    StrategyRegistry reg;
    plugins_.register_plugin(std::make_unique<V2gPlugin>(reg.get(w.cfg.v2g_strategy)));
  }
  auto events = spec_.scenario->schedule;
  for (const auto& e : spec_.schedule) {
    if (!e.station.empty() &&
        std::none_of(w.stations.begin(), w.stations.end(),
                     [&](const ChargingStation& s) { return s.id == e.station; }))
      throw UnknownStation("schedule references unknown station '" + e.station + "'");
    events.push_back(e);
  }
  schedule_ = std::make_unique<ScheduleCursor>(std::move(events));
  start_ = w.cfg.warmup ? -kDay : 0.0;
  for (const auto& st : w.stations) fcs_count_ += st.is_fast();
}

Simulation::~Simulation() = default;

void Simulation::add_plugin(std::unique_ptr<Plugin> p) { plugins_.register_plugin(std::move(p)); }

SearchTree Simulation::tree_from(EdgeIndex e) const {
  return shortest_path_tree(world_->net, world_->weights, e);
}

void Simulation::arrive_at_destination(EvIndex i) {
  auto& w = *world_;
  auto& ev = w.fleet[i];
  auto& rt = w.runtime[i];
  rt.fcs_target.reset();
  ev.status = EvStatus::Parking;
  const auto k = w.scs_at_edge[ev.location];
  const ChargingStation* scs = k ? &w.stations[*k] : nullptr;
  if (on_arrival(ev, scs) == ArrivalAction::ChargeSlow &&
      scs_arrive(w.stations[*k], i) == ScsArrival::PileAssigned) {
    ev.status = EvStatus::ChargingSlow;
    rt.scs_pile = *k;
  }
}

void Simulation::drive_to(EvIndex i, EdgeIndex dest, double t) {
  auto& w = *world_;
  auto& ev = w.fleet[i];
  w.runtime[i].fcs_target.reset();
  w.runtime[i].final_dest = dest;
  if (dest == ev.location) {
    ++w.record.counters.arrivals;
    arrive_at_destination(i);
    return;
  }
  auto r = w.router.route(ev.location, dest, w.weights, t);
  if (!r) {
    w.warnings.push_back("t=" + format_number(t) + ": no route for " + ev.id);
    ev.status = EvStatus::Parking;
    return;
  }
  w.traffic.depart(i, ev, std::move(r->edges), t);
  ev.status = EvStatus::Driving;
}

void Simulation::route_to_fcs(EvIndex i, std::size_t k, const SearchTree& tree, double t) {
  auto& w = *world_;
  auto& ev = w.fleet[i];
  w.runtime[i].fcs_target = k;
  ++w.record.counters.fcs_detours;
  const EdgeIndex target = w.stations[k].edge;
  if (target == ev.location) {
    switch (fcs_arrive(w.stations[k], i)) {
      case FcsArrival::PileAssigned: ev.status = EvStatus::ChargingFast; return;
      case FcsArrival::Queued: ev.status = EvStatus::Queued; return;
      case FcsArrival::StationOffline: lost_fcs(i, t); return;
    }
  }
  w.traffic.depart(i, ev, tree.path_to(target), t);
  ev.status = EvStatus::Driving;
}

void Simulation::to_low_battery(EvIndex i, double t) {
  auto& w = *world_;
  auto& ev = w.fleet[i];
  if (w.traffic.on_road(i)) w.traffic.remove(i);
  w.runtime[i].fcs_target.reset();
  ev.status = EvStatus::LowBattery;
  ++w.record.counters.low_battery;
  w.low_battery.add(i, ev.location, t, [&](EdgeIndex e) {
    return nearest_online_fcs(tree_from(e), w.stations);
  });
}

void Simulation::lost_fcs(EvIndex i, double t) {
  auto& w = *world_;
  auto& ev = w.fleet[i];
  w.runtime[i].fcs_target.reset();
  ev.status = EvStatus::Parking;
  const auto tree = tree_from(ev.location);
  if (auto k = select_fcs(ev, w.net, tree, w.stations, w.cfg.selection)) {
    route_to_fcs(i, *k, tree, t);
    return;
  }
  const EdgeIndex dest = w.runtime[i].final_dest;
  if (tree.reached(dest) && reachable(ev, tree.length[dest])) {
    drive_to(i, dest, t);
    return;
  }
  to_low_battery(i, t);
}

void Simulation::depart(EvIndex i, double t) {
  auto& w = *world_;
  auto& ev = w.fleet[i];
  auto& rt = w.runtime[i];
  const Trip trip = ev.trips[ev.next_trip++];
  if (rt.scs_pile) {
    leave_station(w.stations[*rt.scs_pile], i);
    rt.scs_pile.reset();
  }
  w.discharging[i] = 0;
  ev.status = EvStatus::Parking;
  rt.final_dest = trip.dest;
  ++w.record.counters.departures;
  if (w.strategy == DepartureStrategy::Threshold && ev.soc >= ev.k_f) {
    drive_to(i, trip.dest, t);
    return;
  }
  const auto tree = tree_from(ev.location);
  const auto plan =
      plan_departure(ev, trip.dest, w.strategy, w.net, tree, w.stations, w.cfg.selection);
  switch (plan.kind) {
    case DeparturePlan::Kind::Direct: drive_to(i, trip.dest, t); return;
    case DeparturePlan::Kind::ViaFcs: route_to_fcs(i, *plan.fcs, tree, t); return;
    case DeparturePlan::Kind::NoFeasibleFcs:
      if (w.strategy == DepartureStrategy::Threshold && tree.reached(trip.dest) &&
          reachable(ev, tree.length[trip.dest]))
        drive_to(i, trip.dest, t);
      else
        to_low_battery(i, t);
      return;
  }
}

void Simulation::step(double t) {
  auto& w = *world_;
  w.t = t;

  auto outcome = schedule_->apply(w.stations, t);
  if (outcome.strategy) w.strategy = parse_strategy(*outcome.strategy);
  for (const auto& [k, i] : outcome.evicted) {
    auto& ev = w.fleet[i];
    if (w.stations[k].is_fast()) {
      lost_fcs(i, t);
    } else {
      w.runtime[i].scs_pile.reset();
      w.discharging[i] = 0;
      ev.status = EvStatus::Parking;
    }
  }
  for (auto& st : w.stations)
    if (st.is_fast())
      for (auto i : st.occupants)
        if (w.fleet[i].status == EvStatus::Queued) w.fleet[i].status = EvStatus::ChargingFast;

  std::fill(w.v2g_step_kw.begin(), w.v2g_step_kw.end(), 0.0);
  plugins_.pre_step(w, t);

  auto rep = w.traffic.advance_all(w.fleet, t);
  for (const auto& o : rep.observations) w.weights.observe(o.edge, o.seconds);
  auto& ledger = w.record.ledger;
  ledger.driving_kwh += rep.energy_kwh;

  const bool window = w.cfg.v2g && w.cfg.v2g_window.contains(t);
  std::vector<EvIndex> charged;
  std::size_t fcs_col = 0, scs_col = 0;
  for (std::size_t k = 0; k < w.stations.size(); ++k) {
    auto& st = w.stations[k];
    double kwh = 0.0;
    double load_kw = 0.0;
    if (st.is_fast()) {
      auto r = fcs_step(st, w.fleet, w.dt);
      for (const auto& d : r.delivered) {
        kwh += d.grid_kwh;
        ledger.charge_stored_kwh += d.grid_kwh * w.fleet[d.ev].charge_eff();
      }
      ledger.fcs_grid_kwh += kwh;
      load_kw = r.load_kw;
      for (auto i : r.promoted) w.fleet[i].status = EvStatus::ChargingFast;
      for (auto i : r.departures) charged.push_back(i);
      if (w.recording) bucket_fcs_[fcs_col] += load_kw * w.dt;
      ++fcs_col;
    } else {
      auto r = scs_step(st, w.fleet, w.dt, window, w.discharging);
      for (const auto& d : r.delivered) {
        kwh += d.grid_kwh;
        ledger.charge_stored_kwh += d.grid_kwh * w.fleet[d.ev].charge_eff();
      }
      ledger.scs_grid_kwh += kwh;
      load_kw = r.load_kw;
      if (w.recording) {
        bucket_scs_charge_[scs_col] += load_kw * w.dt;
        bucket_scs_v2g_[scs_col] += w.v2g_step_kw[k] * w.dt;
      }
      ++scs_col;
    }
    w.interval_kwh[k] += kwh;
  }
  for (auto i : charged) {
    ++w.record.counters.fcs_charges;
    w.fleet[i].status = EvStatus::Parking;
    drive_to(i, w.runtime[i].final_dest, t);
  }

  for (auto i : rep.arrivals) {
    auto& rt = w.runtime[i];
    if (rt.fcs_target) {
      const auto k = *rt.fcs_target;
      switch (fcs_arrive(w.stations[k], i)) {
        case FcsArrival::PileAssigned: w.fleet[i].status = EvStatus::ChargingFast; break;
        case FcsArrival::Queued: w.fleet[i].status = EvStatus::Queued; break;
        case FcsArrival::StationOffline: lost_fcs(i, t); break;
      }
    } else {
      ++w.record.counters.arrivals;
      arrive_at_destination(i);
    }
  }
  for (auto i : rep.depletions) to_low_battery(i, t);

  auto teleports = w.low_battery.step(t, w.stations, [&](EdgeIndex e) {
    return nearest_online_fcs(tree_from(e), w.stations);
  });
  for (const auto& tp : teleports) {
    auto& ev = w.fleet[tp.ev];
    ev.location = w.stations[tp.station].edge;
    w.runtime[tp.ev].fcs_target = tp.station;
    ev.status = tp.outcome == FcsArrival::PileAssigned ? EvStatus::ChargingFast : EvStatus::Queued;
  }

  for (EvIndex i = 0; i < w.fleet.size(); ++i) {
    auto& ev = w.fleet[i];
    if (ev.next_trip >= ev.trips.size() || ev.trips[ev.next_trip].depart > t) continue;
    if (ev.status != EvStatus::Parking && ev.status != EvStatus::ChargingSlow) continue;
    depart(i, t);
  }

  plugins_.post_step(w, t);
}

void Simulation::record_bucket_start(double t) {
  auto& w = *world_;
  bucket_t_ = t;
  std::array<double, 6> counts{};
  double soc = 0.0;
  for (const auto& ev : w.fleet) {
    counts[static_cast<int>(ev.status)] += 1.0;
    soc += ev.soc;
  }
  std::vector<double> row{t};
  row.insert(row.end(), counts.begin(), counts.end());
  row.push_back(w.fleet.empty() ? 0.0 : soc / static_cast<double>(w.fleet.size()));
  w.record.ev_state.rows.push_back(std::move(row));
}

void Simulation::record_bucket_end(double) {
  auto& w = *world_;
  const double span = w.cfg.record_interval;
  std::vector<double> f{bucket_t_, 0.0};
  for (double e : bucket_fcs_) {
    f.push_back(e / span);
    f[1] += e / span;
  }
  std::vector<double> s{bucket_t_, 0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < bucket_scs_charge_.size(); ++j) {
    const double c = bucket_scs_charge_[j] / span;
    const double v = bucket_scs_v2g_[j] / span;
    s[1] += c;
    s[2] += v;
    s.push_back(c - v);
  }
  s[3] = s[1] - s[2];
  w.record.fcs_load.rows.push_back(std::move(f));
  w.record.scs_load.rows.push_back(std::move(s));
  std::fill(bucket_fcs_.begin(), bucket_fcs_.end(), 0.0);
  std::fill(bucket_scs_charge_.begin(), bucket_scs_charge_.end(), 0.0);
  std::fill(bucket_scs_v2g_.begin(), bucket_scs_v2g_.end(), 0.0);
}

RunRecord Simulation::run() {
  auto& w = *world_;
  auto& rec = w.record;
  rec.fcs_load.header = {"t", "total_kw"};
  rec.scs_load.header = {"t", "charge_kw", "v2g_kw", "net_kw"};
  for (const auto& st : w.stations) (st.is_fast() ? rec.fcs_load : rec.scs_load).header.push_back(st.id);
  rec.ev_state.header = {"t"};
  for (int s = 0; s < 6; ++s) rec.ev_state.header.push_back(to_string(static_cast<EvStatus>(s)));
  rec.ev_state.header.push_back("mean_soc");
  bucket_fcs_.assign(fcs_count_, 0.0);
  bucket_scs_charge_.assign(w.stations.size() - fcs_count_, 0.0);
  bucket_scs_v2g_.assign(w.stations.size() - fcs_count_, 0.0);

  for (const auto& ev : w.fleet) rec.ledger.battery_start_kwh += ev.energy();
  for (EvIndex i = 0; i < w.fleet.size(); ++i) arrive_at_destination(i);

  w.t = start_;
  w.recording = start_ >= 0.0;
  plugins_.init(w);

  const auto warm_steps = static_cast<std::uint64_t>(std::llround(-start_ / w.dt));
  const auto total = warm_steps +
                     static_cast<std::uint64_t>(std::llround(w.cfg.days * kDay / w.dt));
  const auto per_bucket = static_cast<std::uint64_t>(std::llround(w.cfg.record_interval / w.dt));
  for (std::uint64_t k = 0; k < total; ++k) {
    const double t = start_ + static_cast<double>(k) * w.dt;
    w.recording = k >= warm_steps;
    const auto local = k - warm_steps;
    if (w.recording && local % per_bucket == 0) record_bucket_start(t);
    step(t);
    if (w.recording) {
      ++rec.counters.steps;
      if ((local + 1) % per_bucket == 0) record_bucket_end(t);
    }
  }

  const double end = start_ + static_cast<double>(total) * w.dt;
  for (const auto& ev : w.fleet) {
    rec.ledger.battery_end_kwh += ev.energy();
    for (auto j = ev.next_trip; j < ev.trips.size(); ++j)
      if (ev.trips[j].depart < end) ++rec.counters.skipped_trips;
  }

  rec.manifest = {
      {"name", spec_.name},
      {"version", kVersion},
      {"seed", spec_.seed},
      {"config_hash", std::to_string(case_hash(spec_))},
      {"scenario_hash", std::to_string(spec_.scenario->content_hash)},
      {"config", w.cfg.to_json()},
      {"plugins", plugins_.order()},
      {"days", w.cfg.days},
      {"dt", w.cfg.dt},
      {"dt_pdn", w.cfg.dt_pdn},
      {"fleet", w.fleet.size()},
      {"counters", counters_to_json(rec.counters)},
      {"energy_kwh", ledger_to_json(rec.ledger)},
      {"warnings", w.warnings}};
  return rec;
}

RunRecord run_case(const CaseSpec& spec) { return Simulation(spec).run(); }

// ---- parallel runner ------------------------------------------------------------

std::vector<CaseResult> run_parallel(const std::vector<CaseSpec>& specs, int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  std::set<std::filesystem::path> dirs;
  for (const auto& s : specs)
    if (!s.out_dir.empty() && !dirs.insert(s.out_dir.lexically_normal()).second)
      throw ConfigError("output directory used by two cases: " + s.out_dir.string());

  std::vector<CaseResult> results(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      auto& r = results[i];
      r.name = specs[i].name;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto rec = run_case(specs[i]);
        if (!specs[i].out_dir.empty()) rec.write(specs[i].out_dir);
        r.record = std::move(rec);
      } catch (const std::exception& ex) {
        r.error = ex.what();
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), specs.size());
  if (n <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

std::vector<CaseSpec> cases_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  std::map<std::filesystem::path, std::shared_ptr<const Scenario>> loaded;
  std::vector<CaseSpec> out;
  try {
    for (const auto& c : j.at("cases")) {
      CaseSpec s;
      s.name = c.value("name", "case" + std::to_string(out.size()));
      auto dir = std::filesystem::path(c.at("scenario").get<std::string>());
      if (dir.is_relative()) dir = base / dir;
      auto& sc = loaded[dir];
      if (!sc) sc = std::make_shared<const Scenario>(load_scenario(dir));
      s.scenario = sc;
      s.seed = c.value("seed", std::uint64_t{1});
      if (c.contains("days")) s.days = c.at("days").get<int>();
      if (c.contains("dt")) s.dt = c.at("dt").get<double>();
      if (c.contains("dt_pdn")) s.dt_pdn = c.at("dt_pdn").get<double>();
      if (c.contains("strategy")) s.strategy = parse_strategy(c.at("strategy").get<std::string>());
      if (c.contains("v2g")) s.v2g = c.at("v2g").get<bool>();
      if (c.contains("pdn")) s.pdn = c.at("pdn").get<bool>();
      if (c.contains("v2g_price")) s.v2g_price = c.at("v2g_price").get<double>();
      if (c.contains("prices"))
        for (const auto& [k, v] : c.at("prices").items()) s.prices[k] = v.get<double>();
      if (c.contains("schedule")) {
        const auto& sj = c.at("schedule");
        s.schedule = schedule_from_json(sj.is_array() ? nlohmann::json{{"events", sj}} : sj);
      }
      if (c.contains("out")) {
        s.out_dir = c.at("out").get<std::string>();
        if (s.out_dir.is_relative()) s.out_dir = base / s.out_dir;
      }
      (void)effective_config(s);
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("cases manifest: ") + ex.what());
  }
  return out;
}

}  // namespace v2sim
