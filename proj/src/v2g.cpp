#include "v2sim/v2g.hpp"

#include <algorithm>
#include <cmath>

#include "v2sim/error.hpp"

namespace v2sim {

namespace {

constexpr double kDay = 86400.0;

}  // namespace

bool V2gWindow::contains(double t) const {
  const double s = std::fmod(std::fmod(t, kDay) + kDay, kDay);
  return std::any_of(periods.begin(), periods.end(),
                     [&](const auto& p) { return s >= p.first && s < p.second; });
}

void V2gWindow::validate() const {
  auto sorted = periods;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto [a, b] = sorted[i];
    if (!(a >= 0.0 && a < b && b <= kDay))
      throw ConfigError("v2g window periods must satisfy 0 <= start < end <= 86400");
    if (i > 0 && a < sorted[i - 1].second) throw ConfigError("v2g window periods overlap");
  }
}

V2gWindow V2gWindow::from_json(const nlohmann::json& j) {
  V2gWindow w;
  try {
    for (const auto& p : j) w.periods.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("v2g window: ") + ex.what());
  }
  w.validate();
  return w;
}

nlohmann::json V2gWindow::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& [a, b] : periods) arr.push_back({a, b});
  return arr;
}

V2gOffer station_capacity(const ChargingStation& scs, std::size_t index,
                          std::span<const ElectricVehicle> fleet, const V2gWindow& window,
                          double t) {
  V2gOffer offer;
  offer.station = index;
  offer.station_id = scs.id;
  if (scs.is_fast() || !scs.v2g_enabled || !scs.online || !window.contains(t)) return offer;
  for (EvIndex i : scs.occupants) {
    const auto& ev = fleet[i];
    if (!v2g_eligible(ev)) continue;
    offer.participants.push_back({i, ev.proto->v2g_kw});
    offer.capacity_kw += ev.proto->v2g_kw;
  }
  return offer;
}

std::vector<Allocation> proportional_strategy(const V2gOffer& offer, double p_vcr) {
  std::vector<Allocation> out;
  out.reserve(offer.participants.size());
  if (offer.capacity_kw <= 0.0) {
    for (const auto& p : offer.participants) out.push_back({p.ev, 0.0});
    return out;
  }
  const double share = p_vcr / offer.capacity_kw;
  for (const auto& p : offer.participants) out.push_back({p.ev, p.p_v_kw * share});
  return out;
}

std::vector<Allocation> allocate(const V2gOffer& offer, double p_vcr, const V2gStrategy& strategy) {
  const double tol = 1e-9 * std::max(1.0, offer.capacity_kw);
  if (p_vcr < -tol) throw CapacityExceeded("v2g: negative dispatch for " + offer.station_id);
  if (p_vcr > offer.capacity_kw + tol)
    throw CapacityExceeded("v2g: dispatch " + std::to_string(p_vcr) + " kW exceeds capacity " +
                           std::to_string(offer.capacity_kw) + " kW at " + offer.station_id);
  p_vcr = std::clamp(p_vcr, 0.0, offer.capacity_kw);
  auto out = strategy(offer, p_vcr);
  double sum = 0.0;
  for (const auto& a : out) {
    auto it = std::find_if(offer.participants.begin(), offer.participants.end(),
                           [&](const V2gParticipant& p) { return p.ev == a.ev; });
    if (it == offer.participants.end())
      throw Error("v2g strategy allocated to an EV outside the offer");
    if (a.kw < -tol || a.kw > it->p_v_kw + tol)
      throw Error("v2g strategy allocation outside [0, p_v]");
    sum += a.kw;
  }
  if (std::abs(sum - p_vcr) > tol) throw Error("v2g strategy allocations do not sum to P_vcr");
  return out;
}

StrategyRegistry::StrategyRegistry() {
  strategies_["proportional"] = proportional_strategy;
  strategies_["equal"] = proportional_strategy;
}

void StrategyRegistry::add(const std::string& name, V2gStrategy s) {
  strategies_[name] = std::move(s);
}

const V2gStrategy& StrategyRegistry::get(const std::string& name) const {
  auto it = strategies_.find(name);
  if (it == strategies_.end()) throw ConfigError("unknown v2g strategy '" + name + "'");
  return it->second;
}

std::vector<std::string> StrategyRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : strategies_) out.push_back(k);
  return out;
}

DischargeReport apply_discharge(std::span<const Allocation> allocations,
                                std::span<ElectricVehicle> fleet, double dt,
                                std::span<const char> present) {
  DischargeReport rep;
  const std::size_t n = allocations.size();
  std::vector<double> cap(n), want(n);
  double residual = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = allocations[k];
    const auto& ev = fleet[a.ev];
    const bool here = present.empty() || (a.ev < present.size() && present[a.ev]);
    // Largest grid-side power the battery can sustain over dt.
    const double limit = here ? std::min(ev.proto->v2g_kw, ev.energy() * ev.discharge_eff() * 3600.0 / dt) : 0.0;
    cap[k] = limit;
    want[k] = std::min(a.kw, limit);
    residual += a.kw - want[k];
  }
  if (residual > 0.0) {
    double room = 0.0;
    for (std::size_t k = 0; k < n; ++k) room += cap[k] - want[k];
    if (room > 0.0) {
      const double take = std::min(residual, room);
      for (std::size_t k = 0; k < n; ++k) want[k] += take * (cap[k] - want[k]) / room;
      residual -= take;
    }
  }
  rep.shortfall_kw = std::max(residual, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    auto& ev = fleet[allocations[k].ev];
    const double kw = want[k];
    if (kw <= 0.0) {
      rep.actual.push_back({allocations[k].ev, 0.0});
      continue;
    }
    const double drawn = std::min(kw * dt / 3600.0 / ev.discharge_eff(), ev.energy());
    ev.soc = std::max(0.0, (ev.energy() - drawn) / ev.capacity());
    rep.actual.push_back({allocations[k].ev, kw});
    rep.injected_kw += kw;
    rep.battery_kwh += drawn;
  }
  return rep;
}

}  // namespace v2sim
