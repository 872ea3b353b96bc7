#include "v2sim/ev.hpp"

#include <algorithm>

#include "v2sim/error.hpp"

namespace v2sim {

double ChargingCurve::multiplier(double soc) const {
  if (points.empty()) return 1.0;
  if (soc <= points.front().first) return points.front().second;
  if (soc >= points.back().first) return points.back().second;
  auto hi = std::upper_bound(points.begin(), points.end(), soc,
                             [](double s, const auto& p) { return s < p.first; });
  auto lo = std::prev(hi);
  const double t = (soc - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

std::vector<EvPrototype> reference_prototypes() {
  struct Row {
    const char* id;
    double cap, wh_per_m, fast, slow;
  };
  static constexpr Row rows[] = {
      {"P1", 100.0, 0.159, 200.0, 5.98}, {"P2", 55.9, 0.151, 60.0, 7.0},
      {"P3", 84.0, 0.210, 7.0, 7.0},     {"P4", 76.8, 0.171, 100.0, 7.0},
      {"P5", 90.3, 0.181, 60.0, 7.0},    {"P6", 100.0, 0.196, 100.0, 7.0},
  };
  std::vector<EvPrototype> out;
  for (const auto& r : rows) {
    EvPrototype p;
    p.id = r.id;
    p.battery_kwh = r.cap;
    p.discharge_kwh_per_m = r.wh_per_m / 1000.0;
    p.fast_kw = r.fast;
    p.slow_kw = r.slow;
    out.push_back(p);
  }
  return out;
}

nlohmann::json prototypes_to_json(const std::vector<EvPrototype>& protos) {
  auto arr = nlohmann::json::array();
  for (const auto& p : protos) {
    nlohmann::json j{{"id", p.id},
                     {"battery_kwh", p.battery_kwh},
                     {"discharge_wh_per_m", p.discharge_kwh_per_m * 1000.0},
                     {"fast_kw", p.fast_kw},
                     {"slow_kw", p.slow_kw},
                     {"v2g_kw", p.v2g_kw},
                     {"charge_eff", p.charge_eff},
                     {"discharge_eff", p.discharge_eff},
                     {"accel", p.accel},
                     {"decel", p.decel},
                     {"length", p.length},
                     {"v_max", p.v_max}};
    if (p.curve) {
      auto pts = nlohmann::json::array();
      for (auto [s, m] : p.curve->points) pts.push_back({s, m});
      j["curve"] = pts;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<EvPrototype> prototypes_from_json(const nlohmann::json& j) {
  std::vector<EvPrototype> out;
  try {
    for (const auto& pj : j) {
      EvPrototype p;
      p.id = pj.at("id").get<std::string>();
      p.battery_kwh = pj.at("battery_kwh").get<double>();
      p.discharge_kwh_per_m = pj.at("discharge_wh_per_m").get<double>() / 1000.0;
      p.fast_kw = pj.at("fast_kw").get<double>();
      p.slow_kw = pj.at("slow_kw").get<double>();
      p.v2g_kw = pj.value("v2g_kw", p.v2g_kw);
      p.charge_eff = pj.value("charge_eff", p.charge_eff);
      p.discharge_eff = pj.value("discharge_eff", p.discharge_eff);
      p.accel = pj.value("accel", p.accel);
      p.decel = pj.value("decel", p.decel);
      p.length = pj.value("length", p.length);
      p.v_max = pj.value("v_max", p.v_max);
      if (pj.contains("curve")) {
        ChargingCurve c;
        for (const auto& pt : pj.at("curve")) c.points.emplace_back(pt.at(0), pt.at(1));
        std::sort(c.points.begin(), c.points.end());
        p.curve = std::move(c);
      }
      const bool positive = p.battery_kwh > 0 && p.discharge_kwh_per_m > 0 && p.fast_kw > 0 &&
                            p.slow_kw > 0 && p.v2g_kw > 0 && p.accel > 0 && p.decel > 0 &&
                            p.length > 0 && p.v_max > 0;
      if (!positive) throw ConfigError("prototype '" + p.id + "': all parameters must be > 0");
      if (!(p.charge_eff > 0 && p.charge_eff <= 1 && p.discharge_eff > 0 && p.discharge_eff <= 1))
        throw ConfigError("prototype '" + p.id + "': efficiencies must lie in (0, 1]");
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("prototypes.json: ") + ex.what());
  }
  return out;
}

double segmented_power(double p0, double soc) {
  if (soc < 0.8) return p0;
  return p0 * (3.4 - 3.0 * std::min(soc, 1.0));
}

double charging_power(const EvPrototype& proto, double soc, ChargeMode mode) {
  const double p0 = mode == ChargeMode::Fast ? proto.fast_kw : proto.slow_kw;
  if (proto.curve) return p0 * proto.curve->multiplier(soc);
  return segmented_power(p0, soc);
}

double charging_power(const ElectricVehicle& ev, ChargeMode mode) {
  return charging_power(*ev.proto, ev.soc, mode);
}

const char* to_string(EvStatus s) {
  switch (s) {
    case EvStatus::Parking: return "parking";
    case EvStatus::Driving: return "driving";
    case EvStatus::ChargingFast: return "charging_fast";
    case EvStatus::ChargingSlow: return "charging_slow";
    case EvStatus::Queued: return "queued";
    case EvStatus::LowBattery: return "low_battery";
  }
  return "?";
}

ConsumeResult consume(ElectricVehicle& ev, double distance_m) {
  ConsumeResult r;
  if (distance_m <= 0.0) return r;
  const double need = distance_m * ev.proto->discharge_kwh_per_m;
  const double have = ev.energy();
  if (need >= have) {
    r.energy_kwh = have;
    r.depleted = true;
    ev.soc = 0.0;
  } else {
    r.energy_kwh = need;
    ev.soc = (have - need) / ev.capacity();
  }
  return r;
}

double charge_from_grid(ElectricVehicle& ev, double grid_kwh) {
  if (grid_kwh <= 0.0) return 0.0;
  const double room = ev.capacity() - ev.energy();
  const double gain = grid_kwh * ev.charge_eff();
  if (gain >= room) {
    ev.soc = 1.0;
    return room / ev.charge_eff();
  }
  ev.soc = (ev.energy() + gain) / ev.capacity();
  return grid_kwh;
}

bool v2g_eligible(const ElectricVehicle& ev) { return ev.soc >= ev.k_v; }

std::vector<EvRecord> generate_fleet(std::size_t count, const std::vector<EvPrototype>& protos,
                                     const std::vector<std::string>& home_edges,
                                     const CoefficientRanges& ranges, Rng& rng) {
  if (protos.empty()) throw ConfigError("fleet generation needs at least one prototype");
  if (home_edges.empty()) throw ConfigError("fleet generation needs at least one home edge");
  auto uni = [&](std::pair<double, double> r) {
    return std::uniform_real_distribution<double>(r.first, r.second)(rng);
  };
  std::uniform_int_distribution<std::size_t> pick_proto(0, protos.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_home(0, home_edges.size() - 1);
  std::vector<EvRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    EvRecord r;
    r.id = "v" + std::to_string(i);
    r.prototype = protos[pick_proto(rng)].id;
    r.soc = uni(ranges.soc);
    r.omega = uni(ranges.omega);
    r.k_r = uni(ranges.k_r);
    r.k_s = uni(ranges.k_s);
    r.k_f = uni(ranges.k_f);
    r.k_v = uni(ranges.k_v);
    r.home = home_edges[pick_home(rng)];
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json fleet_to_json(const std::vector<EvRecord>& fleet) {
  auto arr = nlohmann::json::array();
  for (const auto& r : fleet)
    arr.push_back({{"id", r.id},   {"prototype", r.prototype}, {"soc", r.soc},
                   {"omega", r.omega}, {"k_r", r.k_r},          {"k_s", r.k_s},
                   {"k_f", r.k_f}, {"k_v", r.k_v},              {"home", r.home}});
  return {{"evs", arr}};
}

std::vector<EvRecord> fleet_from_json(const nlohmann::json& j) {
  std::vector<EvRecord> out;
  try {
    for (const auto& e : j.at("evs")) {
      EvRecord r;
      r.id = e.at("id").get<std::string>();
      r.prototype = e.at("prototype").get<std::string>();
      r.soc = e.at("soc").get<double>();
      r.omega = e.at("omega").get<double>();
      r.k_r = e.at("k_r").get<double>();
      r.k_s = e.at("k_s").get<double>();
      r.k_f = e.at("k_f").get<double>();
      r.k_v = e.at("k_v").get<double>();
      r.home = e.at("home").get<std::string>();
      if (r.soc < 0.0 || r.soc > 1.0) throw ConfigError("ev '" + r.id + "': soc outside [0, 1]");
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("evs.json: ") + ex.what());
  }
  return out;
}

}  // namespace v2sim
