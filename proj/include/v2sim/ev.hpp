#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "v2sim/network.hpp"
#include "v2sim/rng.hpp"

namespace v2sim {

enum class ChargeMode { Fast, Slow };

// Piecewise-linear soc -> power multiplier; replaces the built-in segmented
// curve when a prototype carries one. Points sorted by soc, multipliers in
// [0, 1]; evaluated with flat extrapolation.
struct ChargingCurve {
  std::vector<std::pair<double, double>> points;
  double multiplier(double soc) const;
};

struct EvPrototype {
  std::string id;
  double battery_kwh = 0.0;
  double discharge_kwh_per_m = 0.0;  // stored internally in kWh/m
  double fast_kw = 0.0;
  double slow_kw = 0.0;
  double v2g_kw = 20.0;
  double charge_eff = 0.95;
  double discharge_eff = 0.95;
  double accel = 2.6;   // m/s^2
  double decel = 4.5;   // m/s^2
  double length = 5.0;  // m
  double v_max = 33.33;  // m/s
  std::optional<ChargingCurve> curve;
};

// The six prototypes of the reference case. Discharge rates are tabulated in
// Wh/m and converted to kWh/m here.
std::vector<EvPrototype> reference_prototypes();

nlohmann::json prototypes_to_json(const std::vector<EvPrototype>& protos);
std::vector<EvPrototype> prototypes_from_json(const nlohmann::json& j);

// Segmented charging curve: p0 below soc 0.8, then p0 * (3.4 - 3 soc).
double segmented_power(double p0, double soc);

double charging_power(const EvPrototype& proto, double soc, ChargeMode mode);

enum class EvStatus { Parking, Driving, ChargingFast, ChargingSlow, Queued, LowBattery };

const char* to_string(EvStatus s);

struct Trip {
  double depart = 0.0;  // seconds since simulation start
  EdgeIndex origin = 0;
  EdgeIndex dest = 0;
};

struct ElectricVehicle {
  std::string id;
  const EvPrototype* proto = nullptr;
  double soc = 0.0;
  double omega = 0.0;  // $/hour
  double k_r = 1.0;
  double k_s = 0.0;
  double k_f = 0.0;
  double k_v = 0.0;
  EvStatus status = EvStatus::Parking;
  EdgeIndex home = 0;
  EdgeIndex location = 0;  // current edge (parked, driving, or station edge)
  std::vector<Trip> trips;
  std::size_t next_trip = 0;

  double capacity() const { return proto->battery_kwh; }
  double energy() const { return soc * proto->battery_kwh; }
  double range_m() const { return soc * proto->battery_kwh / proto->discharge_kwh_per_m; }
  double charge_eff() const { return proto->charge_eff; }
  double discharge_eff() const { return proto->discharge_eff; }
};

double charging_power(const ElectricVehicle& ev, ChargeMode mode);

struct ConsumeResult {
  double energy_kwh = 0.0;  // actually drawn from the battery
  bool depleted = false;
};

// Constant-rate consumption; soc clamps at 0 and raises the depleted flag.
ConsumeResult consume(ElectricVehicle& ev, double distance_m);

// Battery-side energy added for `grid_kwh` delivered by a pile, clamped at
// full. Returns the grid energy actually accepted.
double charge_from_grid(ElectricVehicle& ev, double grid_kwh);

bool v2g_eligible(const ElectricVehicle& ev);

// Behavioural coefficient ranges used by the fleet generator.
struct CoefficientRanges {
  std::pair<double, double> omega{5.0, 10.0};
  std::pair<double, double> k_r{1.0, 1.2};
  std::pair<double, double> k_s{0.4, 0.6};
  std::pair<double, double> k_f{0.2, 0.25};
  std::pair<double, double> k_v{0.65, 0.75};
  std::pair<double, double> soc{0.4, 0.8};
};

struct EvRecord {
  std::string id;
  std::string prototype;
  double soc;
  double omega, k_r, k_s, k_f, k_v;
  std::string home;
};

std::vector<EvRecord> generate_fleet(std::size_t count, const std::vector<EvPrototype>& protos,
                                     const std::vector<std::string>& home_edges,
                                     const CoefficientRanges& ranges, Rng& rng);

nlohmann::json fleet_to_json(const std::vector<EvRecord>& fleet);
std::vector<EvRecord> fleet_from_json(const nlohmann::json& j);

}  // namespace v2sim
