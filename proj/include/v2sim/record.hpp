#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace v2sim {

// Headered numeric table; column 0 is seconds since simulation start.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws Error
  std::vector<double> values(const std::string& name) const;
  bool operator==(const Table&) const = default;
};

struct V2gRow {
  double t = 0.0;
  std::string station;
  double p_vc_kw = 0.0;
  double p_vcr_kw = 0.0;
  double alloc_sum_kw = 0.0;  // sum of per-EV allocations
  int participants = 0;
  bool operator==(const V2gRow&) const = default;
};

// Energy bookkeeping over the recorded and unrecorded span alike.
struct EnergyLedger {
  double battery_start_kwh = 0.0;
  double battery_end_kwh = 0.0;
  double fcs_grid_kwh = 0.0;
  double scs_grid_kwh = 0.0;
  double charge_stored_kwh = 0.0;  // sum over charging events of grid * charge_eff
  double v2g_grid_kwh = 0.0;
  double v2g_drawn_kwh = 0.0;      // sum over discharge events of grid / discharge_eff
  double driving_kwh = 0.0;
  bool operator==(const EnergyLedger&) const = default;
};

struct RunCounters {
  std::uint64_t steps = 0;
  std::uint64_t pdn_solves = 0;
  std::uint64_t pdn_fallbacks = 0;
  std::uint64_t pdn_infeasible = 0;
  std::uint64_t departures = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t fcs_detours = 0;
  std::uint64_t fcs_charges = 0;
  std::uint64_t low_battery = 0;
  std::uint64_t skipped_trips = 0;
  std::uint64_t trip_overflow_days = 0;
  bool operator==(const RunCounters&) const = default;
};

// Everything a case produces. The CSV streams are:
//   fcs_load.csv  t, total_kw, one column per FCS (kW, mean over the row)
//   scs_load.csv  t, charge_kw, v2g_kw, net_kw, one net column per SCS
//   ev_state.csv  t, one count per status, mean_soc
//   pdn.csv       t, objective, solver, iterations, cone_gap, gen P (kW),
//                 bus voltages (pu), V2G dispatch per station (kW)
//   v2g.csv       t, station, p_vc_kw, p_vcr_kw, alloc_sum_kw, participants
// plus manifest.json.
struct RunRecord {
  Table fcs_load;
  Table scs_load;
  Table ev_state;
  Table pdn;
  std::vector<V2gRow> v2g;
  EnergyLedger ledger;
  RunCounters counters;
  nlohmann::json manifest;

  bool operator==(const RunRecord& o) const;

  void write(const std::filesystem::path& dir) const;
  static RunRecord read(const std::filesystem::path& dir);
};

// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

nlohmann::json counters_to_json(const RunCounters& c);
RunCounters counters_from_json(const nlohmann::json& j);
nlohmann::json ledger_to_json(const EnergyLedger& l);
EnergyLedger ledger_from_json(const nlohmann::json& j);

void write_csv(const std::filesystem::path& p, const Table& t);
Table read_csv(const std::filesystem::path& p);

}  // namespace v2sim
