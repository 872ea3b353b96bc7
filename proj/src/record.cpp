#include "v2sim/record.hpp"

#include <charconv>
#include <fstream>
#include <utility>
#include <sstream>

#include "v2sim/error.hpp"

namespace v2sim {

namespace fs = std::filesystem;

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error("no column '" + name + "'");
}

std::vector<double> Table::values(const std::string& name) const {
  const auto c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

namespace {

constexpr std::pair<const char*, std::uint64_t RunCounters::*> kCounterFields[] = {
    {"steps", &RunCounters::steps},
    {"pdn_solves", &RunCounters::pdn_solves},
    {"pdn_fallbacks", &RunCounters::pdn_fallbacks},
    {"pdn_infeasible", &RunCounters::pdn_infeasible},
    {"departures", &RunCounters::departures},
    {"arrivals", &RunCounters::arrivals},
    {"fcs_detours", &RunCounters::fcs_detours},
    {"fcs_charges", &RunCounters::fcs_charges},
    {"low_battery", &RunCounters::low_battery},
    {"skipped_trips", &RunCounters::skipped_trips},
    {"trip_overflow_days", &RunCounters::trip_overflow_days}};

constexpr std::pair<const char*, double EnergyLedger::*> kLedgerFields[] = {
    {"battery_start", &EnergyLedger::battery_start_kwh},
    {"battery_end", &EnergyLedger::battery_end_kwh},
    {"fcs_grid", &EnergyLedger::fcs_grid_kwh},
    {"scs_grid", &EnergyLedger::scs_grid_kwh},
    {"charge_stored", &EnergyLedger::charge_stored_kwh},
    {"v2g_grid", &EnergyLedger::v2g_grid_kwh},
    {"v2g_drawn", &EnergyLedger::v2g_drawn_kwh},
    {"driving", &EnergyLedger::driving_kwh}};

}  // namespace

nlohmann::json counters_to_json(const RunCounters& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, m] : kCounterFields) j[k] = c.*m;
  return j;
}

RunCounters counters_from_json(const nlohmann::json& j) {
  RunCounters c;
  for (const auto& [k, m] : kCounterFields)
    if (j.contains(k)) c.*m = j.at(k).get<std::uint64_t>();
  return c;
}

nlohmann::json ledger_to_json(const EnergyLedger& l) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, m] : kLedgerFields) j[k] = l.*m;
  return j;
}

EnergyLedger ledger_from_json(const nlohmann::json& j) {
  EnergyLedger l;
  for (const auto& [k, m] : kLedgerFields)
    if (j.contains(k)) l.*m = j.at(k).get<double>();
  return l;
}

bool RunRecord::operator==(const RunRecord& o) const {
  return fcs_load == o.fcs_load && scs_load == o.scs_load && ev_state == o.ev_state &&
         pdn == o.pdn && v2g == o.v2g && ledger == o.ledger && counters == o.counters;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, end);
}

namespace {

double parse_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_csv(const fs::path& p, const Table& t) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
    out << '\n';
  }
}

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(p.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw Error(p.string() + ": ragged row");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void RunRecord::write(const fs::path& dir) const {
  fs::create_directories(dir);
  write_csv(dir / "fcs_load.csv", fcs_load);
  write_csv(dir / "scs_load.csv", scs_load);
  write_csv(dir / "ev_state.csv", ev_state);
  write_csv(dir / "pdn.csv", pdn);
  {
    std::ofstream out(dir / "v2g.csv");
    if (!out) throw Error("cannot write v2g.csv");
    out << "t,station,p_vc_kw,p_vcr_kw,alloc_sum_kw,participants\n";
    for (const auto& r : v2g)
      out << format_number(r.t) << ',' << r.station << ',' << format_number(r.p_vc_kw) << ','
          << format_number(r.p_vcr_kw) << ',' << format_number(r.alloc_sum_kw) << ','
          << r.participants << '\n';
  }
  std::ofstream m(dir / "manifest.json");
  m << manifest.dump(1) << '\n';
}

RunRecord RunRecord::read(const fs::path& dir) {
  RunRecord r;
  r.fcs_load = read_csv(dir / "fcs_load.csv");
  r.scs_load = read_csv(dir / "scs_load.csv");
  r.ev_state = read_csv(dir / "ev_state.csv");
  r.pdn = read_csv(dir / "pdn.csv");
  std::ifstream in(dir / "v2g.csv");
  if (!in) throw Error("cannot open v2g.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 6) throw Error("v2g.csv: ragged row");
    V2gRow row;
    row.t = parse_number(c[0]);
    row.station = c[1];
    row.p_vc_kw = parse_number(c[2]);
    row.p_vcr_kw = parse_number(c[3]);
    row.alloc_sum_kw = parse_number(c[4]);
    row.participants = static_cast<int>(parse_number(c[5]));
    r.v2g.push_back(std::move(row));
  }
  std::ifstream mf(dir / "manifest.json");
  if (mf) {
    r.manifest = nlohmann::json::parse(mf);
    if (r.manifest.contains("counters")) r.counters = counters_from_json(r.manifest["counters"]);
    if (r.manifest.contains("energy_kwh")) r.ledger = ledger_from_json(r.manifest["energy_kwh"]);
  }
  return r;
}

}  // namespace v2sim
