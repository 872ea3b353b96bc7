#include "v2sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "v2sim/error.hpp"
#include "v2sim/rng.hpp"

namespace v2sim {

namespace fs = std::filesystem;

Algorithm parse_algorithm(const std::string& s) {
  if (s == "dijkstra") return Algorithm::Dijkstra;
  if (s == "astar") return Algorithm::AStar;
  if (s == "ch") return Algorithm::CH;
  throw ConfigError("routing must be dijkstra, astar or ch, got '" + s + "'");
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Dijkstra: return "dijkstra";
    case Algorithm::AStar: return "astar";
    case Algorithm::CH: return "ch";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  auto need = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string("scenario.json: '") + field + "' " + what);
  };
  need(days >= 1, "days", "must be >= 1");
  need(dt > 0, "dt", "must be > 0");
  need(dt_pdn >= dt, "dt_pdn", "must be >= dt");
  need(std::abs(std::remainder(dt_pdn, dt)) < 1e-9, "dt_pdn", "must be a multiple of dt");
  need(record_interval >= dt, "record_interval", "must be >= dt");
  need(std::abs(std::remainder(record_interval, dt)) < 1e-9, "record_interval",
       "must be a multiple of dt");
  need(std::abs(std::remainder(86400.0, record_interval)) < 1e-9, "record_interval",
       "must divide one day");
  need(std::abs(std::remainder(86400.0, dt_pdn)) < 1e-9, "dt_pdn", "must divide one day");
  need(ch_rebuild_s > 0, "ch_rebuild_s", "must be > 0");
  need(selection.nearby_m > 0, "selection.nearby_m", "must be > 0");
  need(selection.t_w >= 0, "selection.t_w", "must be >= 0");
  need(traffic.t_r >= 0, "traffic.t_r", "must be >= 0");
  need(traffic.eta_max >= 0, "traffic.eta_max", "must be >= 0");
  need(traffic.min_gap >= 0, "traffic.min_gap", "must be >= 0");
  need(!v2g || pdn, "v2g", "requires pdn");
  need(!v2g_price || *v2g_price >= 0, "v2g_price", "must be >= 0");
  v2g_window.validate();
  auto range = [&](std::pair<double, double> r, const char* f) {
    need(r.first <= r.second, f, "needs min <= max");
  };
  range(coefficients.omega, "coefficients.omega");
  range(coefficients.k_r, "coefficients.k_r");
  range(coefficients.k_s, "coefficients.k_s");
  range(coefficients.k_f, "coefficients.k_f");
  range(coefficients.k_v, "coefficients.k_v");
  range(coefficients.soc, "coefficients.soc");
  need(coefficients.soc.first >= 0 && coefficients.soc.second <= 1, "coefficients.soc",
       "must lie in [0, 1]");
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c.days = j.value("days", c.days);
    c.dt = j.value("dt", c.dt);
    c.dt_pdn = j.value("dt_pdn", c.dt_pdn);
    c.record_interval = j.value("record_interval", c.record_interval);
    c.warmup = j.value("warmup", c.warmup);
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("routing")) c.routing = parse_algorithm(j.at("routing").get<std::string>());
    c.ch_rebuild_s = j.value("ch_rebuild_s", c.ch_rebuild_s);
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      c.selection.nearby_m = s.value("nearby_m", c.selection.nearby_m);
      c.selection.t_w = s.value("t_w", c.selection.t_w);
      c.selection.count_charging = s.value("count_charging", c.selection.count_charging);
    }
    if (j.contains("traffic")) {
      const auto& s = j.at("traffic");
      c.traffic.t_r = s.value("t_r", c.traffic.t_r);
      c.traffic.eta_max = s.value("eta_max", c.traffic.eta_max);
      c.traffic.min_gap = s.value("min_gap", c.traffic.min_gap);
    }
    c.pdn = j.value("pdn", c.pdn);
    c.pdn_linear = j.value("pdn_linear", c.pdn_linear);
    c.v2g = j.value("v2g", c.v2g);
    if (j.contains("v2g_window")) c.v2g_window = V2gWindow::from_json(j.at("v2g_window"));
    c.v2g_strategy = j.value("v2g_strategy", c.v2g_strategy);
    if (j.contains("v2g_price")) c.v2g_price = j.at("v2g_price").get<double>();
    c.fleet_size = j.value("fleet_size", c.fleet_size);
    if (j.contains("coefficients")) {
      const auto& k = j.at("coefficients");
      auto rd = [&](const char* name, std::pair<double, double>& r) {
        if (k.contains(name)) r = {k.at(name).at(0).get<double>(), k.at(name).at(1).get<double>()};
      };
      rd("omega", c.coefficients.omega);
      rd("k_r", c.coefficients.k_r);
      rd("k_s", c.coefficients.k_s);
      rd("k_f", c.coefficients.k_f);
      rd("k_v", c.coefficients.k_v);
      rd("soc", c.coefficients.soc);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("scenario.json: ") + ex.what());
  }
  c.traffic.dt = c.dt;
  c.validate();
  return c;
}

nlohmann::json ScenarioConfig::to_json() const {
  auto pr = [](std::pair<double, double> r) { return nlohmann::json::array({r.first, r.second}); };
  nlohmann::json j{
      {"days", days},
      {"dt", dt},
      {"dt_pdn", dt_pdn},
      {"record_interval", record_interval},
      {"warmup", warmup},
      {"strategy", to_string(strategy)},
      {"routing", to_string(routing)},
      {"ch_rebuild_s", ch_rebuild_s},
      {"selection",
       {{"nearby_m", selection.nearby_m},
        {"t_w", selection.t_w},
        {"count_charging", selection.count_charging}}},
      {"traffic",
       {{"t_r", traffic.t_r}, {"eta_max", traffic.eta_max}, {"min_gap", traffic.min_gap}}},
      {"pdn", pdn},
      {"pdn_linear", pdn_linear},
      {"v2g", v2g},
      {"v2g_window", v2g_window.to_json()},
      {"v2g_strategy", v2g_strategy},
      {"fleet_size", fleet_size},
      {"coefficients",
       {{"omega", pr(coefficients.omega)},
        {"k_r", pr(coefficients.k_r)},
        {"k_s", pr(coefficients.k_s)},
        {"k_f", pr(coefficients.k_f)},
        {"k_v", pr(coefficients.k_v)},
        {"soc", pr(coefficients.soc)}}}};
  if (v2g_price) j["v2g_price"] = *v2g_price;
  return j;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(p.filename().string() + ": " + ex.what());
  }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(1) << '\n';
}

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> home_edges(const Scenario& s) {
  std::vector<std::string> out;
  for (const auto& st : s.stations)
    if (!st.is_fast()) out.push_back(s.net.edge(st.edge).id);
  return out;
}

void Scenario::validate() const {
  cfg.validate();
  std::set<std::string> buses;
  for (const auto& b : pdn.buses) buses.insert(b.id);
  std::set<std::string> station_ids;
  for (const auto& st : stations) {
    station_ids.insert(st.id);
    if (cfg.pdn && !buses.count(st.pdn_bus))
      throw UnknownBus("station '" + st.id + "' references unknown bus '" + st.pdn_bus + "'");
  }
  std::set<std::string> protos;
  for (const auto& p : prototypes) protos.insert(p.id);
  if (evs)
    for (const auto& e : *evs) {
      if (!protos.count(e.prototype))
        throw ConfigError("ev '" + e.id + "' references unknown prototype '" + e.prototype + "'");
      (void)net.edge_index(e.home);
    }
  for (const auto& e : places.work_edges) (void)net.edge_index(e);
  for (const auto& e : places.other_edges) (void)net.edge_index(e);
  if (trips)
    for (const auto& c : *trips)
      for (const auto& t : c.trips) {
        (void)net.edge_index(t.origin);
        (void)net.edge_index(t.dest);
      }
  for (const auto& ev : schedule)
    if (!ev.station.empty() && !station_ids.count(ev.station))
      throw UnknownStation("schedule references unknown station '" + ev.station + "'");
}

Scenario load_scenario(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("scenario directory not found: " + dir.string());
  Scenario s;
  s.dir = dir;
  auto has = [&](const char* f) { return fs::exists(dir / f); };
  std::string material;
  for (const char* f : {"network.json", "scenario.json", "stations.json", "prototypes.json",
                        "evs.json", "placemodel.json", "pdn.json", "schedule.json", "trips.json"})
    if (has(f)) material += std::string(f) + '\n' + slurp(dir / f) + '\n';
  s.content_hash = fnv1a(material);

  if (!has("network.json")) throw ConfigError("scenario is missing network.json");
  s.net = RoadNetwork::from_json(read_json(dir / "network.json"));
  if (has("scenario.json")) s.cfg = ScenarioConfig::from_json(read_json(dir / "scenario.json"));
  s.pdn = has("pdn.json") ? PdnCase::from_json(read_json(dir / "pdn.json")) : ieee33();
  s.pdn.interval_s = s.cfg.dt_pdn;
  if (s.cfg.v2g_price) s.pdn.v2g_price = *s.cfg.v2g_price;
  if (has("stations.json")) {
    s.stations = stations_from_json(read_json(dir / "stations.json"), s.net);
  } else {
    std::vector<std::string> buses;
    for (const auto& b : s.pdn.buses)
      if (b.id != s.pdn.slack) buses.push_back(b.id);
    s.stations = infer_stations(s.net, StationDefaults{}, buses);
  }
  s.prototypes = has("prototypes.json") ? prototypes_from_json(read_json(dir / "prototypes.json"))
                                        : reference_prototypes();
  if (has("evs.json")) s.evs = fleet_from_json(read_json(dir / "evs.json"));
  if (has("placemodel.json")) {
    s.places = PlaceModel::from_json(read_json(dir / "placemodel.json"));
  } else {
    auto homes = home_edges(s);
    s.places = PlaceModel::defaults(homes, homes);
  }
  if (has("schedule.json")) s.schedule = schedule_from_json(read_json(dir / "schedule.json"));
  if (has("trips.json")) s.trips = trips_from_json(read_json(dir / "trips.json"));
  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const fs::path& dir) {
  fs::create_directories(dir);
  write_json(dir / "network.json", s.net.to_json());
  write_json(dir / "scenario.json", s.cfg.to_json());
  write_json(dir / "stations.json", stations_to_json(s.stations, s.net));
  write_json(dir / "prototypes.json", prototypes_to_json(s.prototypes));
  write_json(dir / "placemodel.json", s.places.to_json());
  write_json(dir / "pdn.json", s.pdn.to_json());
  if (!s.schedule.empty()) write_json(dir / "schedule.json", schedule_to_json(s.schedule));
  if (s.evs) write_json(dir / "evs.json", fleet_to_json(*s.evs));
  if (s.trips) write_json(dir / "trips.json", trips_to_json(*s.trips));
}

std::vector<EvRecord> generate_evs(const Scenario& s, std::uint64_t seed) {
  Rng rng = make_stream(seed, "fleet");
  return generate_fleet(s.cfg.fleet_size, s.prototypes, home_edges(s), s.cfg.coefficients, rng);
}

std::vector<TripChain> generate_trips(const Scenario& s, const std::vector<EvRecord>& evs,
                                      std::uint64_t seed, int days) {
  std::vector<TripChain> out;
  out.reserve(evs.size());
  for (std::size_t i = 0; i < evs.size(); ++i) {
    Rng rng = make_stream(seed, "tripgen", i);
    out.push_back(generate_chain(evs[i].id, evs[i].home, days, s.places, rng));
  }
  return out;
}

}  // namespace v2sim
