#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "v2sim/demo.hpp"
#include "v2sim/engine.hpp"
#include "v2sim/error.hpp"
#include "v2sim/scenario.hpp"

namespace fs = std::filesystem;
using namespace v2sim;

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

struct SimulateArgs {
  std::string scenario, out;
  std::uint64_t seed = 1;
  std::optional<int> days;
  std::optional<double> dt, pdn_dt, v2g_price;
  std::optional<std::string> strategy;
  bool no_v2g = false;
  bool no_pdn = false;
};

int cmd_simulate(const SimulateArgs& a) {
  CaseSpec spec;
  spec.name = fs::path(a.scenario).filename().string();
  spec.scenario = std::make_shared<const Scenario>(load_scenario(a.scenario));
  spec.seed = a.seed;
  spec.days = a.days;
  spec.dt = a.dt;
  spec.dt_pdn = a.pdn_dt;
  spec.v2g_price = a.v2g_price;
  if (a.strategy) spec.strategy = parse_strategy(*a.strategy);
  if (a.no_pdn) spec.pdn = false;
  if (a.no_v2g || a.no_pdn) spec.v2g = false;
  spec.out_dir = a.out;
  (void)effective_config(spec);
  auto rec = run_case(spec);
  rec.write(a.out);
  const auto& c = rec.counters;
  std::printf("%s: %llu steps, %llu pdn solves, %llu departures, %llu fcs charges -> %s\n",
              spec.name.c_str(), static_cast<unsigned long long>(c.steps),
              static_cast<unsigned long long>(c.pdn_solves),
              static_cast<unsigned long long>(c.departures),
              static_cast<unsigned long long>(c.fcs_charges), a.out.c_str());
  return 0;
}

int cmd_parallel(const std::string& manifest, int workers) {
  const fs::path p(manifest);
  auto specs = cases_from_json(read_json(p), p.parent_path());
  const auto results = run_parallel(specs, workers);
  int failed = 0;
  for (const auto& r : results) {
    if (r.error.empty()) {
      std::printf("%-24s ok     %8.2f s\n", r.name.c_str(), r.seconds);
    } else {
      ++failed;
      std::printf("%-24s FAILED %s\n", r.name.c_str(), r.error.c_str());
    }
  }
  return failed ? kRuntimeExit : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"v2sim: EV charging and V2G co-simulation on road and power networks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one case and write its CSV record");
  simulate->add_option("--scenario", sim.scenario, "Scenario directory")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--days", sim.days, "Simulated days");
  simulate->add_option("--dt", sim.dt, "Traffic step (s)");
  simulate->add_option("--pdn-dt", sim.pdn_dt, "Power-flow interval (s)");
  simulate->add_option("--strategy", sim.strategy, "Departure strategy")
      ->check(CLI::IsMember({"threshold", "distance"}));
  simulate->add_option("--v2g-price", sim.v2g_price, "V2G price ($/kWh)");
  simulate->add_flag("--no-v2g", sim.no_v2g, "Disable V2G dispatch");
  simulate->add_flag("--no-pdn", sim.no_pdn, "Disable the power-flow plugin");

  std::string manifest;
  int workers = 1;
  auto* parallel = app.add_subcommand("parallel", "Run the cases of a manifest concurrently");
  parallel->add_option("--manifest", manifest, "cases.json")->required();
  parallel->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  std::string scen;
  std::uint64_t seed = 1;
  std::optional<int> days;
  std::optional<std::size_t> count;
  std::string out;
  auto* gen_trips = app.add_subcommand("gen-trips", "Generate trips.json for a scenario");
  gen_trips->add_option("--scenario", scen, "Scenario directory")->required();
  gen_trips->add_option("--seed", seed, "Master seed");
  gen_trips->add_option("--days", days, "Days of trips");
  gen_trips->add_option("--out", out, "Output file (default: <scenario>/trips.json)");

  auto* gen_evs = app.add_subcommand("gen-evs", "Generate evs.json for a scenario");
  gen_evs->add_option("--scenario", scen, "Scenario directory")->required();
  gen_evs->add_option("--seed", seed, "Master seed");
  gen_evs->add_option("--count", count, "Fleet size");
  gen_evs->add_option("--out", out, "Output file (default: <scenario>/evs.json)");

  StationDefaults sd;
  auto* gen_stations = app.add_subcommand("gen-stations", "Infer stations.json from the road names");
  gen_stations->add_option("--scenario", scen, "Scenario directory")->required();
  gen_stations->add_option("--fcs-piles", sd.fcs_piles, "Piles per fast station");
  gen_stations->add_option("--scs-piles", sd.scs_piles, "Piles per slow station");
  gen_stations->add_option("--fcs-price", sd.fcs_price, "Fast charging price ($/kWh)");
  gen_stations->add_option("--scs-price", sd.scs_price, "Slow charging price ($/kWh)");
  gen_stations->add_option("--out", out, "Output file (default: <scenario>/stations.json)");

  auto* validate = app.add_subcommand("validate", "Load and cross-check a scenario");
  validate->add_option("--scenario", scen, "Scenario directory")->required();

  DemoOptions demo;
  auto* gen_demo = app.add_subcommand("gen-demo", "Write the synthetic grid scenario");
  gen_demo->add_option("--out", out, "Scenario directory")->required();
  gen_demo->add_option("--evs", demo.fleet_size, "Fleet size");
  gen_demo->add_option("--scs-piles", demo.scs_piles, "Piles per slow station");
  gen_demo->add_option("--fcs-piles", demo.fcs_piles, "Piles per fast station");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigExit;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*parallel) return cmd_parallel(manifest, workers);
    if (*gen_trips) {
      auto s = load_scenario(scen);
      const auto evs = s.evs ? *s.evs : generate_evs(s, seed);
      const auto chains = generate_trips(s, evs, seed, days.value_or(s.cfg.days));
      write_json(out.empty() ? fs::path(scen) / "trips.json" : fs::path(out), trips_to_json(chains));
      return 0;
    }
    if (*gen_evs) {
      auto s = load_scenario(scen);
      if (count) s.cfg.fleet_size = *count;
      write_json(out.empty() ? fs::path(scen) / "evs.json" : fs::path(out),
                 fleet_to_json(generate_evs(s, seed)));
      return 0;
    }
    if (*gen_stations) {
      auto s = load_scenario(scen);
      std::vector<std::string> buses;
      for (const auto& b : s.pdn.buses)
        if (b.id != s.pdn.slack) buses.push_back(b.id);
      write_json(out.empty() ? fs::path(scen) / "stations.json" : fs::path(out),
                 stations_to_json(infer_stations(s.net, sd, buses), s.net));
      return 0;
    }
    if (*validate) {
      auto s = load_scenario(scen);
      check_radial(s.pdn);
      std::printf("%s: ok (%zu edges, %zu stations, %zu buses)\n", scen.c_str(),
                  s.net.edge_count(), s.stations.size(), s.pdn.buses.size());
      return 0;
    }
    if (*gen_demo) {
      save_scenario(make_demo(demo), out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const UnknownStation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const UnknownBus& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const NotRadial& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const PluginCycle& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const MissingDependency& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
  return 0;
}
