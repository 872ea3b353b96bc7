#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "tiny_scenario.hpp"
#include "v2sim/error.hpp"
#include "v2sim/scenario.hpp"

namespace v2sim {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("v2sim_scenario_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const nlohmann::json& j) {
  try {
    (void)ScenarioConfig::from_json(j).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Scenario, ConfigDefaults) {
  const ScenarioConfig c;
  EXPECT_EQ(c.days, 2);
  EXPECT_EQ(c.dt, 1.0);
  EXPECT_EQ(c.dt_pdn, 300.0);
  EXPECT_EQ(c.record_interval, 60.0);
  EXPECT_EQ(c.strategy, DepartureStrategy::Threshold);
  EXPECT_TRUE(c.pdn && c.v2g);
  EXPECT_NO_THROW(c.validate());
  EXPECT_NO_THROW(ScenarioConfig::from_json(nlohmann::json::object()).validate());
}

TEST(Scenario, ConfigJsonRoundTrip) {
  ScenarioConfig c;
  c.days = 3;
  c.dt = 0.5;
  c.strategy = DepartureStrategy::Distance;
  c.routing = Algorithm::CH;
  c.selection.count_charging = true;
  c.v2g_price = 0.4;
  c.coefficients.k_f = {0.1, 0.3};
  const auto back = ScenarioConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.routing, Algorithm::CH);
  EXPECT_EQ(back.v2g_price, std::optional<double>(0.4));
}

TEST(Scenario, ConfigErrorsNameTheField) {
  EXPECT_NE(config_error({{"days", 0}}).find("'days'"), std::string::npos);
  EXPECT_NE(config_error({{"dt", 1.0}, {"dt_pdn", 301.5}}).find("'dt_pdn'"), std::string::npos);
  EXPECT_NE(config_error({{"record_interval", 0.5}}).find("'record_interval'"), std::string::npos);
  EXPECT_NE(config_error({{"pdn", false}, {"v2g", true}}).find("'v2g'"), std::string::npos);
  EXPECT_NE(config_error({{"coefficients", {{"soc", {0.8, 0.2}}}}}).find("coefficients.soc"),
            std::string::npos);
  EXPECT_NE(config_error({{"routing", "bfs"}}).find("routing"), std::string::npos);
  EXPECT_NE(config_error({{"days", "two"}}), "");
}

TEST(Scenario, SaveLoadRoundTrip) {
  const std::vector<EvRecord> evs{test::ev_record("v0", "ab", 0.5), test::ev_record("v1", "cd", 0.3)};
  const std::vector<TripChain> trips{{"v0", {{3600.0, "ab", "cd"}, {7200.0, "cd", "ab"}}, 0}};
  auto sc = test::tiny_scenario(evs, trips);
  sc.schedule.push_back({100.0, "CS1", ScheduleAction::SetPrice, 2.0, ""});
  const auto dir = scratch_dir("roundtrip");
  save_scenario(sc, dir);
  const auto back = load_scenario(dir);
  EXPECT_EQ(back.net.edge_count(), sc.net.edge_count());
  ASSERT_EQ(back.stations.size(), sc.stations.size());
  for (std::size_t i = 0; i < sc.stations.size(); ++i) {
    EXPECT_EQ(back.stations[i].id, sc.stations[i].id);
    EXPECT_EQ(back.stations[i].pdn_bus, sc.stations[i].pdn_bus);
  }
  ASSERT_TRUE(back.evs && back.trips);
  EXPECT_EQ(back.evs->size(), 2u);
  EXPECT_EQ((*back.evs)[1].home, "cd");
  EXPECT_EQ(back.trips->front().trips.size(), 2u);
  EXPECT_EQ(back.schedule.size(), 1u);
  EXPECT_EQ(back.pdn.buses.size(), sc.pdn.buses.size());
  EXPECT_EQ(back.cfg.to_json(), sc.cfg.to_json());
  EXPECT_EQ(back.dir, dir);

  save_scenario(back, scratch_dir("again"));
  EXPECT_EQ(load_scenario(fs::temp_directory_path() / "v2sim_scenario_again").content_hash,
            back.content_hash);
  fs::remove_all(dir);
  fs::remove_all(fs::temp_directory_path() / "v2sim_scenario_again");
}

TEST(Scenario, MissingOptionalFilesFallBack) {
  const auto dir = scratch_dir("minimal");
  fs::create_directories(dir);
  write_json(dir / "network.json", test::tiny_scenario({}, {}).net.to_json());
  const auto sc = load_scenario(dir);
  EXPECT_FALSE(sc.evs.has_value());
  EXPECT_FALSE(sc.trips.has_value());
  EXPECT_EQ(sc.pdn.buses.size(), 33u);
  EXPECT_FALSE(sc.prototypes.empty());
  EXPECT_EQ(sc.stations.size(), 1u + 8u);
  EXPECT_TRUE(sc.schedule.empty());
  fs::remove_all(dir);
}

TEST(Scenario, LoadErrors) {
  EXPECT_THROW(load_scenario(scratch_dir("nowhere")), ConfigError);
  const auto dir = scratch_dir("broken");
  fs::create_directories(dir);
  EXPECT_THROW(load_scenario(dir), ConfigError);
  write_json(dir / "network.json", test::tiny_scenario({}, {}).net.to_json());
  std::ofstream(dir / "scenario.json") << "{ not json";
  EXPECT_THROW(load_scenario(dir), ConfigError);
  write_json(dir / "scenario.json", {{"dt_pdn", 0.5}});
  EXPECT_THROW(load_scenario(dir), ConfigError);
  fs::remove(dir / "scenario.json");
  write_json(dir / "evs.json", fleet_to_json({test::ev_record("v0", "nowhere", 0.5)}));
  EXPECT_THROW(load_scenario(dir), ConfigError);
  fs::remove_all(dir);
}

TEST(Scenario, CrossFileChecks) {
  auto sc = test::tiny_scenario({}, {});
  sc.stations.front().pdn_bus = "no_bus";
  EXPECT_THROW(sc.validate(), UnknownBus);
  sc = test::tiny_scenario({}, {});
  sc.schedule.push_back({0.0, "nowhere", ScheduleAction::SetOffline, 0.0, ""});
  EXPECT_THROW(sc.validate(), UnknownStation);
  sc = test::tiny_scenario({test::ev_record("v0", "ab", 0.5)}, {});
  (*sc.evs)[0].prototype = "missing";
  EXPECT_THROW(sc.validate(), ConfigError);
}

TEST(Scenario, BundledGridLoads) {
  const auto sc = load_scenario(fs::path(V2SIM_SOURCE_DIR) / "scenarios" / "grid37");
  EXPECT_NO_THROW(sc.validate());
  EXPECT_EQ(sc.stations.size() - home_edges(sc).size(), 10u);
  EXPECT_EQ(sc.pdn.buses.size(), 33u);
  EXPECT_EQ(sc.cfg.fleet_size, 500u);
  EXPECT_NE(sc.content_hash, 0u);
}

TEST(Scenario, GeneratedFleetUsesHomeEdges) {
  auto sc = test::tiny_scenario({}, {});
  sc.cfg.fleet_size = 40;
  const auto a = generate_evs(sc, 7);
  const auto b = generate_evs(sc, 7);
  ASSERT_EQ(a.size(), 40u);
  const auto homes = home_edges(sc);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].soc, b[i].soc);
    EXPECT_NE(std::find(homes.begin(), homes.end(), a[i].home), homes.end());
  }
  const auto chains = generate_trips(sc, a, 7, 2);
  EXPECT_EQ(chains.size(), 40u);
}

}  // namespace
}  // namespace v2sim
