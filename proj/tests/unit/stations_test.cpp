#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "helpers.hpp"
#include "v2sim/error.hpp"
#include "v2sim/stations.hpp"

namespace v2sim {
namespace {

using test::junctions;
using test::road;

ChargingStation fcs(int piles) {
  ChargingStation st;
  st.id = "CS1";
  st.kind = StationKind::FCS;
  st.piles = piles;
  st.upp = 1.5;
  return st;
}

struct Fleet {
  EvPrototype proto;
  std::vector<ElectricVehicle> evs;
  explicit Fleet(std::size_t n, double soc = 0.5) {
    proto.id = "T";
    proto.battery_kwh = 50.0;
    proto.discharge_kwh_per_m = 0.0002;
    proto.fast_kw = 100.0;
    proto.slow_kw = 7.0;
    for (std::size_t i = 0; i < n; ++i) {
      ElectricVehicle ev;
      ev.id = "v" + std::to_string(i);
      ev.proto = &proto;
      ev.soc = soc;
      ev.k_v = 0.7;
      evs.push_back(ev);
    }
  }
};

TEST(FcsArrive, PileQueueOffline) {
  auto st = fcs(10);
  st.occupants = {0, 1, 2};
  EXPECT_EQ(fcs_arrive(st, 3), FcsArrival::PileAssigned);
  EXPECT_EQ(st.occupants.size(), 4u);

  auto full = fcs(10);
  for (EvIndex i = 0; i < 10; ++i) full.occupants.push_back(i);
  full.queue = {20, 21};
  EXPECT_EQ(fcs_arrive(full, 22), FcsArrival::Queued);
  ASSERT_EQ(full.queue.size(), 3u);
  EXPECT_EQ(full.queue[2], 22u);

  auto off = fcs(10);
  off.online = false;
  EXPECT_EQ(fcs_arrive(off, 0), FcsArrival::StationOffline);
  EXPECT_TRUE(off.occupants.empty() && off.queue.empty());
}

TEST(FcsStep, DepartureAndPromotion) {
  Fleet f(3);
  f.evs[0].soc = 0.999;
  auto st = fcs(1);
  ASSERT_EQ(fcs_arrive(st, 0), FcsArrival::PileAssigned);
  ASSERT_EQ(fcs_arrive(st, 1), FcsArrival::Queued);
  const auto rep = fcs_step(st, f.evs, 60.0);
  EXPECT_EQ(rep.departures, std::vector<EvIndex>{0});
  EXPECT_EQ(rep.promoted, std::vector<EvIndex>{1});
  EXPECT_EQ(st.occupants, std::vector<EvIndex>{1});
  EXPECT_TRUE(st.queue.empty());
  EXPECT_EQ(f.evs[0].soc, 1.0);
  ASSERT_EQ(rep.delivered.size(), 1u);
  EXPECT_NEAR(rep.delivered[0].grid_kwh, 0.001 * 50.0 / 0.95, 1e-12);
}

TEST(FcsStep, EmptyAndLoadEqualsPileSum) {
  Fleet f(3, 0.3);
  auto st = fcs(5);
  const auto empty = fcs_step(st, f.evs, 1.0);
  EXPECT_TRUE(empty.delivered.empty() && empty.departures.empty());
  EXPECT_EQ(empty.load_kw, 0.0);
  f.evs[2].soc = 0.9;
  for (EvIndex i = 0; i < 3; ++i) fcs_arrive(st, i);
  double expect = 0.0;
  for (const auto& ev : f.evs) expect += charging_power(ev, ChargeMode::Fast);
  const auto rep = fcs_step(st, f.evs, 1.0);
  EXPECT_NEAR(rep.load_kw, expect, 1e-9);
}

TEST(FcsStep, QueueIsFifo) {
  std::mt19937_64 rng(3);
  Fleet f(200, 0.9);
  auto st = fcs(3);
  std::deque<EvIndex> expected_order;
  std::vector<EvIndex> promoted_order, arrival_order;
  EvIndex next = 0;
  for (int step = 0; step < 3000 && next < 200; ++step) {
    if (rng() % 4 == 0) {
      const auto r = fcs_arrive(st, next);
      if (r == FcsArrival::Queued) arrival_order.push_back(next);
      ++next;
    }
    const auto rep = fcs_step(st, f.evs, 30.0);
    promoted_order.insert(promoted_order.end(), rep.promoted.begin(), rep.promoted.end());
    EXPECT_LE(static_cast<int>(st.occupants.size()), st.piles);
  }
  ASSERT_FALSE(promoted_order.empty());
  for (std::size_t i = 0; i < promoted_order.size(); ++i)
    EXPECT_EQ(promoted_order[i], arrival_order[i]);
}

TEST(ScsArrive, PileOrReject) {
  ChargingStation st;
  st.piles = 10;
  for (EvIndex i = 0; i < 9; ++i) st.occupants.push_back(i);
  EXPECT_EQ(scs_arrive(st, 9), ScsArrival::PileAssigned);
  EXPECT_EQ(scs_arrive(st, 10), ScsArrival::Rejected);
  EXPECT_EQ(st.occupants.size(), 10u);
  EXPECT_TRUE(st.queue.empty());
}

TEST(ScsStep, ChargesOccupantsOnly) {
  Fleet f(3, 0.3);
  ChargingStation st;
  st.piles = 2;
  for (EvIndex i = 0; i < 3; ++i) scs_arrive(st, i);
  const auto rep = scs_step(st, f.evs, 3600.0, false);
  EXPECT_NEAR(rep.load_kw, 14.0, 1e-9);
  EXPECT_EQ(f.evs[2].soc, 0.3);
  EXPECT_NEAR(f.evs[0].soc, 0.3 + 7.0 * 0.95 / 50.0, 1e-12);
}

TEST(ScsStep, WindowAndSkipMask) {
  Fleet f(3, 0.3);
  f.evs[1].soc = 0.75;
  ChargingStation st;
  st.piles = 3;
  for (EvIndex i = 0; i < 3; ++i) scs_arrive(st, i);
  const std::vector<char> skip{0, 0, 1};
  const auto rep = scs_step(st, f.evs, 1.0, true, skip);
  ASSERT_EQ(rep.delivered.size(), 1u);
  EXPECT_EQ(rep.delivered[0].ev, 0u);
  EXPECT_EQ(f.evs[1].soc, 0.75);
  EXPECT_EQ(f.evs[2].soc, 0.3);
}

TEST(LeaveStation, RemovesFromPileOrQueue) {
  auto st = fcs(1);
  fcs_arrive(st, 0);
  fcs_arrive(st, 1);
  EXPECT_TRUE(leave_station(st, 1));
  EXPECT_TRUE(st.queue.empty());
  EXPECT_TRUE(leave_station(st, 0));
  EXPECT_FALSE(leave_station(st, 0));
}

std::vector<ChargingStation> pair_of_stations() {
  auto a = fcs(2);
  a.id = "CS5";
  a.occupants = {1, 2};
  a.queue = {3};
  ChargingStation b;
  b.id = "scs_x";
  b.piles = 4;
  b.occupants = {7, 8};
  return {a, b};
}

TEST(Schedule, OfflineEvictsAndFlushesQueue) {
  auto st = pair_of_stations();
  ScheduleCursor cur({{39600.0, "CS5", ScheduleAction::SetOffline, 0.0, ""}});
  EXPECT_TRUE(cur.apply(st, 39599.0).applied.empty());
  const auto out = cur.apply(st, 39600.0);
  ASSERT_EQ(out.applied.size(), 1u);
  EXPECT_FALSE(st[0].online);
  EXPECT_TRUE(st[0].occupants.empty());
  EXPECT_TRUE(st[0].queue.empty());
  EXPECT_EQ(out.evicted.size(), 3u);
  EXPECT_TRUE(cur.done());
  EXPECT_THROW(cur.apply(st, 100.0), Error);
}

TEST(Schedule, EmptyIsNoop) {
  auto st = pair_of_stations();
  ScheduleCursor cur({});
  const auto out = cur.apply(st, 1e9);
  EXPECT_TRUE(out.applied.empty() && out.evicted.empty());
  EXPECT_EQ(st[0].occupants.size(), 2u);
}

TEST(Schedule, PilesPriceStrategy) {
  auto st = pair_of_stations();
  ScheduleOutcome out;
  apply_event(st, {0.0, "scs_x", ScheduleAction::SetPiles, 0.0, ""}, out);
  EXPECT_EQ(out.evicted.size(), 2u);
  EXPECT_TRUE(st[1].occupants.empty());
  apply_event(st, {0.0, "CS5", ScheduleAction::SetPiles, 3.0, ""}, out);
  EXPECT_EQ(st[0].occupants.size(), 3u);
  EXPECT_TRUE(st[0].queue.empty());
  apply_event(st, {0.0, "CS5", ScheduleAction::SetPrice, 0.9, ""}, out);
  EXPECT_EQ(st[0].upp, 0.9);
  apply_event(st, {0.0, "", ScheduleAction::SetDepartureStrategy, 0.0, "distance"}, out);
  EXPECT_EQ(out.strategy, std::optional<std::string>("distance"));
  EXPECT_THROW(apply_event(st, {0.0, "CS99", ScheduleAction::SetOnline, 0.0, ""}, out),
               UnknownStation);
}

TEST(Schedule, JsonRoundTripAndErrors) {
  const auto j = nlohmann::json::parse(R"({"events": [
    {"t": 500, "station": "CS1", "action": "price", "value": 2.0},
    {"t": 100, "station": "CS1", "action": "offline"},
    {"t": 300, "action": "strategy", "value": "distance"}]})");
  const auto ev = schedule_from_json(j);
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].action, ScheduleAction::SetOffline);
  EXPECT_EQ(ev[1].text, "distance");
  EXPECT_EQ(ev[2].value, 2.0);
  const auto back = schedule_from_json(schedule_to_json(ev));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].value, 2.0);

  EXPECT_THROW(schedule_from_json(nlohmann::json::parse(R"([{"t": 1, "station": "a", "action": "explode"}])")),
               ConfigError);
  EXPECT_THROW(schedule_from_json(nlohmann::json::parse(R"([{"t": 1, "action": "offline"}])")),
               ConfigError);
  EXPECT_THROW(schedule_from_json(nlohmann::json::parse(R"([{"t": 1, "station": "a", "action": "piles", "value": -1}])")),
               ConfigError);
  EXPECT_THROW(schedule_from_json(nlohmann::json::parse(R"([{"station": "a", "action": "online"}])")),
               ConfigError);
}

RoadNetwork station_net() {
  return RoadNetwork(junctions({"a", "b", "c", "d"}),
                     {road("ab", "a", "b", 100), road("ba", "b", "a", 100),
                      road("CS1", "b", "c", 50, 10, 1, true), road("-CS1", "c", "b", 50),
                      road("CS2", "a", "d", 50, 10, 1, true), road("-CS2", "d", "a", 50)});
}

TEST(Stations, InferFromRoadNames) {
  const auto net = station_net();
  const std::vector<std::string> buses{"2", "3", "4"};
  const auto st = infer_stations(net, StationDefaults{}, buses);
  ASSERT_EQ(st.size(), 4u);
  int n_fcs = 0;
  for (const auto& s : st) {
    if (s.is_fast()) {
      ++n_fcs;
      EXPECT_EQ(s.piles, 10);
      EXPECT_EQ(s.upp, 1.5);
      EXPECT_FALSE(s.v2g_enabled);
    } else {
      EXPECT_EQ(s.id.rfind("scs_", 0), 0u);
      EXPECT_EQ(s.upp, 0.5);
      EXPECT_TRUE(s.v2g_enabled);
    }
  }
  EXPECT_EQ(n_fcs, 2);
  EXPECT_EQ(st[0].pdn_bus, "2");
  EXPECT_EQ(st[1].pdn_bus, "3");
  EXPECT_EQ(st[2].pdn_bus, "4");
  EXPECT_EQ(st[3].pdn_bus, "2");
}

TEST(Stations, JsonRoundTripAndErrors) {
  const auto net = station_net();
  const auto st = infer_stations(net, StationDefaults{}, std::vector<std::string>{"7"});
  const auto j = stations_to_json(st, net);
  const auto back = stations_from_json(j, net);
  ASSERT_EQ(back.size(), st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    EXPECT_EQ(back[i].id, st[i].id);
    EXPECT_EQ(back[i].edge, st[i].edge);
    EXPECT_EQ(back[i].kind, st[i].kind);
    EXPECT_EQ(back[i].pdn_bus, "7");
  }
  auto bad = j;
  bad[0]["kind"] = "XCS";
  EXPECT_THROW(stations_from_json(bad, net), ConfigError);
  bad = j;
  bad[1]["id"] = j[0]["id"];
  EXPECT_THROW(stations_from_json(bad, net), ConfigError);
  bad = j;
  bad[1]["edge"] = j[0]["edge"];
  EXPECT_THROW(stations_from_json(bad, net), ConfigError);
  bad = j;
  bad[0]["edge"] = "nowhere";
  EXPECT_THROW(stations_from_json(bad, net), ConfigError);
  bad = j;
  bad[0]["piles"] = -2;
  EXPECT_THROW(stations_from_json(bad, net), ConfigError);
}

}  // namespace
}  // namespace v2sim
