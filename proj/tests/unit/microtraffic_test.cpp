#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "v2sim/error.hpp"
#include "v2sim/microtraffic.hpp"

namespace v2sim {
namespace {

TEST(SafeSpeed, HandValues) {
  EXPECT_NEAR(safe_speed(10, 50, 1, 10, 5), 10.0 + 40.0 / 3.0, 1e-12);
  EXPECT_NEAR(safe_speed(12, 12, 1, 20, 4), 12.0, 1e-12);
  EXPECT_EQ(safe_speed(0, 0, 1, 10, 4), 0.0);
  EXPECT_EQ(safe_speed(0, 0, 0, 0, 4), 0.0);
  EXPECT_NEAR(safe_speed(7, 3, 0, 0, 4), 7.0 + 3.0 / (7.0 / 8.0), 1e-12);
  EXPECT_GE(safe_speed(1, 0, 2, 30, 4), 0.0);
}

TEST(StepSpeed, HandValues) {
  EXPECT_DOUBLE_EQ(step_speed(10, 30, 2, 1, 50, 0), 12.0);
  EXPECT_DOUBLE_EQ(step_speed(29.5, 30, 2, 1, 50, 0), 30.0);
  EXPECT_DOUBLE_EQ(step_speed(10, 30, 2, 1, 5, 0), 5.0);
  EXPECT_DOUBLE_EQ(step_speed(10, 30, 2, 1, 50, 0.5), 11.5);
  EXPECT_EQ(step_speed(1, 30, 2, 1, 50, 4), 0.0);
}

struct Rig {
  RoadNetwork net;
  EvPrototype proto;
  std::vector<ElectricVehicle> fleet;

  Rig(RoadNetwork n, std::size_t cars) : net(std::move(n)) {
    proto.id = "T";
    proto.battery_kwh = 100.0;
    proto.discharge_kwh_per_m = 0.0002;
    proto.fast_kw = 50.0;
    proto.slow_kw = 7.0;
    proto.accel = 2.0;
    proto.decel = 4.5;
    proto.length = 5.0;
    proto.v_max = 30.0;
    for (std::size_t i = 0; i < cars; ++i) {
      ElectricVehicle ev;
      ev.id = "v" + std::to_string(i);
      ev.proto = &proto;
      ev.soc = 0.9;
      fleet.push_back(ev);
    }
  }
};

TEST(Traffic, SingleVehicleAcceleratesByHand) {
  Rig rig(test::corridor(3, 10000.0, 30.0), 1);
  Traffic tr(rig.net, StepConfig{1.0, 1.0, 0.0, 2.5}, 1, 1);
  tr.place(0, rig.fleet[0], {0, 1}, 0, 0, 5.0, 0.0, 0.0);
  double dist = 0.0;
  for (int s = 0; s < 5; ++s) dist += tr.advance_all(rig.fleet, s).distance_m;
  EXPECT_DOUBLE_EQ(tr.mover(0).speed, 10.0);
  EXPECT_DOUBLE_EQ(tr.mover(0).pos, 5.0 + 30.0);
  EXPECT_DOUBLE_EQ(dist, 30.0);
  EXPECT_NEAR(rig.fleet[0].soc, 0.9 - 30.0 * 0.0002 / 100.0, 1e-12);
}

TEST(Traffic, FreeFlowConvergesToSpeedLimit) {
  Rig rig(test::corridor(2, 100000.0, 20.0), 1);
  Traffic tr(rig.net, StepConfig{1.0, 1.0, 0.0, 2.5}, 1, 1);
  tr.place(0, rig.fleet[0], {0}, 0, 0, 5.0, 0.0, 0.0);
  for (int s = 0; s < 30; ++s) tr.advance_all(rig.fleet, s);
  EXPECT_DOUBLE_EQ(tr.mover(0).speed, 20.0);
  tr.advance_all(rig.fleet, 30);
  EXPECT_DOUBLE_EQ(tr.mover(0).speed, 20.0);
}

TEST(Traffic, EmptyWorldGivesEmptyReport) {
  Rig rig(test::corridor(3, 100.0), 0);
  Traffic tr(rig.net, StepConfig{}, 1, 0);
  EXPECT_TRUE(tr.advance_all(rig.fleet, 0.0).empty());
}

TEST(Traffic, DepartRequiresTwoEdges) {
  Rig rig(test::corridor(3, 100.0), 1);
  Traffic tr(rig.net, StepConfig{}, 1, 1);
  EXPECT_THROW(tr.depart(0, rig.fleet[0], {0}, 0.0), Error);
}

TEST(Traffic, ArrivalAndTraversalObservation) {
  Rig rig(test::corridor(4, 200.0, 20.0), 1);
  Traffic tr(rig.net, StepConfig{1.0, 1.0, 0.0, 2.5}, 1, 1);
  tr.depart(0, rig.fleet[0], {0, 1, 2}, 0.0);
  EXPECT_TRUE(tr.waiting_to_enter(0));
  bool arrived = false;
  std::vector<TraversalObservation> obs;
  for (int s = 0; s < 200 && !arrived; ++s) {
    const auto r = tr.advance_all(rig.fleet, s);
    obs.insert(obs.end(), r.observations.begin(), r.observations.end());
    arrived = !r.arrivals.empty();
  }
  ASSERT_TRUE(arrived);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].edge, 1u);
  EXPECT_GE(obs[0].seconds, 200.0 / 20.0);
  tr.remove(0);
  EXPECT_FALSE(tr.on_road(0));
  EXPECT_EQ(tr.vehicles_on_road(), 0u);
}

TEST(Traffic, DepletionIsReported) {
  Rig rig(test::corridor(2, 100000.0, 20.0), 1);
  rig.fleet[0].soc = 50.0 * 0.0002 / 100.0;
  Traffic tr(rig.net, StepConfig{1.0, 1.0, 0.0, 2.5}, 1, 1);
  tr.place(0, rig.fleet[0], {0}, 0, 0, 5.0, 0.0, 0.0);
  bool depleted = false;
  for (int s = 0; s < 20 && !depleted; ++s) depleted = !tr.advance_all(rig.fleet, s).depletions.empty();
  EXPECT_TRUE(depleted);
  EXPECT_EQ(rig.fleet[0].soc, 0.0);
}

TEST(Traffic, FollowerNeverExceedsSafeSpeedOrOverlaps) {
  Rig rig(test::corridor(2, 1e7, 30.0), 2);
  EvPrototype slow = rig.proto;
  slow.v_max = 12.0;
  rig.fleet[0].proto = &slow;
  StepConfig cfg{1.0, 1.0, 0.5, 2.5};
  Traffic tr(rig.net, cfg, 42, 2);
  tr.place(0, rig.fleet[0], {0}, 0, 0, 300.0, 5.0, 0.0);
  tr.place(1, rig.fleet[1], {0}, 0, 0, 10.0, 25.0, 0.0);
  for (int s = 0; s < 1000; ++s) {
    const auto lead = tr.mover(0);
    const auto fol = tr.mover(1);
    const double g = std::max(0.0, lead.rear() - cfg.min_gap - fol.pos);
    const double vs = safe_speed(lead.speed, g, cfg.t_r, fol.speed, rig.proto.decel);
    tr.advance_all(rig.fleet, s);
    EXPECT_LE(tr.mover(1).speed, vs + 1e-9);
    EXPECT_GE(tr.mover(1).speed, 0.0);
    EXPECT_GE(tr.mover(0).rear() - tr.mover(1).pos, 0.0);
  }
}

TEST(Traffic, DeterministicForSeed) {
  auto run = [](std::uint64_t seed) {
    Rig rig(test::corridor(6, 500.0, 15.0, 2), 20);
    Traffic tr(rig.net, StepConfig{}, seed, 20);
    for (EvIndex i = 0; i < 20; ++i) tr.depart(i, rig.fleet[i], {0, 1, 2, 3, 4}, 0.0);
    std::vector<double> trace;
    for (int s = 0; s < 400; ++s) {
      const auto r = tr.advance_all(rig.fleet, s);
      trace.push_back(r.distance_m);
      for (auto a : r.arrivals) tr.remove(a);
    }
    return trace;
  };
  EXPECT_EQ(run(3), run(3));
  EXPECT_NE(run(3), run(4));
}

TEST(Traffic, LanesStayOrderedWithoutOverlap) {
  Rig rig(test::corridor(6, 300.0, 15.0, 2), 40);
  StepConfig cfg;
  Traffic tr(rig.net, cfg, 8, 40);
  for (EvIndex i = 0; i < 40; ++i) tr.depart(i, rig.fleet[i], {0, 1, 2, 3, 4}, 0.0);
  std::size_t arrivals = 0;
  for (int s = 0; s < 2000; ++s) {
    const auto r = tr.advance_all(rig.fleet, s);
    for (auto a : r.arrivals) tr.remove(a);
    arrivals += r.arrivals.size();
    for (EdgeIndex e = 0; e < rig.net.edge_count(); ++e)
      for (int l = 0; l < tr.lanes_of(e); ++l) {
        const auto lane = tr.lane(e, l);
        for (std::size_t k = 1; k < lane.size(); ++k)
          EXPECT_LE(tr.mover(lane[k]).pos, tr.mover(lane[k - 1]).rear());
      }
  }
  EXPECT_EQ(arrivals, 40u);
}

}  // namespace
}  // namespace v2sim
