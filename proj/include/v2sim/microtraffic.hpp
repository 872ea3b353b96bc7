#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "v2sim/ev.hpp"
#include "v2sim/network.hpp"

namespace v2sim {

using EvIndex = std::uint32_t;

struct StepConfig {
  double dt = 1.0;        // s
  double t_r = 1.0;       // driver reaction time, s
  double eta_max = 0.5;   // max random speed decrement, m/s
  double min_gap = 2.5;   // standstill bumper gap, m
};

// Krauss safe speed: v_l + (g - v_l t_r) / ((v_l + v_f) / (2b) + t_r), >= 0.
double safe_speed(double v_leader, double gap, double t_r, double v_follower, double decel);

// max{0, min{v_max, v + a dt, v_safe} - eta}
double step_speed(double v, double v_max, double accel, double dt, double v_safe, double eta);

// A vehicle currently on the road. `pos` is the front bumper measured from
// the start of the current edge; it occupies [pos - length, pos] on its lane.
struct Mover {
  EvIndex ev = 0;
  std::vector<EdgeIndex> route;
  std::size_t leg = 0;  // index into route of the current edge
  int lane = 0;
  double pos = 0.0;
  double speed = 0.0;
  double length = 5.0;
  double entered_at = 0.0;
  bool full_traversal = false;  // entered at the edge start (APT-eligible)
  std::uint64_t last_step = ~0ULL;

  EdgeIndex edge() const { return route[leg]; }
  double rear() const { return pos - length; }
};

struct TraversalObservation {
  EdgeIndex edge;
  double seconds;
};

struct StepReport {
  std::size_t moved = 0;
  std::vector<EvIndex> arrivals;
  std::vector<EvIndex> depletions;
  std::vector<TraversalObservation> observations;
  std::size_t lane_changes = 0;
  double distance_m = 0.0;
  double energy_kwh = 0.0;

  bool empty() const {
    return moved == 0 && arrivals.empty() && depletions.empty() && observations.empty();
  }
};

// Lane occupancy plus kinematic state of every vehicle on the road. Owned by
// a single simulation case; stepping is deterministic for a fixed noise seed.
class Traffic {
 public:
  Traffic(const RoadNetwork& net, StepConfig cfg, std::uint64_t noise_seed,
          std::size_t fleet_size);

  const StepConfig& config() const { return cfg_; }

  // Starts a trip from the downstream end of route[0]. The vehicle waits off
  // the lanes until route[1] admits it. Requires route.size() >= 2.
  void depart(EvIndex ev, const ElectricVehicle& car, std::vector<EdgeIndex> route, double now);

  // Puts a vehicle directly on a lane (tests and scripted scenarios).
  void place(EvIndex ev, const ElectricVehicle& car, std::vector<EdgeIndex> route,
             std::size_t leg, int lane, double pos, double speed, double now);

  // Takes a vehicle off the road (or out of a departure queue).
  void remove(EvIndex ev);

  // Moves every vehicle by one step of cfg.dt starting at `now`.
  StepReport advance_all(std::span<ElectricVehicle> fleet, double now);

  bool on_road(EvIndex ev) const { return ev < state_.size() && state_[ev] != State::Off; }
  bool waiting_to_enter(EvIndex ev) const { return ev < state_.size() && state_[ev] == State::Pending; }
  const Mover& mover(EvIndex ev) const { return movers_[ev]; }
  std::size_t vehicles_on_road() const { return count_; }
  std::span<const EvIndex> lane(EdgeIndex e, int lane) const;
  int lanes_of(EdgeIndex e) const { return net_->edge(e).lanes; }
  const RoadNetwork& network() const { return *net_; }
  std::uint64_t steps() const { return step_; }

 private:
  enum class State : std::uint8_t { Off, Pending, OnLane };

  std::vector<EvIndex>& lane_ref(EdgeIndex e, int lane) { return lanes_[lane_base_[e] + lane]; }
  // Largest-rear-gap lane of `e` that admits a vehicle whose front would sit
  // at `want_pos`; returns the lane and the admissible front position.
  bool entry_slot(EdgeIndex e, double want_pos, int& lane_out, double& pos_out) const;
  bool lane_compatible(const Mover& m, int lane) const;
  void try_lane_changes(std::span<ElectricVehicle> fleet, StepReport& report);
  void insert_pending(double now);

  const RoadNetwork* net_;
  StepConfig cfg_;
  std::uint64_t seed_;
  std::vector<std::size_t> lane_base_;
  std::vector<std::vector<EvIndex>> lanes_;  // front-first
  std::vector<std::deque<EvIndex>> pending_;  // per edge, FIFO
  std::vector<Mover> movers_;
  std::vector<State> state_;
  std::size_t count_ = 0;
  std::uint64_t step_ = 0;
};

}  // namespace v2sim
