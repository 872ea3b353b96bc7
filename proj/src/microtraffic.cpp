#include "v2sim/microtraffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "v2sim/error.hpp"
#include "v2sim/rng.hpp"

namespace v2sim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double safe_speed(double v_leader, double gap, double t_r, double v_follower, double decel) {
  const double denom = (v_leader + v_follower) / (2.0 * decel) + t_r;
  if (denom <= 0.0) return v_leader;
  return std::max(0.0, v_leader + (gap - v_leader * t_r) / denom);
}

double step_speed(double v, double v_max, double accel, double dt, double v_safe, double eta) {
  return std::max(0.0, std::min({v_max, v + accel * dt, v_safe}) - eta);
}

Traffic::Traffic(const RoadNetwork& net, StepConfig cfg, std::uint64_t noise_seed,
                 std::size_t fleet_size)
    : net_(&net), cfg_(cfg), seed_(noise_seed) {
  if (!(cfg_.dt > 0.0) || cfg_.t_r < 0.0 || cfg_.eta_max < 0.0)
    throw ConfigError("step config requires dt > 0, t_r >= 0, eta_max >= 0");
  lane_base_.resize(net.edge_count() + 1, 0);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e)
    lane_base_[e + 1] = lane_base_[e] + static_cast<std::size_t>(net.edge(e).lanes);
  lanes_.resize(lane_base_.back());
  pending_.resize(net.edge_count());
  movers_.resize(fleet_size);
  state_.assign(fleet_size, State::Off);
}

std::span<const EvIndex> Traffic::lane(EdgeIndex e, int lane) const {
  return lanes_[lane_base_[e] + lane];
}

bool Traffic::lane_compatible(const Mover& m, int lane) const {
  if (m.leg + 1 >= m.route.size()) return true;
  return lane < net_->edge(m.route[m.leg + 1]).lanes;
}

bool Traffic::entry_slot(EdgeIndex e, double want_pos, int& lane_out, double& pos_out) const {
  const int nl = net_->edge(e).lanes;
  double best_gap = -kInf;
  int best_lane = -1;
  for (int l = 0; l < nl; ++l) {
    const auto& vec = lanes_[lane_base_[e] + l];
    const double gap = vec.empty() ? kInf : movers_[vec.back()].rear() - cfg_.min_gap;
    if (gap > best_gap) {
      best_gap = gap;
      best_lane = l;
    }
  }
  if (best_lane < 0 || best_gap < 0.0) return false;
  lane_out = best_lane;
  pos_out = std::min({want_pos, best_gap, net_->edge(e).length});
  return true;
}

void Traffic::depart(EvIndex ev, const ElectricVehicle& car, std::vector<EdgeIndex> route,
                     double now) {
  if (route.size() < 2) throw Error("depart requires a route of at least two edges");
  if (ev >= movers_.size()) throw Error("vehicle index out of range");
  if (state_[ev] != State::Off) remove(ev);
  Mover& m = movers_[ev];
  m = Mover{};
  m.ev = ev;
  m.route = std::move(route);
  m.leg = 0;
  m.length = car.proto->length;
  m.entered_at = now;
  state_[ev] = State::Pending;
  pending_[m.route[1]].push_back(ev);
  ++count_;
}

void Traffic::place(EvIndex ev, const ElectricVehicle& car, std::vector<EdgeIndex> route,
                    std::size_t leg, int lane, double pos, double speed, double now) {
  if (ev >= movers_.size()) throw Error("vehicle index out of range");
  if (state_[ev] != State::Off) remove(ev);
  Mover& m = movers_[ev];
  m = Mover{};
  m.ev = ev;
  m.route = std::move(route);
  m.leg = leg;
  m.lane = lane;
  m.pos = pos;
  m.speed = speed;
  m.length = car.proto->length;
  m.entered_at = now;
  m.full_traversal = pos <= 0.0;
  auto& vec = lane_ref(m.edge(), lane);
  auto it = std::find_if(vec.begin(), vec.end(),
                         [&](EvIndex o) { return movers_[o].pos < pos; });
  vec.insert(it, ev);
  state_[ev] = State::OnLane;
  ++count_;
}

void Traffic::remove(EvIndex ev) {
  if (!on_road(ev)) return;
  Mover& m = movers_[ev];
  if (state_[ev] == State::Pending) {
    auto& q = pending_[m.route[1]];
    q.erase(std::remove(q.begin(), q.end(), ev), q.end());
  } else {
    auto& vec = lane_ref(m.edge(), m.lane);
    vec.erase(std::remove(vec.begin(), vec.end(), ev), vec.end());
  }
  state_[ev] = State::Off;
  --count_;
}

void Traffic::insert_pending(double now) {
  for (EdgeIndex e = 0; e < pending_.size(); ++e) {
    auto& q = pending_[e];
    while (!q.empty()) {
      int lane = 0;
      double pos = 0.0;
      if (!entry_slot(e, 0.0, lane, pos)) break;
      const EvIndex ev = q.front();
      q.pop_front();
      Mover& m = movers_[ev];
      m.leg = 1;
      m.lane = lane;
      m.pos = pos;
      m.speed = 0.0;
      m.entered_at = now;
      m.full_traversal = true;
      lane_ref(e, lane).push_back(ev);
      state_[ev] = State::OnLane;
    }
  }
}

void Traffic::try_lane_changes(std::span<ElectricVehicle> fleet, StepReport& report) {
  struct Change {
    EvIndex ev;
    int to;
  };
  std::vector<Change> wanted;
  auto leader_safe = [&](const std::vector<EvIndex>& vec, const Mover& m,
                         const ElectricVehicle& car) {
    // Leader in `vec` = vehicle with the smallest pos >= m.pos, excluding m.
    const EvIndex* lead = nullptr;
    for (auto it = vec.rbegin(); it != vec.rend(); ++it) {
      if (*it == m.ev) continue;
      if (movers_[*it].pos >= m.pos) {
        lead = &*it;
        break;
      }
    }
    if (!lead) return kInf;
    const Mover& l = movers_[*lead];
    const double g = std::max(0.0, l.rear() - cfg_.min_gap - m.pos);
    return safe_speed(l.speed, g, cfg_.t_r, m.speed, car.proto->decel);
  };

  for (EdgeIndex e = 0; e < net_->edge_count(); ++e) {
    const int nl = net_->edge(e).lanes;
    if (nl < 2) continue;
    for (int l = 0; l < nl; ++l) {
      for (EvIndex ev : lane_ref(e, l)) {
        const Mover& m = movers_[ev];
        if (!lane_compatible(m, l)) {
          wanted.push_back({ev, l - 1});
          continue;
        }
        const auto& car = fleet[ev];
        const double desired =
            std::min({car.proto->v_max, net_->edge(e).speed_limit, m.speed + car.proto->accel * cfg_.dt});
        const double here = leader_safe(lane_ref(e, l), m, car);
        if (here >= desired) continue;
        int best = -1;
        double best_v = here + 1.0;
        for (int to : {l - 1, l + 1}) {
          if (to < 0 || to >= nl || !lane_compatible(m, to)) continue;
          const double there = std::min(desired, leader_safe(lane_ref(e, to), m, car));
          if (there > best_v) {
            best_v = there;
            best = to;
          }
        }
        if (best >= 0) wanted.push_back({ev, best});
      }
    }
  }

  for (const auto& c : wanted) {
    Mover& m = movers_[c.ev];
    auto& target = lane_ref(m.edge(), c.to);
    // First index whose pos is below ours: that vehicle is the new follower.
    auto it = std::lower_bound(target.begin(), target.end(), m.pos,
                               [&](EvIndex o, double p) { return movers_[o].pos >= p; });
    if (it != target.begin()) {
      const Mover& lead = movers_[*std::prev(it)];
      if (lead.rear() - m.pos < cfg_.min_gap + m.speed * cfg_.t_r) continue;
    }
    if (it != target.end()) {
      const Mover& follow = movers_[*it];
      if (m.rear() - follow.pos < cfg_.min_gap) continue;
    }
    target.insert(it, c.ev);
    auto& source = lane_ref(m.edge(), m.lane);
    source.erase(std::find(source.begin(), source.end(), c.ev));
    m.lane = c.to;
    ++report.lane_changes;
  }
}

StepReport Traffic::advance_all(std::span<ElectricVehicle> fleet, double now) {
  StepReport report;
  const double dt = cfg_.dt;
  insert_pending(now);
  try_lane_changes(fleet, report);

  std::vector<EvIndex> keep;
  for (EdgeIndex e = 0; e < net_->edge_count(); ++e) {
    const Edge& edge = net_->edge(e);
    for (int l = 0; l < edge.lanes; ++l) {
      auto& vec = lane_ref(e, l);
      if (vec.empty()) continue;
      keep.clear();
      bool have_leader = false;
      double lead_old_rear = 0.0, lead_old_speed = 0.0, lead_new_rear = 0.0;
      for (std::size_t i = 0; i < vec.size(); ++i) {
        const EvIndex ev = vec[i];
        Mover& m = movers_[ev];
        if (m.last_step == step_) {  // arrived from upstream during this step
          keep.push_back(ev);
          have_leader = true;
          lead_old_rear = lead_new_rear = m.rear();
          lead_old_speed = m.speed;
          continue;
        }
        m.last_step = step_;
        ElectricVehicle& car = fleet[ev];
        const bool final_leg = m.leg + 1 == m.route.size();

        double v_safe = kInf;
        double limit_pos = kInf;
        if (have_leader) {
          const double g = std::max(0.0, lead_old_rear - cfg_.min_gap - m.pos);
          v_safe = safe_speed(lead_old_speed, g, cfg_.t_r, m.speed, car.proto->decel);
          limit_pos = lead_new_rear - cfg_.min_gap;
        } else if (!final_leg) {
          int tl = 0;
          double tp = 0.0;
          const bool open = lane_compatible(m, l) && entry_slot(m.route[m.leg + 1], 0.0, tl, tp);
          if (!open) {
            const double g = std::max(0.0, edge.length - m.pos);
            v_safe = safe_speed(0.0, g, cfg_.t_r, m.speed, car.proto->decel);
            limit_pos = edge.length;
          }
        }
        const double eta = cfg_.eta_max * hashed_uniform(seed_ ^ splitmix64(ev), step_);
        const double vmax = std::min(car.proto->v_max, edge.speed_limit);
        double v_new = step_speed(m.speed, vmax, car.proto->accel, dt, v_safe, eta);
        if (limit_pos < kInf) v_new = std::min(v_new, std::max(0.0, (limit_pos - m.pos) / dt));

        const double old_rear = m.rear();
        const double old_speed = m.speed;
        const double target = m.pos + v_new * dt;
        double travelled = 0.0;
        bool arrived = false;
        bool left_lane = false;
        int new_lane = 0;
        EdgeIndex next = e;
        if (target >= edge.length && final_leg) {
          travelled = edge.length - m.pos;
          m.pos = edge.length;
          m.speed = v_new;
          arrived = true;
        } else if (target >= edge.length) {
          next = m.route[m.leg + 1];
          double p = 0.0;
          if (lane_compatible(m, l) && entry_slot(next, target - edge.length, new_lane, p)) {
            travelled = edge.length - m.pos + p;
            if (m.full_traversal)
              report.observations.push_back({e, now + dt - m.entered_at});
            ++m.leg;
            m.lane = new_lane;
            m.pos = p;
            m.speed = v_new;
            m.entered_at = now + dt;
            m.full_traversal = true;
            lane_ref(next, new_lane).push_back(ev);
            left_lane = true;
          } else {
            travelled = edge.length - m.pos;
            m.pos = edge.length;
            m.speed = 0.0;
          }
        } else {
          travelled = target - m.pos;
          m.pos = target;
          m.speed = v_new;
        }

        const ConsumeResult use = consume(car, travelled);
        report.distance_m += travelled;
        report.energy_kwh += use.energy_kwh;
        ++report.moved;
        car.location = m.edge();

        if (use.depleted) {
          if (left_lane) lane_ref(next, new_lane).pop_back();
          state_[ev] = State::Off;
          --count_;
          report.depletions.push_back(ev);
          continue;
        }
        if (arrived) {
          state_[ev] = State::Off;
          --count_;
          report.arrivals.push_back(ev);
          continue;
        }
        if (left_lane) continue;
        keep.push_back(ev);
        have_leader = true;
        lead_old_rear = old_rear;
        lead_old_speed = old_speed;
        lead_new_rear = m.rear();
      }
      vec.swap(keep);
    }
  }
  ++step_;
  return report;
}

}  // namespace v2sim
