// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "v2sim/ch.hpp"
#include "v2sim/demo.hpp"
#include "v2sim/engine.hpp"
#include "v2sim/ev.hpp"
#include "v2sim/microtraffic.hpp"
#include "v2sim/network.hpp"
#include "v2sim/pdn.hpp"
#include "v2sim/rng.hpp"
#include "v2sim/routing.hpp"
#include "v2sim/scenario.hpp"
#include "v2sim/tripgen.hpp"

using namespace v2sim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& ex) {
    report(name, false, std::string("exception: ") + ex.what());
  }
}

std::shared_ptr<const Scenario> acceptance_scenario() {
  static auto s = std::make_shared<const Scenario>(
      load_scenario(std::filesystem::path(V2SIM_SOURCE_DIR) / "scenarios" / "grid37"));
  return s;
}

bool in_window(const V2gWindow& w, double t0, double t1) { return w.contains(t0) && w.contains(t1); }

// ---------------------------------------------------------------------------

RoadNetwork random_graph(Rng& rng) {
  std::uniform_int_distribution<int> nj(12, 60);
  const int n = nj(rng);
  std::uniform_real_distribution<double> coord(0.0, 1000.0);
  std::vector<JunctionSpec> js;
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back({coord(rng), coord(rng)});
    js.push_back({"j" + std::to_string(i), pts.back()});
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> extra(0, 60);
  std::uniform_int_distribution<int> target(n, 200);
  const int m = target(rng);
  std::vector<EdgeSpec> es;
  auto add = [&](int a, int b) {
    const double len = std::ceil(distance(pts[a], pts[b])) + extra(rng);
    es.push_back({"e" + std::to_string(es.size()), js[a].id, js[b].id, len, 10.0, 1,
                  std::bernoulli_distribution(0.1)(rng)});
  };
  for (int i = 0; i + 1 < n && static_cast<int>(es.size()) < m; ++i) add(i, i + 1);
  while (static_cast<int>(es.size()) < m) {
    const int a = pick(rng), b = pick(rng);
    if (a != b) add(a, b);
  }
  return RoadNetwork(std::move(js), std::move(es));
}

void routing_oracle() {
  const auto t0 = Clock::now();
  Rng rng = make_stream(2024, "accept-routing");
  int mismatches = 0, found = 0, queries = 0;
  for (int g = 0; g < 50; ++g) {
    const auto net = random_graph(rng);
    const EdgeWeights w(net, WeightMode::Shortest);
    const auto ch = ChOverlay::build(net, w);
    std::uniform_int_distribution<EdgeIndex> pe(0, static_cast<EdgeIndex>(net.edge_count() - 1));
    for (int q = 0; q < 100; ++q) {
      const EdgeIndex o = pe(rng), d = pe(rng);
      const auto a = route(net, o, d, w, Algorithm::Dijkstra);
      const auto b = route(net, o, d, w, Algorithm::AStar);
      const auto c = route(net, o, d, w, Algorithm::CH, &ch);
      ++queries;
      const bool same_reach = a.has_value() == b.has_value() && a.has_value() == c.has_value();
      if (!same_reach || (a && (a->cost != b->cost || a->cost != c->cost))) ++mismatches;
      if (a) ++found;
    }
  }
  const double secs = seconds_since(t0);
  report("routing-oracle-equivalence", mismatches == 0 && secs < 10.0,
         fmt("%.0f queries, %.0f routed, %.0f cost mismatches, %.2f s", queries, found, mismatches,
             secs));
}

// ---------------------------------------------------------------------------

void car_following() {
  const double side = 250.0;
  std::vector<JunctionSpec> js{{"a", Point{0, 0}}, {"b", Point{side, 0}},
                               {"c", Point{side, side}}, {"d", Point{0, side}}};
  std::vector<EdgeSpec> es{{"ab", "a", "b", side, 16.0, 2, false},
                           {"bc", "b", "c", side, 16.0, 2, false},
                           {"cd", "c", "d", side, 16.0, 2, false},
                           {"da", "d", "a", side, 16.0, 2, false}};
  const RoadNetwork net(js, es);
  EvPrototype proto;
  proto.id = "ring";
  proto.battery_kwh = 1e9;
  proto.discharge_kwh_per_m = 1e-9;
  proto.fast_kw = proto.slow_kw = 7.0;
  const std::size_t n = 24;
  std::vector<ElectricVehicle> fleet(n);
  Rng rng = make_stream(99, "accept-ring");
  std::uniform_real_distribution<double> vmax(8.0, 20.0), acc(1.5, 3.0), len(4.0, 7.0);
  std::vector<EvPrototype> protos(n, proto);
  for (std::size_t i = 0; i < n; ++i) {
    protos[i].v_max = vmax(rng);
    protos[i].accel = acc(rng);
    protos[i].length = len(rng);
    fleet[i].id = "v" + std::to_string(i);
    fleet[i].proto = &protos[i];
    fleet[i].soc = 1.0;
    fleet[i].k_r = 1.0;
  }
  StepConfig cfg;
  cfg.eta_max = 1.0;
  Traffic traffic(net, cfg, 7, n);
  auto loop_route = [&](std::size_t i) {
    std::vector<EdgeIndex> r;
    const auto first = static_cast<EdgeIndex>(i % 4);
    for (int k = 0; k < 80; ++k) r.push_back(static_cast<EdgeIndex>((first + k) % 4));
    return r;
  };
  for (EvIndex i = 0; i < n; ++i) traffic.depart(i, fleet[i], loop_route(i), 0.0);

  const auto t0 = Clock::now();
  const std::uint64_t steps = 1000000;
  std::uint64_t overlaps = 0, negative = 0, vehicle_steps = 0, arrivals = 0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double now = static_cast<double>(k) * cfg.dt;
    auto rep = traffic.advance_all(fleet, now);
    for (auto i : rep.arrivals) {
      ++arrivals;
      traffic.depart(i, fleet[i], loop_route(i + k), now);
    }
    for (EdgeIndex e = 0; e < net.edge_count(); ++e)
      for (int l = 0; l < net.edge(e).lanes; ++l) {
        const auto lane = traffic.lane(e, l);
        for (std::size_t j = 0; j < lane.size(); ++j) {
          const auto& m = traffic.mover(lane[j]);
          ++vehicle_steps;
          if (m.speed < 0.0) ++negative;
          if (j > 0 && m.pos > traffic.mover(lane[j - 1]).rear() + 1e-9) ++overlaps;
        }
      }
  }
  report("car-following-safety", overlaps == 0 && negative == 0,
         fmt("%.0f steps, %.0f vehicle-steps, %.0f overlaps, %.0f negative speeds",
             static_cast<double>(steps), static_cast<double>(vehicle_steps),
             static_cast<double>(overlaps), static_cast<double>(negative)) +
             fmt(", %.0f trips completed, %.1f s", static_cast<double>(arrivals),
                 seconds_since(t0)));
}

// ---------------------------------------------------------------------------

void charging_curve() {
  int mismatches = 0;
  for (const auto& proto : reference_prototypes())
    for (auto mode : {ChargeMode::Fast, ChargeMode::Slow}) {
      const double p0 = mode == ChargeMode::Fast ? proto.fast_kw : proto.slow_kw;
      for (int k = 0; k <= 1000; ++k) {
        const double x = k / 1000.0;
        const double expect = x < 0.8 ? p0 : p0 * (3.4 - 3.0 * x);
        if (charging_power(proto, x, mode) != expect) ++mismatches;
      }
    }
  const auto p = reference_prototypes().front();
  const double below = charging_power(p, std::nextafter(0.8, 0.0), ChargeMode::Fast);
  const double at = charging_power(p, 0.8, ChargeMode::Fast);
  const double jump = std::abs(below - at) / p.fast_kw;
  report("charging-curve-conformance", mismatches == 0 && jump < 1e-12,
         fmt("12 curves x 1001 points, %.0f mismatches, relative jump at 0.8 = %.1e", mismatches,
             jump));
}

// ---------------------------------------------------------------------------

struct V2gRuns {
  RunRecord with, without;
};

V2gRuns& v2g_runs() {
  static V2gRuns runs = [] {
    CaseSpec spec;
    spec.name = "v2g-on";
    spec.scenario = acceptance_scenario();
    spec.seed = 7;
    spec.days = 2;
    spec.v2g = true;
    V2gRuns r;
    r.with = run_case(spec);
    spec.name = "v2g-off";
    spec.v2g = false;
    r.without = run_case(spec);
    return r;
  }();
  return runs;
}

void energy_ledger() {
  const auto& rec = v2g_runs().with;
  const auto& l = rec.ledger;
  const double lhs = l.charge_stored_kwh - l.v2g_drawn_kwh - l.driving_kwh;
  const double rhs = l.battery_end_kwh - l.battery_start_kwh;
  const double err = std::abs(lhs - rhs);
  report("energy-ledger", err <= 1e-3 && rec.counters.steps == 172800,
         fmt("2 days, %.0f EVs: charged %.3f - v2g %.3f - driving %.3f vs dE %.3f kWh", 500,
             l.charge_stored_kwh, l.v2g_drawn_kwh, l.driving_kwh) +
             fmt(" (rhs %.3f, |err| %.2e kWh)", rhs, err));
}

// ---------------------------------------------------------------------------

// Backward-forward sweep for a single line feeding a constant-power load.
std::complex<double> sweep_two_bus(std::complex<double> z, std::complex<double> s_load,
                                   std::complex<double>& s_send) {
  std::complex<double> v2 = 1.0;
  for (int it = 0; it < 200; ++it) {
    const auto i = std::conj(s_load / v2);
    v2 = 1.0 - z * i;
  }
  const auto i = std::conj(s_load / v2);
  s_send = 1.0 * std::conj(i);
  return v2;
}

void distflow() {
  PdnCase two;
  two.buses = {{"1", 0.9, 1.1, 0.0, 0.0}, {"2", 0.9, 1.1, 1000.0, 0.0}};
  two.lines = {{"l12", "1", "2", 0.01, 0.01}};
  Generator g;
  g.id = "grid";
  g.bus = "1";
  g.p_max_kw = 10000;
  g.q_min_kvar = -10000;
  g.q_max_kvar = 10000;
  two.gens = {g};
  two.slack = "1";
  const auto s2 = solve(two);
  std::complex<double> s_send;
  const auto v2 = sweep_two_bus({0.01, 0.01}, {0.1, 0.0}, s_send);
  const double dv = std::abs(std::sqrt(s2.v[1]) - std::abs(v2));
  const double dp = std::abs(s2.p_line[0] - s_send.real());
  const double dq = std::abs(s2.q_line[0] - s_send.imag());

  auto t0 = Clock::now();
  const auto base = ieee33();
  const auto s33 = solve(base);
  const double t_solve = seconds_since(t0);
  double worst = 0.0;
  bool within = true;
  for (std::size_t b = 0; b < base.buses.size(); ++b) {
    const double vm = std::sqrt(s33.v[b]);
    within = within && vm >= base.buses[b].v_min - 1e-6 && vm <= base.buses[b].v_max + 1e-6;
    worst = std::max(worst, std::max(base.buses[b].v_min - vm, vm - base.buses[b].v_max));
  }

  auto light = base;
  for (auto& b : light.buses) {
    b.p_kw *= 0.05;
    b.q_kvar *= 0.05;
  }
  t0 = Clock::now();
  const auto a = solve(light);
  const auto l = lin_solve(light);
  const double t_light = seconds_since(t0) / 2.0;
  double dlin = 0.0;
  for (std::size_t b = 0; b < light.buses.size(); ++b)
    dlin = std::max(dlin, std::abs(std::sqrt(a.v[b]) - std::sqrt(l.v[b])));

  const bool ok = dv < 1e-5 && dp < 1e-5 && dq < 1e-5 && s33.status == socp::Status::Solved &&
                  !s33.linearized && within && s33.cone_gap < 1e-4 && dlin < 1e-3 &&
                  t_solve < 5.0 && t_light < 5.0;
  report("distflow-correctness", ok,
         fmt("2-bus |dv| %.1e |dP| %.1e |dQ| %.1e pu; ", dv, dp, dq) +
             fmt("33-bus gap %.1e, limit excess %.1e, %.3f s; 5%%-load lin diff %.1e pu",
                 s33.cone_gap, worst, t_solve, dlin));
}

// ---------------------------------------------------------------------------

double window_mean(const Table& t, const std::string& col, const V2gWindow& w, double span) {
  const auto c = t.column(col);
  double sum = 0.0;
  int n = 0;
  for (const auto& r : t.rows)
    if (in_window(w, r[0], r[0] + span - 1e-6)) {
      sum += r[c];
      ++n;
    }
  return n ? sum / n : 0.0;
}

void v2g_dispatch() {
  const auto& runs = v2g_runs();
  const auto& cfg = acceptance_scenario()->cfg;
  int bound = 0, sum = 0, outside = 0, dispatched = 0;
  for (const auto& r : runs.with.v2g) {
    if (!(r.p_vcr_kw >= 0.0 && r.p_vcr_kw <= r.p_vc_kw)) ++bound;
    if (std::abs(r.alloc_sum_kw - r.p_vcr_kw) > 1e-9) ++sum;
    if (r.p_vcr_kw > 0.0) {
      ++dispatched;
      if (!in_window(cfg.v2g_window, r.t, r.t + cfg.dt_pdn - 1e-6)) ++outside;
    }
  }
  const auto& scs = runs.with.scs_load;
  const auto vc = scs.column("v2g_kw");
  for (const auto& r : scs.rows)
    if (r[vc] > 0.0 && !in_window(cfg.v2g_window, r[0], r[0] + cfg.record_interval - 1e-6))
      ++outside;
  const double on = window_mean(runs.with.scs_load, "net_kw", cfg.v2g_window, cfg.record_interval);
  const double off =
      window_mean(runs.without.scs_load, "net_kw", cfg.v2g_window, cfg.record_interval);
  const bool ok = bound == 0 && sum == 0 && outside == 0 && dispatched > 0 && on < off;
  report("v2g-dispatch-bounds", ok,
         fmt("%.0f offers (%.0f dispatched), %.0f bound / %.0f sum violations, ",
             static_cast<double>(runs.with.v2g.size()), dispatched, bound, sum) +
             fmt("%.0f outside window; window SCS net load %.1f kW with V2G vs %.1f kW without",
                 outside, on, off));
}

// ---------------------------------------------------------------------------

double energy_between(const Table& t, const std::string& col, double a, double b) {
  const auto c = t.column(col);
  double e = 0.0;
  for (const auto& r : t.rows)
    if (r[0] >= a && r[0] < b) e += r[c] / 60.0;
  return e;
}

void fault() {
  const double t_fault = 11 * 3600.0, t_end = 24 * 3600.0;
  CaseSpec spec;
  spec.name = "fault-base";
  spec.scenario = acceptance_scenario();
  spec.seed = 11;
  spec.days = 1;
  const auto base = run_case(spec);
  spec.name = "fault";
  spec.schedule = {{t_fault, "CS5", ScheduleAction::SetOffline, 0.0, ""}};
  const auto hit = run_case(spec);

  const auto c5 = hit.fcs_load.column("CS5");
  double after = 0.0;
  for (const auto& r : hit.fcs_load.rows)
    if (r[0] >= t_fault) after = std::max(after, r[c5]);
  const double faulted = energy_between(base.fcs_load, "CS5", t_fault, t_end);
  const double others_base = energy_between(base.fcs_load, "total_kw", t_fault, t_end) - faulted;
  const double others_hit = energy_between(hit.fcs_load, "total_kw", t_fault, t_end) -
                            energy_between(hit.fcs_load, "CS5", t_fault, t_end);
  const double gain = others_hit - others_base;
  const bool ok = after == 0.0 && faulted > 0.0 && gain >= 0.5 * faulted;
  report("fault-dissemination", ok,
         fmt("CS5 max load after 11:00 %.1f kW; baseline CS5 energy %.1f kWh, others +%.1f kWh "
             "(ratio %.2f)",
             after, faulted, gain, faulted > 0 ? gain / faulted : 0.0));
}

// ---------------------------------------------------------------------------

void price_sensitivity() {
  CaseSpec spec;
  spec.name = "price";
  spec.scenario = acceptance_scenario();
  spec.seed = 13;
  spec.days = 2;
  for (int k = 1; k <= 10; ++k) spec.prices["CS" + std::to_string(k)] = k % 2 ? 1.0 : 1.5;
  const auto rec = run_case(spec);
  double a = 0.0, b = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const auto v = rec.fcs_load.values("CS" + std::to_string(k));
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    (k % 2 ? a : b) += m / 5.0;
  }
  const double ratio = b > 0.0 ? a / b : std::numeric_limits<double>::infinity();
  report("price-sensitivity", a > 0.0 && a >= 3.0 * b,
         fmt("group A mean %.1f kW, group B mean %.1f kW, ratio %.1f", a, b, ratio));
}

// ---------------------------------------------------------------------------

void parallel() {
  std::vector<CaseSpec> specs;
  for (int k = 0; k < 8; ++k) {
    CaseSpec s;
    s.name = "seed" + std::to_string(101 + k);
    s.scenario = acceptance_scenario();
    s.seed = 101 + k;
    s.days = 1;
    specs.push_back(s);
  }
  std::vector<RunRecord> serial;
  auto t0 = Clock::now();
  for (const auto& s : specs) serial.push_back(run_case(s));
  const double t_serial = seconds_since(t0);
  const int workers = 4;
  t0 = Clock::now();
  const auto par = run_parallel(specs, workers);
  const double t_par = seconds_since(t0);
  int identical = 0;
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (par[i].error.empty() && par[i].record && *par[i].record == serial[i]) ++identical;
  const unsigned hw = std::thread::hardware_concurrency();
  const double ratio = t_par / t_serial;
  const bool deterministic = identical == 8;
  const bool fast = hw >= 8 && ratio < 0.6;
  std::string note = fmt("%.0f/8 bit-identical on %.0f workers; wall-clock %.1f s parallel vs "
                         "%.1f s serial",
                         identical, workers, t_par, t_serial) +
                     fmt(" (ratio %.2f) on %.0f hardware threads", ratio, hw);
  if (hw < 8) note += "; speedup needs >= 8 hardware threads";
  report("parallel-determinism-speedup", deterministic && fast, note);
}

// ---------------------------------------------------------------------------

void trip_statistics() {
  const auto model = PlaceModel::defaults({"w1", "w2"}, {"o1", "o2", "o3"});
  Rng rng = make_stream(5, "accept-first-departure");
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_first_departure(model, DayType::Weekday, rng) / 60.0;
  const double mean = sum / n;
  const double rel = std::abs(mean - 550.5) / 550.5;

  int broken = 0;
  for (int e = 0; e < 1000; ++e) {
    Rng r = make_stream(5, "accept-chain", static_cast<std::uint64_t>(e));
    const std::string home = "h" + std::to_string(e % 7);
    const auto c = generate_chain("ev" + std::to_string(e), home, 7, model, r);
    if (c.trips.empty() || c.trips.front().origin != home || c.trips.back().dest != home) {
      ++broken;
      continue;
    }
    for (std::size_t k = 1; k < c.trips.size(); ++k) {
      const auto& p = c.trips[k - 1];
      const auto& q = c.trips[k];
      const bool monotone = q.depart > p.depart;
      const bool chained = q.origin == p.dest;
      const int dp = static_cast<int>(p.depart / 86400.0), dq = static_cast<int>(q.depart / 86400.0);
      const bool closed = dq == dp || p.dest == home;
      if (!monotone || !chained || !closed) ++broken;
    }
  }
  report("trip-chain-statistics", rel < 0.01 && broken == 0,
         fmt("weekday first-departure mean %.2f min (rel err %.4f); %.0f invariant violations in "
             "1000 week-long chains",
             mean, rel, broken));
}

}  // namespace

int main() {
  guarded("routing-oracle-equivalence", routing_oracle);
  guarded("car-following-safety", car_following);
  guarded("charging-curve-conformance", charging_curve);
  guarded("energy-ledger", energy_ledger);
  guarded("distflow-correctness", distflow);
  guarded("v2g-dispatch-bounds", v2g_dispatch);
  guarded("fault-dissemination", fault);
  guarded("price-sensitivity", price_sensitivity);
  guarded("parallel-determinism-speedup", parallel);
  guarded("trip-chain-statistics", trip_statistics);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
