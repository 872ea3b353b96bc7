#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2sim/socp.hpp"

namespace v2sim {

struct PdnBus {
  std::string id;
  double v_min = 0.9;   // pu magnitude
  double v_max = 1.1;   // pu magnitude
  double p_kw = 0.0;    // base load
  double q_kvar = 0.0;
};

struct PdnLine {
  std::string id;
  std::string from;
  std::string to;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double l_max_pu = std::numeric_limits<double>::infinity();  // current squared
};

// Cost f(x) = a x^2 + b x + c, x in kWh generated over one PDN interval.
struct Generator {
  std::string id;
  std::string bus;
  double a = 0.0001, b = 0.3, c = 10.0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double q_min_kvar = 0.0;
  double q_max_kvar = 0.0;
};

// Dispatchable V2G injection of one SCS: 0 <= P <= cap, paid `price` $/kWh.
struct V2gInjection {
  std::string station;
  std::string bus;
  double cap_kw = 0.0;
  double price = 1.0;
};

struct PdnCase {
  double base_kv = 12.66;
  double base_mva = 10.0;
  std::vector<PdnBus> buses;
  std::vector<PdnLine> lines;
  std::vector<Generator> gens;
  std::string slack;
  double v_slack = 1.0;         // pu magnitude
  double v2g_price = 1.0;       // default $/kWh for injections
  double interval_s = 300.0;    // energy horizon of the cost function
  std::vector<V2gInjection> v2g;

  double base_kw() const { return base_mva * 1000.0; }
  std::size_t bus_index(const std::string& id) const;  // throws UnknownBus

  static PdnCase from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// The 33-bus Baran-Wu feeder at 12.66 kV / 10 MVA with generators at buses
// 2, 3, 6 and 8 and the external grid at bus 1.
PdnCase ieee33();

struct StationLoad {
  std::string bus;
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

// Adds station loads to their buses and replaces the V2G injections.
PdnCase attach_loads(const PdnCase& base, std::span<const StationLoad> loads,
                     std::span<const V2gInjection> v2g);

struct PdnSolution {
  bool linearized = false;
  socp::Status status = socp::Status::Solved;
  int iterations = 0;
  double objective = 0.0;             // $
  std::vector<double> p_line, q_line, l_line;  // pu, per line in tree direction
  std::vector<double> v;              // pu squared, per bus
  std::vector<double> p_gen_kw, q_gen_kvar;
  std::vector<double> p_v2g_kw;       // per injection
  double cone_gap = 0.0;              // max |P^2 + Q^2 - l v_from|
  double balance_residual = 0.0;      // pu
  double voltage_residual = 0.0;      // pu
};

// Rejects anything that is not a tree rooted at the slack bus. Lines may be
// declared in either direction; flows are always reported away from the slack.
void check_radial(const PdnCase& c);

struct PdnOptions {
  socp::Settings solver;
  // Weight ($ per pu^2 per interval) of a quadratic penalty on generator
  // reactive output. Pins down the reactive dispatch, which the generation
  // cost alone leaves free in the linear model.
  double reactive_weight = 1.0;
};

// Branch-flow optimal dispatch (second-order cone relaxation).
PdnSolution solve(const PdnCase& c, const PdnOptions& opt = {});
// Lossless linear model: line losses dropped from balance and voltage drop.
PdnSolution lin_solve(const PdnCase& c, const PdnOptions& opt = {});

// Reusable optimizer for a fixed topology: the problem structure and its
// factorization are kept between calls so consecutive intervals warm start.
// Loads, caps and prices may change; buses, lines, generators and the set of
// injection stations may not.
class PdnOptimizer {
 public:
  PdnOptimizer(const PdnCase& structure, bool linear, PdnOptions opt = {});
  ~PdnOptimizer();
  PdnOptimizer(PdnOptimizer&&) noexcept;
  PdnOptimizer& operator=(PdnOptimizer&&) noexcept;

  PdnSolution solve(const PdnCase& c);
  bool linear() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace v2sim
