#include "v2sim/pdn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "v2sim/error.hpp"

namespace v2sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_kw(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Tree orientation of a case: every non-slack bus has exactly one parent line.
struct Tree {
  std::size_t slack = 0;
  std::vector<std::size_t> from, to;      // per line, oriented away from slack
  std::vector<int> parent_line;           // per bus, -1 for the slack
  std::vector<std::vector<int>> children; // per bus, child line indices
};

Tree build_tree(const PdnCase& c) {
  const std::size_t nb = c.buses.size();
  if (nb == 0) throw NotRadial("pdn: no buses");
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < nb; ++i)
    if (!idx.emplace(c.buses[i].id, i).second)
      throw ConfigError("pdn: duplicate bus '" + c.buses[i].id + "'");
  auto find = [&](const std::string& id) {
    auto it = idx.find(id);
    if (it == idx.end()) throw UnknownBus("pdn: unknown bus '" + id + "'");
    return it->second;
  };
  Tree t;
  t.slack = find(c.slack);
  if (c.lines.size() + 1 != nb)
    throw NotRadial("pdn: " + std::to_string(c.lines.size()) + " lines for " +
                    std::to_string(nb) + " buses; a radial feeder needs exactly |B| - 1");
  std::vector<std::vector<int>> adj(nb);
  std::vector<std::size_t> a(c.lines.size()), b(c.lines.size());
  for (std::size_t k = 0; k < c.lines.size(); ++k) {
    a[k] = find(c.lines[k].from);
    b[k] = find(c.lines[k].to);
    if (a[k] == b[k]) throw NotRadial("pdn: line '" + c.lines[k].id + "' is a self loop");
    if (c.lines[k].r_pu < 0 || c.lines[k].x_pu < 0)
      throw ConfigError("pdn: line '" + c.lines[k].id + "' has negative impedance");
    adj[a[k]].push_back(static_cast<int>(k));
    adj[b[k]].push_back(static_cast<int>(k));
  }
  t.from.assign(c.lines.size(), 0);
  t.to.assign(c.lines.size(), 0);
  t.parent_line.assign(nb, -2);
  t.children.assign(nb, {});
  t.parent_line[t.slack] = -1;
  std::deque<std::size_t> q{t.slack};
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (int k : adj[u]) {
      if (k == t.parent_line[u]) continue;
      const auto w = a[k] == u ? b[k] : a[k];
      if (t.parent_line[w] != -2) throw NotRadial("pdn: the feeder contains a loop");
      t.parent_line[w] = k;
      t.from[k] = u;
      t.to[k] = w;
      t.children[u].push_back(k);
      q.push_back(w);
    }
  }
  for (std::size_t i = 0; i < nb; ++i)
    if (t.parent_line[i] == -2)
      throw NotRadial("pdn: bus '" + c.buses[i].id + "' is not connected to the slack bus");
  return t;
}

}  // namespace

std::size_t PdnCase::bus_index(const std::string& id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  throw UnknownBus("pdn: unknown bus '" + id + "'");
}

void check_radial(const PdnCase& c) { (void)build_tree(c); }

PdnCase PdnCase::from_json(const nlohmann::json& j) {
  PdnCase c;
  try {
    c.base_kv = j.value("base_kv", c.base_kv);
    c.base_mva = j.value("base_mva", c.base_mva);
    c.slack = j.at("slack").get<std::string>();
    c.v_slack = j.value("v_slack", 1.0);
    c.v2g_price = j.value("v2g_price", c.v2g_price);
    c.interval_s = j.value("interval_s", c.interval_s);
    const double zbase = c.base_kv * c.base_kv / c.base_mva;
    for (const auto& bj : j.at("buses")) {
      PdnBus b;
      b.id = bj.at("id").get<std::string>();
      b.v_min = bj.value("v_min", b.v_min);
      b.v_max = bj.value("v_max", b.v_max);
      b.p_kw = bj.value("p_kw", 0.0);
      b.q_kvar = bj.value("q_kvar", 0.0);
      if (!(b.v_min > 0 && b.v_min <= b.v_max))
        throw ConfigError("pdn: bus '" + b.id + "' needs 0 < v_min <= v_max");
      c.buses.push_back(std::move(b));
    }
    for (const auto& lj : j.at("lines")) {
      PdnLine l;
      l.from = lj.at("from").get<std::string>();
      l.to = lj.at("to").get<std::string>();
      l.id = lj.value("id", l.from + "-" + l.to);
      if (lj.contains("r_ohm")) {
        l.r_pu = lj.at("r_ohm").get<double>() / zbase;
        l.x_pu = lj.at("x_ohm").get<double>() / zbase;
      } else {
        l.r_pu = lj.at("r_pu").get<double>();
        l.x_pu = lj.at("x_pu").get<double>();
      }
      if (lj.contains("i_max_pu")) {
        const double i = lj.at("i_max_pu").get<double>();
        l.l_max_pu = i * i;
      }
      c.lines.push_back(std::move(l));
    }
    for (const auto& gj : j.at("generators")) {
      Generator g;
      g.id = gj.at("id").get<std::string>();
      g.bus = gj.at("bus").get<std::string>();
      g.a = gj.value("a", g.a);
      g.b = gj.value("b", g.b);
      g.c = gj.value("c", g.c);
      g.p_min_kw = gj.value("p_min_kw", 0.0);
      g.p_max_kw = gj.at("p_max_kw").get<double>();
      g.q_min_kvar = gj.value("q_min_kvar", 0.0);
      g.q_max_kvar = gj.value("q_max_kvar", 0.0);
      if (g.p_min_kw > g.p_max_kw || g.q_min_kvar > g.q_max_kvar)
        throw ConfigError("pdn: generator '" + g.id + "' has min > max");
      if (g.a < 0) throw ConfigError("pdn: generator '" + g.id + "' needs a >= 0");
      c.gens.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("pdn.json: ") + ex.what());
  }
  check_radial(c);
  for (const auto& g : c.gens) (void)c.bus_index(g.bus);
  return c;
}

nlohmann::json PdnCase::to_json() const {
  nlohmann::json j{{"base_kv", base_kv},   {"base_mva", base_mva},   {"slack", slack},
                   {"v_slack", v_slack},   {"v2g_price", v2g_price}, {"interval_s", interval_s}};
  auto& bs = j["buses"] = nlohmann::json::array();
  for (const auto& b : buses)
    bs.push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}, {"p_kw", b.p_kw},
                  {"q_kvar", b.q_kvar}});
  auto& ls = j["lines"] = nlohmann::json::array();
  for (const auto& l : lines) {
    nlohmann::json lj{{"id", l.id}, {"from", l.from}, {"to", l.to}, {"r_pu", l.r_pu},
                      {"x_pu", l.x_pu}};
    if (std::isfinite(l.l_max_pu)) lj["i_max_pu"] = std::sqrt(l.l_max_pu);
    ls.push_back(std::move(lj));
  }
  auto& gs = j["generators"] = nlohmann::json::array();
  for (const auto& g : gens)
    gs.push_back({{"id", g.id},
                  {"bus", g.bus},
                  {"a", g.a},
                  {"b", g.b},
                  {"c", g.c},
                  {"p_min_kw", g.p_min_kw},
                  {"p_max_kw", g.p_max_kw},
                  {"q_min_kvar", g.q_min_kvar},
                  {"q_max_kvar", g.q_max_kvar}});
  return j;
}

PdnCase ieee33() {
  struct Row {
    int from, to;
    double r, x, p, q;
  };
  static constexpr Row rows[] = {
      {1, 2, 0.0922, 0.0470, 100, 60},   {2, 3, 0.4930, 0.2511, 90, 40},
      {3, 4, 0.3660, 0.1864, 120, 80},   {4, 5, 0.3811, 0.1941, 60, 30},
      {5, 6, 0.8190, 0.7070, 60, 20},    {6, 7, 0.1872, 0.6188, 200, 100},
      {7, 8, 0.7114, 0.2351, 200, 100},  {8, 9, 1.0300, 0.7400, 60, 20},
      {9, 10, 1.0440, 0.7400, 60, 20},   {10, 11, 0.1966, 0.0650, 45, 30},
      {11, 12, 0.3744, 0.1238, 60, 35},  {12, 13, 1.4680, 1.1550, 60, 35},
      {13, 14, 0.5416, 0.7129, 120, 80}, {14, 15, 0.5910, 0.5260, 60, 10},
      {15, 16, 0.7463, 0.5450, 60, 20},  {16, 17, 1.2890, 1.7210, 60, 20},
      {17, 18, 0.7320, 0.5740, 90, 40},  {2, 19, 0.1640, 0.1565, 90, 40},
      {19, 20, 1.5042, 1.3554, 90, 40},  {20, 21, 0.4095, 0.4784, 90, 40},
      {21, 22, 0.7089, 0.9373, 90, 40},  {3, 23, 0.4512, 0.3083, 90, 50},
      {23, 24, 0.8980, 0.7091, 420, 200}, {24, 25, 0.8960, 0.7011, 420, 200},
      {6, 26, 0.2030, 0.1034, 60, 25},   {26, 27, 0.2842, 0.1447, 60, 25},
      {27, 28, 1.0590, 0.9337, 60, 20},  {28, 29, 0.8042, 0.7006, 120, 70},
      {29, 30, 0.5075, 0.2585, 200, 600}, {30, 31, 0.9744, 0.9630, 150, 70},
      {31, 32, 0.3105, 0.3619, 210, 100}, {32, 33, 0.3410, 0.5302, 60, 40},
  };
  PdnCase c;
  c.base_kv = 12.66;
  c.base_mva = 10.0;
  const double zbase = c.base_kv * c.base_kv / c.base_mva;
  for (int i = 1; i <= 33; ++i) c.buses.push_back({std::to_string(i), 0.90, 1.05, 0.0, 0.0});
  for (const auto& r : rows) {
    c.buses[r.to - 1].p_kw = r.p;
    c.buses[r.to - 1].q_kvar = r.q;
    c.lines.push_back({std::to_string(r.from) + "-" + std::to_string(r.to), std::to_string(r.from),
                       std::to_string(r.to), r.r / zbase, r.x / zbase, kInf});
  }
  c.slack = "1";
  c.gens.push_back({"grid", "1", 0.0001, 0.3, 10.0, 0.0, 10000.0, -10000.0, 10000.0});
  for (int b : {2, 3, 6, 8})
    c.gens.push_back({"G" + std::to_string(b), std::to_string(b), 0.0001, 0.3, 10.0, 0.0, 1000.0,
                      -500.0, 500.0});
  return c;
}

PdnCase attach_loads(const PdnCase& base, std::span<const StationLoad> loads,
                     std::span<const V2gInjection> v2g) {
  PdnCase c = base;
  for (const auto& l : loads) {
    auto& b = c.buses[c.bus_index(l.bus)];
    b.p_kw += l.p_kw;
    b.q_kvar += l.q_kvar;
  }
  c.v2g.assign(v2g.begin(), v2g.end());
  for (const auto& v : c.v2g) {
    (void)c.bus_index(v.bus);
    if (v.cap_kw < 0) throw ConfigError("pdn: negative V2G capacity at '" + v.station + "'");
  }
  return c;
}

// ---- optimizer ---------------------------------------------------------------

struct PdnOptimizer::Impl {
  bool linear;
  PdnOptions opt;
  Tree tree;
  std::size_t nb, nl, ng, nv;
  // variable offsets
  int oP, oQ, oL, oV, oPg, oQg, oPv, n;
  // row offsets
  int rPb, rQb, rVd, rSlack, n_eq;
  int bV, bL, bPg, bQg, bPv, n_box;
  std::vector<std::size_t> gen_bus, v2g_bus;
  std::vector<std::string> gen_ids, v2g_ids;
  std::unique_ptr<socp::Solver> solver;
  double kwh_per_pu = 0.0;

  Impl(const PdnCase& c, bool lin, PdnOptions o) : linear(lin), opt(std::move(o)) {
    tree = build_tree(c);
    nb = c.buses.size();
    nl = c.lines.size();
    ng = c.gens.size();
    nv = c.v2g.size();
    for (const auto& g : c.gens) {
      gen_bus.push_back(c.bus_index(g.bus));
      gen_ids.push_back(g.id);
    }
    for (const auto& v : c.v2g) {
      v2g_bus.push_back(c.bus_index(v.bus));
      v2g_ids.push_back(v.station);
    }
    int k = 0;
    oP = k; k += static_cast<int>(nl);
    oQ = k; k += static_cast<int>(nl);
    oL = k; if (!linear) k += static_cast<int>(nl);
    oV = k; k += static_cast<int>(nb);
    oPg = k; k += static_cast<int>(ng);
    oQg = k; k += static_cast<int>(ng);
    oPv = k; k += static_cast<int>(nv);
    n = k;
    int r = 0;
    rPb = r; r += static_cast<int>(nb);
    rQb = r; r += static_cast<int>(nb);
    rVd = r; r += static_cast<int>(nl);
    rSlack = r; r += 1;
    n_eq = r;
    int s = 0;
    bV = s; s += static_cast<int>(nb) - 1;
    bL = s; if (!linear) s += static_cast<int>(nl);
    bPg = s; s += static_cast<int>(ng);
    bQg = s; s += static_cast<int>(ng);
    bPv = s; s += static_cast<int>(nv);
    n_box = s;
    build(c);
  }

  void check_same_structure(const PdnCase& c) const {
    bool same = c.buses.size() == nb && c.lines.size() == nl && c.gens.size() == ng &&
                c.v2g.size() == nv;
    for (std::size_t i = 0; same && i < nv; ++i) same = c.v2g[i].station == v2g_ids[i];
    if (!same) throw Error("pdn: case structure differs from the optimizer's");
  }

  void build(const PdnCase& c) {
    kwh_per_pu = c.base_kw() * c.interval_s / 3600.0;
    std::vector<Eigen::Triplet<double>> at;
    const int box0 = n_eq;
    // balances
    for (std::size_t j = 0; j < nb; ++j) {
      const int pl = tree.parent_line[j];
      if (pl >= 0) {
        at.emplace_back(rPb + j, oP + pl, 1.0);
        at.emplace_back(rQb + j, oQ + pl, 1.0);
        if (!linear) {
          at.emplace_back(rPb + j, oL + pl, -c.lines[pl].r_pu);
          at.emplace_back(rQb + j, oL + pl, -c.lines[pl].x_pu);
        }
      }
      for (int ch : tree.children[j]) {
        at.emplace_back(rPb + j, oP + ch, -1.0);
        at.emplace_back(rQb + j, oQ + ch, -1.0);
      }
    }
    for (std::size_t g = 0; g < ng; ++g) {
      at.emplace_back(rPb + gen_bus[g], oPg + g, 1.0);
      at.emplace_back(rQb + gen_bus[g], oQg + g, 1.0);
    }
    for (std::size_t v = 0; v < nv; ++v) at.emplace_back(rPb + v2g_bus[v], oPv + v, 1.0);
    // voltage drop: v_to - v_from + 2(rP + xQ) - (r^2 + x^2) l = 0
    for (std::size_t k = 0; k < nl; ++k) {
      const auto& ln = c.lines[k];
      at.emplace_back(rVd + k, oV + tree.to[k], 1.0);
      at.emplace_back(rVd + k, oV + tree.from[k], -1.0);
      at.emplace_back(rVd + k, oP + k, 2.0 * ln.r_pu);
      at.emplace_back(rVd + k, oQ + k, 2.0 * ln.x_pu);
      if (!linear) at.emplace_back(rVd + k, oL + k, -(ln.r_pu * ln.r_pu + ln.x_pu * ln.x_pu));
    }
    at.emplace_back(rSlack, oV + tree.slack, 1.0);
    // boxes
    int s = 0;
    for (std::size_t j = 0; j < nb; ++j)
      if (j != tree.slack) at.emplace_back(box0 + bV + s++, oV + j, 1.0);
    if (!linear)
      for (std::size_t k = 0; k < nl; ++k) at.emplace_back(box0 + bL + k, oL + k, 1.0);
    for (std::size_t g = 0; g < ng; ++g) {
      at.emplace_back(box0 + bPg + g, oPg + g, 1.0);
      at.emplace_back(box0 + bQg + g, oQg + g, 1.0);
    }
    for (std::size_t v = 0; v < nv; ++v) at.emplace_back(box0 + bPv + v, oPv + v, 1.0);
    // cones: (l + v_from, 2P, 2Q, l - v_from)
    std::vector<int> soc;
    int m = n_eq + n_box;
    if (!linear) {
      for (std::size_t k = 0; k < nl; ++k) {
        const int vf = oV + static_cast<int>(tree.from[k]);
        at.emplace_back(m, oL + k, 1.0);
        at.emplace_back(m, vf, 1.0);
        at.emplace_back(m + 1, oP + k, 2.0);
        at.emplace_back(m + 2, oQ + k, 2.0);
        at.emplace_back(m + 3, oL + k, 1.0);
        at.emplace_back(m + 3, vf, -1.0);
        soc.push_back(4);
        m += 4;
      }
    }
    socp::Problem p;
    p.A.resize(m, n);
    p.A.setFromTriplets(at.begin(), at.end());
    std::vector<Eigen::Triplet<double>> pt;
    for (std::size_t g = 0; g < ng; ++g) {
      const double d = 2.0 * c.gens[g].a * kwh_per_pu * kwh_per_pu;
      if (d > 0) pt.emplace_back(oPg + g, oPg + g, d);
      if (opt.reactive_weight > 0) pt.emplace_back(oQg + g, oQg + g, 2.0 * opt.reactive_weight);
    }
    p.P.resize(n, n);
    p.P.setFromTriplets(pt.begin(), pt.end());
    p.q = cost_vector(c);
    p.n_eq = n_eq;
    p.n_box = n_box;
    p.soc = std::move(soc);
    fill_bounds(c, p.b, p.lo, p.hi);
    solver = std::make_unique<socp::Solver>(std::move(p), opt.solver);
  }

  socp::Vec cost_vector(const PdnCase& c) const {
    socp::Vec q = socp::Vec::Zero(n);
    for (std::size_t g = 0; g < ng; ++g) q[oPg + g] = c.gens[g].b * kwh_per_pu;
    for (std::size_t v = 0; v < nv; ++v) q[oPv + v] = c.v2g[v].price * kwh_per_pu;
    return q;
  }

  void fill_bounds(const PdnCase& c, socp::Vec& b, socp::Vec& lo, socp::Vec& hi) const {
    const double base = c.base_kw();
    b = socp::Vec::Zero(n_eq);
    for (std::size_t j = 0; j < nb; ++j) {
      b[rPb + j] = c.buses[j].p_kw / base;
      b[rQb + j] = c.buses[j].q_kvar / base;
    }
    b[rSlack] = c.v_slack * c.v_slack;
    lo.resize(n_box);
    hi.resize(n_box);
    int s = 0;
    for (std::size_t j = 0; j < nb; ++j) {
      if (j == tree.slack) continue;
      lo[bV + s] = c.buses[j].v_min * c.buses[j].v_min;
      hi[bV + s] = c.buses[j].v_max * c.buses[j].v_max;
      ++s;
    }
    if (!linear)
      for (std::size_t k = 0; k < nl; ++k) {
        lo[bL + k] = 0.0;
        hi[bL + k] = c.lines[k].l_max_pu;
      }
    for (std::size_t g = 0; g < ng; ++g) {
      lo[bPg + g] = c.gens[g].p_min_kw / base;
      hi[bPg + g] = c.gens[g].p_max_kw / base;
      lo[bQg + g] = c.gens[g].q_min_kvar / base;
      hi[bQg + g] = c.gens[g].q_max_kvar / base;
    }
    for (std::size_t v = 0; v < nv; ++v) {
      lo[bPv + v] = 0.0;
      hi[bPv + v] = c.v2g[v].cap_kw / base;
    }
  }

  std::string row_name(const PdnCase& c, int row) const {
    if (row < n_eq) {
      if (row < rQb) return "active power balance at bus " + c.buses[row - rPb].id;
      if (row < rVd) return "reactive power balance at bus " + c.buses[row - rQb].id;
      if (row < rSlack) return "voltage drop on line " + c.lines[row - rVd].id;
      return "slack voltage";
    }
    const int r = row - n_eq;
    if (r < bL) {
      int s = 0;
      for (std::size_t j = 0; j < nb; ++j) {
        if (j == tree.slack) continue;
        if (s++ == r - bV) return "voltage limits at bus " + c.buses[j].id;
      }
    }
    if (r < bPg) return "current limit on line " + c.lines[r - bL].id;
    if (r < bQg) return "active power limits of generator " + c.gens[r - bPg].id;
    if (r < bPv) return "reactive power limits of generator " + c.gens[r - bQg].id;
    return "V2G capacity at " + c.v2g[r - bPv].station;
  }

  void precheck(const PdnCase& c) const {
    double pl = 0, ql = 0, pmax = 0, pmin = 0, qmax = 0, qmin = 0;
    for (const auto& b : c.buses) {
      pl += b.p_kw;
      ql += b.q_kvar;
    }
    for (const auto& g : c.gens) {
      pmax += g.p_max_kw;
      pmin += g.p_min_kw;
      qmax += g.q_max_kvar;
      qmin += g.q_min_kvar;
    }
    for (const auto& v : c.v2g) pmax += v.cap_kw;
    if (pl > pmax)
      throw Infeasible("pdn: active load " + fmt_kw(pl) + " kW exceeds the generator limit " +
                       fmt_kw(pmax) + " kW");
    if (ql > qmax)
      throw Infeasible("pdn: reactive load " + fmt_kw(ql) + " kvar exceeds the generator limit " +
                       fmt_kw(qmax) + " kvar");
    if (linear && pmin > pl)
      throw Infeasible("pdn: generator minimum output " + fmt_kw(pmin) +
                       " kW exceeds the active load " + fmt_kw(pl) + " kW");
    if (linear && qmin > ql)
      throw Infeasible("pdn: generator minimum reactive output " + fmt_kw(qmin) +
                       " kvar exceeds the reactive load " + fmt_kw(ql) + " kvar");
    const auto& sb = c.buses[tree.slack];
    if (c.v_slack < sb.v_min || c.v_slack > sb.v_max)
      throw Infeasible("pdn: slack voltage outside the limits of bus " + sb.id);
  }

  PdnSolution run(const PdnCase& c) {
    check_same_structure(c);
    precheck(c);
    socp::Vec b, lo, hi;
    fill_bounds(c, b, lo, hi);
    solver->update_rhs(b, lo, hi);
    solver->update_q(cost_vector(c));
    auto r = solver->solve();
    if (r.status == socp::Status::PrimalInfeasible) {
      solver->reset_iterate();
      throw Infeasible("pdn: infeasible; binding constraint: " +
                       (r.blocking_row ? row_name(c, *r.blocking_row) : std::string("unknown")));
    }
    return extract(c, r);
  }

  PdnSolution extract(const PdnCase& c, const socp::Result& r) const {
    const double base = c.base_kw();
    PdnSolution s;
    s.linearized = linear;
    s.status = r.status;
    s.iterations = r.iterations;
    const auto& x = r.x;
    s.p_line.resize(nl);
    s.q_line.resize(nl);
    s.l_line.assign(nl, 0.0);
    for (std::size_t k = 0; k < nl; ++k) {
      s.p_line[k] = x[oP + k];
      s.q_line[k] = x[oQ + k];
      if (!linear) s.l_line[k] = x[oL + k];
    }
    s.v.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) s.v[j] = x[oV + j];
    double cost = 0.0;
    for (std::size_t g = 0; g < ng; ++g) {
      s.p_gen_kw.push_back(x[oPg + g] * base);
      s.q_gen_kvar.push_back(x[oQg + g] * base);
      const double e = x[oPg + g] * kwh_per_pu;
      cost += c.gens[g].a * e * e + c.gens[g].b * e + c.gens[g].c;
    }
    for (std::size_t v = 0; v < nv; ++v) {
      const double p = std::clamp(x[oPv + v] * base, 0.0, c.v2g[v].cap_kw);
      s.p_v2g_kw.push_back(p);
      cost += c.v2g[v].price * p * c.interval_s / 3600.0;
    }
    s.objective = cost;
    // residuals against the model equations
    std::vector<double> pb(nb, 0.0), qb(nb, 0.0);
    for (std::size_t j = 0; j < nb; ++j) {
      pb[j] = -c.buses[j].p_kw / base;
      qb[j] = -c.buses[j].q_kvar / base;
    }
    for (std::size_t k = 0; k < nl; ++k) {
      const auto& ln = c.lines[k];
      const auto i = tree.from[k], j = tree.to[k];
      pb[j] += s.p_line[k] - ln.r_pu * s.l_line[k];
      qb[j] += s.q_line[k] - ln.x_pu * s.l_line[k];
      pb[i] -= s.p_line[k];
      qb[i] -= s.q_line[k];
      const double vd = s.v[j] - s.v[i] + 2.0 * (ln.r_pu * s.p_line[k] + ln.x_pu * s.q_line[k]) -
                        (ln.r_pu * ln.r_pu + ln.x_pu * ln.x_pu) * s.l_line[k];
      s.voltage_residual = std::max(s.voltage_residual, std::abs(vd));
      if (!linear) {
        const double gap = s.p_line[k] * s.p_line[k] + s.q_line[k] * s.q_line[k] -
                           s.l_line[k] * s.v[i];
        s.cone_gap = std::max(s.cone_gap, std::abs(gap));
      }
    }
    for (std::size_t g = 0; g < ng; ++g) {
      pb[gen_bus[g]] += x[oPg + g];
      qb[gen_bus[g]] += x[oQg + g];
    }
    for (std::size_t v = 0; v < nv; ++v) pb[v2g_bus[v]] += s.p_v2g_kw[v] / base;
    for (std::size_t j = 0; j < nb; ++j)
      s.balance_residual = std::max({s.balance_residual, std::abs(pb[j]), std::abs(qb[j])});
    return s;
  }
};

PdnOptimizer::PdnOptimizer(const PdnCase& structure, bool linear, PdnOptions opt)
    : impl_(std::make_unique<Impl>(structure, linear, std::move(opt))) {}
PdnOptimizer::~PdnOptimizer() = default;
PdnOptimizer::PdnOptimizer(PdnOptimizer&&) noexcept = default;
PdnOptimizer& PdnOptimizer::operator=(PdnOptimizer&&) noexcept = default;

PdnSolution PdnOptimizer::solve(const PdnCase& c) { return impl_->run(c); }
bool PdnOptimizer::linear() const { return impl_->linear; }

PdnSolution lin_solve(const PdnCase& c, const PdnOptions& opt) {
  return PdnOptimizer(c, true, opt).solve(c);
}

PdnSolution solve(const PdnCase& c, const PdnOptions& opt) {
  auto s = PdnOptimizer(c, false, opt).solve(c);
  if (s.status == socp::Status::MaxIterations) return lin_solve(c, opt);
  return s;
}

}  // namespace v2sim
