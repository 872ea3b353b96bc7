#include "v2sim/demo.hpp"

#include <array>
#include <string>

#include "v2sim/error.hpp"

namespace v2sim {

namespace {

struct SpurSite {
  int row, col;
};

// CS1..CS10; odd ids and even ids are each spread over the whole grid.
constexpr std::array<SpurSite, 10> kSites{{{1, 1}, {0, 2}, {1, 4}, {2, 0}, {3, 3},
                                           {2, 5}, {4, 1}, {5, 3}, {4, 4}, {3, 2}}};

}  // namespace

Scenario make_demo(const DemoOptions& o) {
  if (o.rows < 3 || o.cols < 3) throw ConfigError("demo grid needs at least 3 x 3 junctions");
  for (const auto& s : kSites)
    if (s.row >= o.rows || s.col >= o.cols) throw ConfigError("demo grid too small for its stations");

  auto jid = [&](int r, int c) { return "J" + std::to_string(r * o.cols + c + 1); };
  std::vector<JunctionSpec> js;
  std::vector<EdgeSpec> es;
  for (int r = 0; r < o.rows; ++r)
    for (int c = 0; c < o.cols; ++c) js.push_back({jid(r, c), Point{c * o.spacing_m, r * o.spacing_m}});
  auto road = [&](const std::string& a, const std::string& b, double len) {
    const std::string na = a.substr(1), nb = b.substr(1);
    es.push_back({"R" + na + "_" + nb, a, b, len, o.speed_mps, 2, false});
    es.push_back({"R" + nb + "_" + na, b, a, len, o.speed_mps, 2, false});
  };
  for (int r = 0; r < o.rows; ++r)
    for (int c = 0; c < o.cols; ++c) {
      if (c + 1 < o.cols) road(jid(r, c), jid(r, c + 1), o.spacing_m);
      if (r + 1 < o.rows) road(jid(r, c), jid(r + 1, c), o.spacing_m);
    }
  // One outlying junction beyond the top-right corner.
  const std::string outer = "J" + std::to_string(o.rows * o.cols + 1);
  const Point corner{(o.cols - 1) * o.spacing_m, (o.rows - 1) * o.spacing_m};
  js.push_back({outer, Point{corner.x + o.spacing_m, corner.y + o.spacing_m}});
  road(jid(o.rows - 1, o.cols - 1), outer, o.spacing_m * 1.5);
  road(jid(o.rows - 1, o.cols - 2), outer, o.spacing_m * 2.3);

  for (std::size_t k = 0; k < kSites.size(); ++k) {
    const auto& s = kSites[k];
    const std::string id = std::to_string(k + 1);
    const std::string at = jid(s.row, s.col);
    const std::string end = "S" + id;
    const double d = o.spur_m / 1.41421356237;
    js.push_back({end, Point{s.col * o.spacing_m + d, s.row * o.spacing_m + d}});
    es.push_back({"CS" + id, at, end, o.spur_m, o.speed_mps, 1, true});
    es.push_back({"-CS" + id, end, at, o.spur_m, o.speed_mps, 1, false});
  }

  Scenario sc;
  sc.net = RoadNetwork(std::move(js), std::move(es));
  sc.cfg.days = 2;
  sc.cfg.fleet_size = o.fleet_size;
  sc.cfg.v2g_price = o.v2g_price;
  sc.cfg.coefficients.soc = {o.soc_min, o.soc_max};
  sc.cfg.validate();
  sc.pdn = ieee33();
  sc.pdn.interval_s = sc.cfg.dt_pdn;
  sc.pdn.v2g_price = o.v2g_price;
  std::vector<std::string> buses;
  for (const auto& b : sc.pdn.buses)
    if (b.id != sc.pdn.slack) buses.push_back(b.id);
  StationDefaults d;
  d.fcs_piles = o.fcs_piles;
  d.scs_piles = o.scs_piles;
  d.fcs_price = o.fcs_price;
  d.scs_price = o.scs_price;
  sc.stations = infer_stations(sc.net, d, buses);
  sc.prototypes = reference_prototypes();
  auto homes = home_edges(sc);
  sc.places = PlaceModel::defaults(homes, homes);
  sc.validate();
  return sc;
}

}  // namespace v2sim
