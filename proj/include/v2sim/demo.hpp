#pragma once

#include <cstddef>

#include "v2sim/scenario.hpp"

namespace v2sim {

// Synthetic city: a rows x cols grid of two-way roads plus one outlying
// junction, ten fast-charging stations on dead-end spurs (CS1..CS10), a slow
// charging station on every road and the 33-bus feeder.
struct DemoOptions {
  int rows = 6;
  int cols = 6;
  double spacing_m = 1500.0;
  double speed_mps = 13.89;
  double spur_m = 300.0;
  std::size_t fleet_size = 500;
  int fcs_piles = 10;
  int scs_piles = 1;
  double fcs_price = 1.5;
  double scs_price = 0.5;
  double v2g_price = 0.31;
  double soc_min = 0.15;
  double soc_max = 0.6;
};

Scenario make_demo(const DemoOptions& o = {});

}  // namespace v2sim
