#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2sim/rng.hpp"

namespace v2sim {

enum class DayType { Weekday, Weekend };

// Day 0 is a Monday.
DayType day_type(int day);

enum class Place { Home = 0, Work = 1, Other = 2 };
inline constexpr int kPlaces = 3;

const char* to_string(Place p);

// T1 - shift ~ Gamma(shape, scale), all in minutes.
struct FirstDeparture {
  double shift_min = 0.0;
  double shape = 1.0;
  double scale = 1.0;
};

struct IntervalDist {
  double mean_s = 0.0;
  double sd_s = 0.0;
};

using TransitionRow = std::array<double, kPlaces>;
using TransitionMatrix = std::array<TransitionRow, kPlaces>;

struct PlaceModel {
  std::vector<std::string> work_edges;
  std::vector<std::string> other_edges;
  TransitionMatrix weekday{};
  TransitionMatrix weekend{};
  std::array<IntervalDist, kPlaces> intervals{};
  FirstDeparture first_weekday;
  FirstDeparture first_weekend;
  int trips_per_day = 3;

  // Synthetic defaults: work-centric weekdays, leisure weekends, intervals of
  // N(4h, 1h) from home, N(8h, 1h) from work and N(1.5h, 0.5h) elsewhere.
  static PlaceModel defaults(std::vector<std::string> work_edges,
                             std::vector<std::string> other_edges);

  void validate() const;  // throws ConfigError
  static PlaceModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Seconds after midnight, resampled until inside [0, 86400).
double sample_first_departure(const FirstDeparture& fd, Rng& rng);
double sample_first_departure(const PlaceModel& m, DayType d, Rng& rng);

struct TripSpec {
  double depart = 0.0;  // seconds since midnight of day 0
  std::string origin;
  std::string dest;

  bool operator==(const TripSpec&) const = default;
};

struct TripChain {
  std::string ev;
  std::vector<TripSpec> trips;
  int overflow_days = 0;  // days cut short after 100 failed interval draws

  bool operator==(const TripChain&) const = default;
};

// One closed home tour per day for `days` days starting at `first_day`.
// Departures strictly increase; each trip starts where the previous one ended
// and the last trip of every day returns home.
TripChain generate_chain(const std::string& ev, const std::string& home, int days,
                         const PlaceModel& model, Rng& rng, int first_day = 0);

nlohmann::json trips_to_json(const std::vector<TripChain>& chains);
std::vector<TripChain> trips_from_json(const nlohmann::json& j);

}  // namespace v2sim
