#include "v2sim/tripgen.hpp"

#include <cmath>
#include <random>

#include "v2sim/error.hpp"

namespace v2sim {

namespace {

constexpr double kDay = 86400.0;
constexpr int kMaxResamples = 100;
constexpr const char* kPlaceNames[kPlaces] = {"home", "work", "other"};

Place sample_place(const TransitionRow& row, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int k = 0; k < kPlaces; ++k) {
    acc += row[k];
    if (u < acc) return static_cast<Place>(k);
  }
  for (int k = kPlaces - 1; k >= 0; --k)
    if (row[k] > 0.0) return static_cast<Place>(k);
  return Place::Home;
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

Place parse_place(const std::string& s) {
  for (int k = 0; k < kPlaces; ++k)
    if (s == kPlaceNames[k]) return static_cast<Place>(k);
  throw ConfigError("placemodel.json: unknown place '" + s + "'");
}

nlohmann::json matrix_to_json(const TransitionMatrix& m) {
  nlohmann::json j;
  for (int a = 0; a < kPlaces; ++a)
    for (int b = 0; b < kPlaces; ++b) j[kPlaceNames[a]][kPlaceNames[b]] = m[a][b];
  return j;
}

TransitionMatrix matrix_from_json(const nlohmann::json& j) {
  TransitionMatrix m{};
  for (auto& [from, row] : j.items())
    for (auto& [to, p] : row.items())
      m[static_cast<int>(parse_place(from))][static_cast<int>(parse_place(to))] = p.get<double>();
  return m;
}

nlohmann::json first_to_json(const FirstDeparture& f) {
  return {{"shift_min", f.shift_min}, {"shape", f.shape}, {"scale", f.scale}};
}

FirstDeparture first_from_json(const nlohmann::json& j) {
  return {j.at("shift_min").get<double>(), j.at("shape").get<double>(),
          j.at("scale").get<double>()};
}

}  // namespace

DayType day_type(int day) { return day % 7 < 5 ? DayType::Weekday : DayType::Weekend; }

const char* to_string(Place p) { return kPlaceNames[static_cast<int>(p)]; }

PlaceModel PlaceModel::defaults(std::vector<std::string> work_edges,
                                std::vector<std::string> other_edges) {
  PlaceModel m;
  m.work_edges = std::move(work_edges);
  m.other_edges = std::move(other_edges);
  //            home  work  other
  m.weekday = {{{0.0, 0.7, 0.3},
                {0.0, 0.0, 1.0},
                {0.0, 0.4, 0.6}}};
  m.weekend = {{{0.0, 0.1, 0.9},
                {0.0, 0.0, 1.0},
                {0.0, 0.2, 0.8}}};
  m.intervals[0] = {4 * 3600.0, 3600.0};
  m.intervals[1] = {8 * 3600.0, 3600.0};
  m.intervals[2] = {1.5 * 3600.0, 0.5 * 3600.0};
  m.first_weekday = {114.54, 6.63, 65.76};
  m.first_weekend = {197.53, 3.45, 84.37};
  return m;
}

void PlaceModel::validate() const {
  for (const auto* mat : {&weekday, &weekend})
    for (int a = 0; a < kPlaces; ++a) {
      double s = 0.0;
      for (double p : (*mat)[a]) {
        if (p < 0.0) throw ConfigError("placemodel: negative transition probability");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9)
        throw ConfigError(std::string("placemodel: transition row '") + kPlaceNames[a] +
                          "' does not sum to 1");
    }
  for (const auto& iv : intervals)
    if (iv.mean_s <= 0.0 || iv.sd_s < 0.0) throw ConfigError("placemodel: bad interval");
  for (const auto* f : {&first_weekday, &first_weekend})
    if (f->shape <= 0.0 || f->scale <= 0.0)
      throw ConfigError("placemodel: gamma shape and scale must be > 0");
  if (trips_per_day < 1) throw ConfigError("placemodel: trips_per_day must be >= 1");
  const bool needs_work = weekday[0][1] + weekday[2][1] + weekend[0][1] + weekend[2][1] > 0.0;
  if (needs_work && work_edges.empty()) throw ConfigError("placemodel: no work edges");
  if (other_edges.empty()) throw ConfigError("placemodel: no other edges");
}

PlaceModel PlaceModel::from_json(const nlohmann::json& j) {
  PlaceModel m;
  try {
    m.work_edges = j.at("work_edges").get<std::vector<std::string>>();
    m.other_edges = j.at("other_edges").get<std::vector<std::string>>();
    m.weekday = matrix_from_json(j.at("transitions").at("weekday"));
    m.weekend = matrix_from_json(j.at("transitions").at("weekend"));
    for (auto& [name, iv] : j.at("intervals").items())
      m.intervals[static_cast<int>(parse_place(name))] = {iv.at("mean_s").get<double>(),
                                                          iv.at("sd_s").get<double>()};
    m.first_weekday = first_from_json(j.at("first_departure").at("weekday"));
    m.first_weekend = first_from_json(j.at("first_departure").at("weekend"));
    m.trips_per_day = j.value("trips_per_day", 3);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("placemodel.json: ") + ex.what());
  }
  m.validate();
  return m;
}

nlohmann::json PlaceModel::to_json() const {
  nlohmann::json iv;
  for (int k = 0; k < kPlaces; ++k)
    iv[kPlaceNames[k]] = {{"mean_s", intervals[k].mean_s}, {"sd_s", intervals[k].sd_s}};
  return {{"work_edges", work_edges},
          {"other_edges", other_edges},
          {"transitions", {{"weekday", matrix_to_json(weekday)}, {"weekend", matrix_to_json(weekend)}}},
          {"intervals", iv},
          {"first_departure",
           {{"weekday", first_to_json(first_weekday)}, {"weekend", first_to_json(first_weekend)}}},
          {"trips_per_day", trips_per_day}};
}

double sample_first_departure(const FirstDeparture& fd, Rng& rng) {
  std::gamma_distribution<double> g(fd.shape, fd.scale);
  for (;;) {
    const double t = (fd.shift_min + g(rng)) * 60.0;
    if (t >= 0.0 && t < kDay) return t;
  }
}

double sample_first_departure(const PlaceModel& m, DayType d, Rng& rng) {
  return sample_first_departure(d == DayType::Weekday ? m.first_weekday : m.first_weekend, rng);
}

TripChain generate_chain(const std::string& ev, const std::string& home, int days,
                         const PlaceModel& model, Rng& rng, int first_day) {
  TripChain chain;
  chain.ev = ev;
  const std::string work = model.work_edges.empty() ? home : pick(model.work_edges, rng);
  auto resolve = [&](Place p) -> std::string {
    switch (p) {
      case Place::Home: return home;
      case Place::Work: return work;
      case Place::Other: return pick(model.other_edges, rng);
    }
    return home;
  };

  for (int d = first_day; d < first_day + days; ++d) {
    const DayType dt = day_type(d);
    const auto& mat = dt == DayType::Weekday ? model.weekday : model.weekend;
    const double day_start = d * kDay;
    const double day_end = day_start + kDay;

    double t = day_start + sample_first_departure(model, dt, rng);
    Place at = Place::Home;
    std::string where = home;
    for (int k = 0; k < model.trips_per_day; ++k) {
      if (k > 0) {
        const auto& iv = model.intervals[static_cast<int>(at)];
        std::normal_distribution<double> nd(iv.mean_s, iv.sd_s);
        bool ok = false;
        for (int r = 0; r < kMaxResamples && !ok; ++r) {
          const double gap = nd(rng);
          if (gap > 0.0 && t + gap < day_end) {
            t += gap;
            ok = true;
          }
        }
        if (!ok) {
          ++chain.overflow_days;
          // Close the tour early: the last kept trip now ends at home.
          auto& last = chain.trips.back();
          last.dest = home;
          if (last.origin == home) chain.trips.pop_back();
          break;
        }
      }
      const bool last_of_day = k + 1 == model.trips_per_day;
      const Place next = last_of_day ? Place::Home : sample_place(mat[static_cast<int>(at)], rng);
      std::string dest = last_of_day ? home : resolve(next);
      chain.trips.push_back({t, where, dest});
      at = next;
      where = std::move(dest);
    }
  }
  return chain;
}

nlohmann::json trips_to_json(const std::vector<TripChain>& chains) {
  auto arr = nlohmann::json::array();
  for (const auto& c : chains) {
    auto trips = nlohmann::json::array();
    for (const auto& t : c.trips) trips.push_back({{"t", t.depart}, {"from", t.origin}, {"to", t.dest}});
    arr.push_back({{"ev", c.ev}, {"trips", trips}});
  }
  return {{"chains", arr}};
}

std::vector<TripChain> trips_from_json(const nlohmann::json& j) {
  std::vector<TripChain> out;
  try {
    for (const auto& cj : j.at("chains")) {
      TripChain c;
      c.ev = cj.at("ev").get<std::string>();
      for (const auto& tj : cj.at("trips")) {
        TripSpec t{tj.at("t").get<double>(), tj.at("from").get<std::string>(),
                   tj.at("to").get<std::string>()};
        if (!c.trips.empty() && t.depart <= c.trips.back().depart)
          throw ConfigError("trips.json: departures of '" + c.ev + "' are not increasing");
        c.trips.push_back(std::move(t));
      }
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("trips.json: ") + ex.what());
  }
  return out;
}

}  // namespace v2sim
