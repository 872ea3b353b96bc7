#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <cstdlib>
#include <limits>

#include "v2sim/error.hpp"
#include "v2sim/record.hpp"

namespace v2sim {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("v2sim_record_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Record, FormatNumberRoundTripsExactly) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 123456.789, -2.5e-12, 6.02214076e23,
                   std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max()}) {
    const auto s = format_number(v);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
  EXPECT_EQ(format_number(60.0), "60");
  EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Record, CsvRoundTrip) {
  const auto dir = scratch_dir("csv");
  Table t{{"t", "a", "b"}, {{0.0, 1.0 / 3.0, -4.0}, {60.0, 1e-300, 7.25}}};
  write_csv(dir / "t.csv", t);
  EXPECT_EQ(read_csv(dir / "t.csv"), t);
  std::ifstream in(dir / "t.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,a,b");
  fs::remove_all(dir);
}

TEST(Record, MalformedCsvIsRejected) {
  const auto dir = scratch_dir("bad");
  std::ofstream(dir / "ragged.csv") << "t,a\n0,1,2\n";
  std::ofstream(dir / "text.csv") << "t,a\n0,x\n";
  std::ofstream(dir / "empty.csv");
  EXPECT_THROW(read_csv(dir / "ragged.csv"), Error);
  EXPECT_THROW(read_csv(dir / "text.csv"), Error);
  EXPECT_THROW(read_csv(dir / "empty.csv"), Error);
  EXPECT_THROW(read_csv(dir / "missing.csv"), Error);
  fs::remove_all(dir);
}

TEST(Record, ColumnLookup) {
  Table t{{"t", "x"}, {{0, 2}, {60, 3}}};
  EXPECT_EQ(t.column("x"), 1u);
  EXPECT_EQ(t.values("x"), (std::vector<double>{2, 3}));
  EXPECT_THROW(t.column("y"), Error);
}

TEST(Record, RunRecordRoundTrip) {
  const auto dir = scratch_dir("run");
  RunRecord r;
  r.fcs_load = {{"t", "total_kw", "CS1"}, {{0, 10.5, 10.5}, {60, 0, 0}}};
  r.scs_load = {{"t", "charge_kw", "v2g_kw", "net_kw"}, {{0, 1, 2, -1}}};
  r.ev_state = {{"t", "mean_soc"}, {{0, 0.4}}};
  r.pdn = {{"t", "objective"}, {{0, 146.37}}};
  r.v2g = {{28800, "scs_e1", 12.0, 3.5, 3.5, 2}, {29100, "scs_e2", 0.0, 0.0, 0.0, 0}};
  r.counters.steps = 86400;
  r.counters.arrivals = 7;
  r.ledger.driving_kwh = 1.0 / 7.0;
  r.ledger.v2g_grid_kwh = 0.1;
  r.manifest = {{"version", "test"},
                {"counters", counters_to_json(r.counters)},
                {"energy_kwh", ledger_to_json(r.ledger)}};
  r.write(dir);
  const auto back = RunRecord::read(dir);
  EXPECT_TRUE(back == r);
  EXPECT_EQ(back.v2g, r.v2g);
  EXPECT_EQ(back.counters.arrivals, 7u);
  EXPECT_EQ(back.ledger.driving_kwh, 1.0 / 7.0);
  EXPECT_EQ(back.manifest, r.manifest);
  fs::remove_all(dir);
}

TEST(Record, CountersAndLedgerJson) {
  RunCounters c;
  c.pdn_fallbacks = 3;
  c.trip_overflow_days = 2;
  EXPECT_EQ(counters_from_json(counters_to_json(c)), c);
  EXPECT_EQ(counters_to_json(c).size(), 11u);
  EnergyLedger l;
  l.battery_start_kwh = 4321.0;
  l.charge_stored_kwh = 0.3;
  EXPECT_EQ(ledger_from_json(ledger_to_json(l)), l);
  EXPECT_EQ(ledger_to_json(l).size(), 8u);
}

}  // namespace
}  // namespace v2sim
