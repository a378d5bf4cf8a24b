#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "dscope/error.hpp"
#include "dscope/ingest.hpp"

using namespace dscope;
using namespace dscope::ingest;

namespace {

LoadResult load(const std::string& text, Schema schema, const FilterPolicy& p = {}) {
  std::istringstream in(text);
  return load_observations(in, schema, p);
}

std::string clean_monitor_file(int rows) {
  std::string s = std::string(kMonitorHeader) + "\n";
  for (int i = 0; i < rows; ++i)
    s += "m" + std::to_string(i) + ",40." + std::to_string(i) + ",-80,2020-06-15," + std::to_string(10 + i) + "\n";
  return s;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("clean 10-row file keeps every row with an empty audit") {
  const auto r = load(clean_monitor_file(10), Schema::monitor);
  CHECK(r.records.size() == 10);
  CHECK(r.audit.empty());
  CHECK(r.audit.input_rows == 10);
  CHECK(r.audit.retained == 10);
}

TEST_CASE("negative value is dropped and counted") {
  auto text = clean_monitor_file(5);
  text += "neg,40,-80,2020-06-15,-1\n";
  const auto r = load(text, Schema::monitor);
  CHECK(r.audit.negative == 1);
  CHECK(r.records.size() == 5);
  FilterPolicy keep;
  keep.drop_negative = false;
  keep.trim_quantile = 1.0;
  CHECK(load(text, Schema::monitor, keep).records.size() == 6);
}

TEST_CASE("cell filters: minimum retrievals and QA") {
  std::string t = std::string(kCellHeader) + "\n";
  t += "c1,40,-80,2020-01,5.0,4,0.9\n";   // n_obs below 5
  t += "c2,40,-81,2020-01,5.0,5,0.5\n";   // qa below 0.75
  t += "c3,40,-82,2020-01,5.0,6,0.8\n";
  t += "c4,40,-83,2020-01,5.0,9,\n";      // missing qa passes
  const auto r = load(t, Schema::cell);
  CHECK(r.audit.min_obs == 1);
  CHECK(r.audit.qa == 1);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].obs_id == "c3");
  CHECK(r.records[1].obs_id == "c4");
  CHECK_FALSE(r.records[1].qa.has_value());
}

TEST_CASE("monitor coverage per id and year") {
  std::string t = std::string(kMonitorHeader) + "\n";
  for (int d = 1; d <= 4; ++d) t += "full,40,-80,2020-06-0" + std::to_string(d) + ",1\n";
  t += "sparse,41,-80,2020-06-01,1\n";
  for (int d = 1; d <= 3; ++d) t += "most,42,-80,2020-06-0" + std::to_string(d) + ",1\n";
  FilterPolicy p;
  p.trim_quantile = 1.0;
  const auto r = load(t, Schema::monitor, p);
  CHECK(r.audit.coverage == 1);  // 1 of 4 days
  for (const auto& rec : r.records) CHECK(rec.obs_id != "sparse");
  CHECK(r.records.size() == 7);  // 3 of 4 days meets 75%
}

TEST_CASE("audit counts plus retained equal input rows") {
  std::mt19937_64 g(8);
  std::normal_distribution<double> v(10.0, 6.0);
  std::string t = std::string(kCellHeader) + "\n";
  for (int i = 0; i < 800; ++i) {
    t += "c" + std::to_string(i % 200) + ",40,-80,2020-" + (i % 2 ? "01" : "02") + "," + std::to_string(v(g)) + "," +
         std::to_string(i % 9) + "," + std::to_string((i % 10) / 10.0) + "\n";
  }
  t += "broken,row\n";
  t += "bad,40,-80,2020-13,1,5,0.9\n";
  const auto r = load(t, Schema::cell);
  CHECK(r.audit.malformed == 2);
  CHECK(r.audit.malformed_lines.size() == 2);
  CHECK(r.audit.dropped() + r.audit.retained == r.audit.input_rows);
  CHECK(r.audit.negative > 0);
  CHECK(r.audit.trimmed > 0);
  for (const auto& rec : r.records) {
    CHECK(rec.value >= 0.0);
    CHECK(rec.value <= *r.audit.trim_threshold);
  }
}

TEST_CASE("filtering is idempotent under the resolved policy") {
  std::mt19937_64 g(13);
  std::lognormal_distribution<double> v(1.0, 1.0);
  std::string t = std::string(kMonitorHeader) + "\n";
  for (int i = 0; i < 600; ++i)
    t += "m" + std::to_string(i % 60) + ",40,-80,2020-06-" + std::to_string(10 + i % 10) + "," + std::to_string(v(g) - 0.5) + "\n";
  const auto first = load(t, Schema::monitor);
  const auto second = apply_filters(first.records, Schema::monitor, first.resolved_policy);
  CHECK(second.audit.empty());
  CHECK(second.records.size() == first.records.size());
  for (std::size_t i = 0; i < first.records.size(); ++i) CHECK(second.records[i].value == first.records[i].value);
}

TEST_CASE("trim uses the global pool, not per id") {
  // Each id has one value, so a per-id trim would keep everything.
  // Global 99% nearest rank over 200 values is the 198th.
  std::string u;
  for (int i = 0; i < 200; ++i) u += "x" + std::to_string(i) + ",40,-80,2020-06-15," + std::to_string(i + 1) + "\n";
  const auto r = load(std::string(kMonitorHeader) + "\n" + u, Schema::monitor);
  CHECK(*r.audit.trim_threshold == doctest::Approx(198.0));
  CHECK(r.audit.trimmed == 2);
}

TEST_CASE("header mismatch and mostly malformed files are hard errors") {
  CHECK_THROWS_AS(load("id,lat,lon,date,value\nx,1,1,2020-01-01,1\n", Schema::monitor), InputError);
  CHECK_THROWS_AS(load(clean_monitor_file(3), Schema::cell), InputError);
  std::string t = std::string(kMonitorHeader) + "\nx,1,1,2020-01-01,1\nbad\nbad\n";
  CHECK_THROWS_AS(load(t, Schema::monitor), InputError);
  CHECK_THROWS_AS(load(std::string(kMonitorHeader) + ",colour\n", Schema::monitor), InputError);
}

TEST_CASE("optional state and wind columns") {
  std::string t = std::string(kMonitorHeader) + ",state,wind_speed,wind_dir\n";
  t += "a,40,-80,2020-06-15,1.5,WV,12.5,90\n";
  t += "b,41,-81,2020-06-15,2.5,OH,,\n";
  const auto r = load(t, Schema::monitor);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].region_tag == "WV");
  CHECK(*r.records[0].wind_speed == 12.5);
  CHECK(*r.records[0].wind_dir == 90.0);
  CHECK_FALSE(r.records[1].wind_speed.has_value());
}

TEST_CASE("write and parse observations round trip") {
  std::vector<ObservationRecord> recs;
  for (int i = 0; i < 20; ++i) {
    ObservationRecord o;
    o.obs_id = "o" + std::to_string(100 + i);
    o.location = {38.0 + i * 0.123456789, -80.0 - i * 0.987654321};
    o.period = "2021-03-0" + std::to_string(1 + i % 9);
    o.value = 0.1 / (i + 1);
    o.region_tag = i % 2 ? "PA" : "CA";
    recs.push_back(o);
  }
  std::ostringstream out;
  write_observations(out, recs, Schema::monitor);
  std::istringstream in(out.str());
  const auto back = parse_observations(in, Schema::monitor);
  REQUIRE(back.records.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back.records[i].location == recs[i].location);
    CHECK(back.records[i].value == recs[i].value);
    CHECK(back.records[i].region_tag == recs[i].region_tag);
  }
}

TEST_CASE("sources round trip and validation") {
  std::vector<geo::SourceRecord> s{{"p1", {39.1, -80.2}, 1200.5, 3400.25, "WV"}, {"p2", {31, -97}, 10, 0, "TX"}};
  std::ostringstream out;
  write_sources(out, s);
  std::istringstream in(out.str());
  const auto back = read_sources(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].emission_rate == 3400.25);
  CHECK(back[1].region_tag == "TX");

  std::istringstream sum(std::string(kPlantHeader) + "\nx,40,-80,100,30,12,OH\n");
  CHECK(read_sources(sum)[0].emission_rate == 42.0);
  std::istringstream dup(std::string(kPlantHeader) + "\nx,40,-80,100,30,12,OH\nx,41,-80,100,30,12,OH\n");
  CHECK_THROWS_AS(read_sources(dup), InputError);
  std::istringstream hdr("plant,lat,lon\n");
  CHECK_THROWS_AS(read_sources(hdr), InputError);
}

TEST_CASE("time average: trivial cases") {
  std::vector<ObservationRecord> r(3);
  r[0] = {"a", {1, 1}, "2020-01-01", 2.0, {}, {}, "", {}, {}};
  r[1] = {"a", {1, 1}, "2020-01-02", 4.0, {}, {}, "", {}, {}};
  r[2] = {"b", {2, 2}, "2020-01-01", 7.0, {}, {}, "", {}, {}};
  const auto m = time_average(r);
  REQUIRE(m.size() == 2);
  CHECK(m[0].mean_value == 3.0);
  CHECK(m[0].n_periods == 2);
  CHECK(m[1].mean_value == 7.0);
  CHECK(m[1].n_periods == 1);
  CHECK_THROWS_AS(time_average(std::vector<ObservationRecord>{}), ConfigError);
}

TEST_CASE("time average matches a group-by oracle") {
  std::mt19937_64 g(17);
  std::uniform_int_distribution<int> id(0, 49), day(1, 28);
  std::uniform_real_distribution<double> v(0, 100);
  std::vector<ObservationRecord> r;
  std::map<std::string, std::pair<double, int>> acc;
  for (int i = 0; i < 1000; ++i) {
    ObservationRecord o;
    o.obs_id = "s" + std::to_string(id(g));
    o.location = {40, -80};
    o.period = "2020-02-" + std::string(day(g) < 10 ? "0" : "") + std::to_string(day(g));
    o.value = v(g);
    acc[o.obs_id].first += o.value;
    acc[o.obs_id].second += 1;
    r.push_back(o);
  }
  const auto m = time_average(r);
  REQUIRE(m.size() == acc.size());
  auto it = acc.begin();
  for (const auto& s : m) {
    CHECK(s.obs_id == it->first);
    CHECK(s.mean_value == doctest::Approx(it->second.first / it->second.second).epsilon(1e-12));
    ++it;
  }
}

TEST_CASE("region classification") {
  CHECK(classify_region("WV", 50) == RegionClass::coal_near);
  CHECK(classify_region("CA", 250) == RegionClass::noncoal_far);
  CHECK(classify_region("TX", 100.0) == RegionClass::coal_far);
  CHECK(classify_region("tx", 99.9) == RegionClass::coal_near);
  CHECK(classify_region("NY", 10) == RegionClass::noncoal_near);
  for (const char* c : {"WV", "WY", "KY", "IN", "PA", "ND", "MT", "OH", "TX", "IL"}) CHECK(is_coal_state(c));
  CHECK_FALSE(is_coal_state("CA"));
  CHECK_THROWS_AS(classify_region("W", 1), InputError);
  CHECK_THROWS_AS(classify_region("W1", 1), InputError);
  CHECK(to_string(RegionClass::noncoal_near) == "noncoal_near");
}

TEST_CASE("policy validation") {
  FilterPolicy p;
  p.min_coverage = 0.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = {};
  p.trim_quantile = 1.5;
  CHECK_THROWS_AS(validate(p), ConfigError);
  CHECK(parse_schema("cell") == Schema::cell);
  CHECK_THROWS_AS(parse_schema("grid"), ConfigError);
}

}  // TEST_SUITE
