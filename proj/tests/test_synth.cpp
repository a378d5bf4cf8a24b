#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dscope/error.hpp"
#include "dscope/geo.hpp"
#include "dscope/parallel.hpp"
#include "dscope/physics.hpp"
#include "dscope/synth.hpp"

using namespace dscope;
using namespace dscope::synth;

namespace {

ScenarioSpec one_source(std::uint64_t seed = 1, double sigma = 0.0) {
  ScenarioSpec s;
  s.sources = {{"P1", {39.0, -81.0}, 1000.0, 5000.0, "WV"}};
  s.params.diffusivity = 100.0;
  s.params.decay_rate = 0.0004;
  s.n_obs = 500;
  s.noise_sigma = sigma;
  s.seed = seed;
  s.bbox = {37.0, 41.0, -84.0, -78.0};
  return s;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("noiseless single source is exactly log-linear after multiplying by r") {
  const auto spec = one_source();
  const auto data = generate(spec);
  const double k = physics::kappa_s(spec.params);
  CHECK(data.truth.kappa_s == doctest::Approx(k).epsilon(1e-15));
  CHECK(data.truth.d_star == doctest::Approx(std::log(10.0) / k));
  const double c0 = std::log(5000.0 / (4 * std::numbers::pi * 100.0));
  for (const auto& o : data.observations) {
    const double r = geo::haversine(spec.sources[0].location, o.location);
    CHECK(std::log(o.value * r) + k * r == doctest::Approx(c0).epsilon(1e-12));
    CHECK(spec.bbox.contains(o.location));
    CHECK(o.region_tag == "WV");
  }
}

TEST_CASE("same seed gives identical data, other seeds differ") {
  const auto a = generate(one_source(5, 0.3));
  const auto b = generate(one_source(5, 0.3));
  const auto c = generate(one_source(6, 0.3));
  REQUIRE(a.observations.size() == b.observations.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.observations.size(); ++i) {
    CHECK(a.observations[i].value == b.observations[i].value);
    CHECK(a.observations[i].location == b.observations[i].location);
    any_diff = any_diff || a.observations[i].value != c.observations[i].value;
  }
  CHECK(any_diff);
}

TEST_CASE("serial and parallel generation are bitwise identical") {
  auto spec = one_source(9, 0.4);
  spec.n_obs = 5000;
  set_threads(4);
  const auto a = generate(spec, Execution::serial);
  const auto b = generate(spec, Execution::parallel);
  set_threads(1);
  for (std::size_t i = 0; i < a.observations.size(); ++i) {
    CHECK(a.observations[i].obs_id == b.observations[i].obs_id);
    CHECK(a.observations[i].value == b.observations[i].value);
  }
}

TEST_CASE("observation i does not depend on n_obs") {
  auto s1 = one_source(3, 0.2);
  auto s2 = s1;
  s2.n_obs = 50;
  const auto a = generate(s1), b = generate(s2);
  for (std::size_t i = 0; i < 50; ++i) CHECK(a.observations[i].value == b.observations[i].value);
}

TEST_CASE("ids are zero padded and periods cycle") {
  auto spec = one_source();
  spec.n_obs = 12;
  spec.periods = {"2020-01-01", "2021-01-01", "2022-01-01"};
  const auto d = generate(spec);
  CHECK(d.observations[0].obs_id == "obs000000");
  CHECK(d.observations[11].obs_id == "obs000011");
  CHECK(d.observations[4].period == "2021-01-01");
}

TEST_CASE("urban gradient with distant centers: distance and outcome correlate positively") {
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScenarioSpec s;
    s.sources = {{"P1", {37.2, -83.8}, 100.0, 5.0, "KY"}};
    s.params.diffusivity = 100.0;
    s.params.decay_rate = 0.0004;
    s.n_obs = 400;
    s.noise_sigma = 0.3;
    s.background = Background::urban_gradient;
    s.urban_centers = {{{40.8, -78.2}, 1.0}};
    s.seed = seed;
    s.bbox = {37.0, 41.0, -84.0, -78.0};
    const auto d = generate(s);
    std::vector<double> dist, val;
    for (const auto& o : d.observations) {
      dist.push_back(geo::haversine(s.sources[0].location, o.location));
      val.push_back(o.value);
    }
    if (correlation(dist, val) > 0.0) ++positive;
  }
  CHECK(positive == 20);
}

TEST_CASE("constant background keeps truth unchanged") {
  auto s = one_source();
  const auto plain = generate(s);
  s.background = Background::constant;
  s.background_level = 0.5;
  const auto bg = generate(s);
  CHECK(bg.truth.kappa_s == plain.truth.kappa_s);
  CHECK(bg.truth.emission_rates == plain.truth.emission_rates);
  CHECK(bg.observations[0].value == doctest::Approx(plain.observations[0].value + 0.5).epsilon(1e-14));
}

TEST_CASE("advection mode attaches wind and favors the downwind side") {
  auto s = one_source();
  s.field = FieldMode::advection;
  s.params.wind_speed = 20.0;
  s.wind_dir_deg = 90.0;  // blowing east
  s.n_obs = 2000;
  const auto d = generate(s);
  double east = 0, west = 0;
  int ne = 0, nw = 0;
  for (const auto& o : d.observations) {
    REQUIRE(o.wind_speed.has_value());
    CHECK(*o.wind_dir == 90.0);
    const double r = geo::haversine(s.sources[0].location, o.location);
    if (r < 50 || r > 150) continue;
    if (o.location.lon > -81.0) {
      east += o.value;
      ++ne;
    } else {
      west += o.value;
      ++nw;
    }
  }
  CHECK(east / ne > west / nw);
}

TEST_CASE("weak signal flag") {
  auto s = one_source();
  s.params.decay_rate = 100.0;  // kappa = 1/km, 10/kappa = 10 km
  s.sources[0].location = {10.0, 10.0};
  CHECK(generate(s).weak_signal);
  CHECK_FALSE(generate(one_source()).weak_signal);
}

TEST_CASE("scenario validation") {
  auto s = one_source();
  s.n_obs = 0;
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = one_source();
  s.background = Background::urban_gradient;
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = one_source();
  s.bbox = {41, 37, -84, -78};
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = one_source();
  s.noise_sigma = -1;
  CHECK_THROWS_AS(generate(s), ConfigError);
  CHECK(parse_background("urban_gradient") == Background::urban_gradient);
  CHECK(parse_field_mode("geometric") == FieldMode::geometric);
  CHECK_THROWS_AS(parse_field_mode("plume"), ConfigError);
}

TEST_CASE("random sources: inside bbox and reproducible") {
  const BoundingBox b{10, 20, 30, 50};
  const auto one = random_sources(1, b, 4);
  REQUIRE(one.size() == 1);
  CHECK(b.contains(one[0].location));
  CHECK(one[0].emission_rate == 1.0);
  CHECK(one[0].capacity_mw == 1.0);
  const auto a = random_sources(40, b, 77), c = random_sources(40, b, 77);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].location == c[i].location);
  CHECK_THROWS_AS(random_sources(0, b, 1), ConfigError);
}

TEST_CASE("random sources pass a chi-square uniformity test") {
  const BoundingBox b{0, 10, 0, 10};
  const auto pts = random_sources(10000, b, 2024);
  std::vector<int> cells(100, 0);
  for (const auto& p : pts) {
    const int i = std::min(9, static_cast<int>(p.location.lat));
    const int j = std::min(9, static_cast<int>(p.location.lon));
    ++cells[i * 10 + j];
  }
  double chi2 = 0.0;
  for (int c : cells) chi2 += (c - 100.0) * (c - 100.0) / 100.0;
  // 99 degrees of freedom, 1% upper critical value.
  CHECK(chi2 < 134.642);
}

}  // TEST_SUITE
