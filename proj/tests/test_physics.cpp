#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dscope/error.hpp"
#include "dscope/physics.hpp"
#include "oracles.hpp"

using namespace dscope;
using namespace dscope::physics;

namespace {

PhysicalParams params(double d, double lambda, double u = 0.0) {
  PhysicalParams p;
  p.diffusivity = d;
  p.decay_rate = lambda;
  p.wind_speed = u;
  return p;
}

double max_rel_error(const PhysicalParams& p, std::size_t nodes) {
  const double k = kappa_s(p);
  const auto grid = uniform_grid(0.01 / k, 10.0 / k, nodes);
  const auto fd = helmholtz_fd_oracle(1.0, p, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double exact = helmholtz_field(1.0, p, grid[i]);
    worst = std::max(worst, std::fabs(fd[i] - exact) / exact);
  }
  return worst;
}

}  // namespace

TEST_SUITE("physics") {

TEST_CASE("kappa_s and effective diffusivity") {
  CHECK(kappa_s(params(4.0, 1.0)) == doctest::Approx(0.5));
  auto p = params(1.0, 1.0);
  p.eddy_diffusivity = 3.0;
  CHECK(p.effective_diffusivity() == 4.0);
  CHECK(kappa_s(p) == doctest::Approx(0.5));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate(params(0.0, 1.0)), ConfigError);
  CHECK_THROWS_AS(validate(params(1.0, -1.0)), ConfigError);
  auto p = params(1.0, 1.0);
  p.length_scale = 0.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = params(1.0, 1.0);
  p.viscosity = std::nan("");
  CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("dimensionless numbers and verdicts") {
  auto p = params(10.0, 0.0);
  p.length_scale = 1000.0;
  CHECK(dimensionless(p).peclet == 0.0);
  CHECK(dimensionless(p).reynolds == 0.0);
  CHECK(dimensionless(p).verdict == Regime::diffusive);

  p.wind_speed = 1.0;
  p.viscosity = 1.5e-5 * 86.4;
  const auto r = dimensionless(p);
  CHECK(r.peclet == doctest::Approx(100.0));
  CHECK(r.verdict != Regime::diffusive);
  CHECK(std::fabs(r.peclet - r.reynolds * r.schmidt) <= 1e-12 * r.peclet);

  // Pe = 0.5, Re = 100, Da = 0.5
  PhysicalParams q;
  q.diffusivity = 2.0;
  q.length_scale = 1.0;
  q.wind_speed = 1.0;
  q.viscosity = 0.01;
  q.decay_rate = 1.0;
  const auto s = dimensionless(q);
  CHECK(s.peclet == doctest::Approx(0.5));
  CHECK(s.reynolds == doctest::Approx(100.0));
  CHECK(s.damkohler == doctest::Approx(0.5));
  CHECK(s.verdict == Regime::diffusive);
}

TEST_CASE("verdict boundaries are strict and name the failing condition") {
  PhysicalParams p;
  p.diffusivity = 1.0;
  p.length_scale = 1.0;
  p.viscosity = 1.0;
  p.wind_speed = 1.0;  // Pe = 1 exactly
  CHECK(dimensionless(p).verdict == Regime::advective);
  p.wind_speed = 0.0;
  p.decay_rate = 1.0;  // Da = 1
  CHECK(dimensionless(p).verdict == Regime::reactive);
  p.decay_rate = 0.0;
  p.diffusivity = 1e9;
  p.viscosity = 1e-3;
  p.wind_speed = 2.0;  // Re = 2000, Pe tiny
  CHECK(dimensionless(p).verdict == Regime::turbulent);
  p.decay_rate = 1e10;  // Da >= 1 as well
  CHECK(dimensionless(p).verdict == Regime::mixed);
  CHECK(to_string(Regime::mixed) == "mixed");
}

TEST_CASE("Peclet is unchanged when U and 1/L scale together") {
  auto p = params(3.0, 0.1, 0.7);
  p.length_scale = 2.0;
  const double pe = dimensionless(p).peclet;
  p.wind_speed *= 8.0;
  p.length_scale /= 8.0;
  CHECK(dimensionless(p).peclet == doctest::Approx(pe).epsilon(1e-14));
}

TEST_CASE("helmholtz closed form") {
  CHECK(helmholtz_field(1.0, params(1.0, 1.0), 1.0) == doctest::Approx(1.0 / (4 * std::numbers::pi * std::exp(1.0))).epsilon(1e-12));
  CHECK(helmholtz_field(1.0, params(1.0, 1.0), 1.0) == doctest::Approx(0.0292749).epsilon(1e-6));
  const auto p0 = params(2.0, 0.0);
  CHECK(helmholtz_field(3.0, p0, 8.0) / helmholtz_field(3.0, p0, 4.0) == 0.5);
  CHECK_THROWS_AS(helmholtz_field(1.0, p0, 0.0), DomainError);
  CHECK_THROWS_AS(helmholtz_field(1.0, p0, -1.0), DomainError);
}

TEST_CASE("helmholtz is decreasing and log-linear after adding log r") {
  const auto p = params(100.0, 0.0004);
  const double k = kappa_s(p);
  double prev = helmholtz_field(1.0, p, 0.5);
  for (double r = 1.0; r < 3000.0; r *= 1.3) {
    const double c = helmholtz_field(1.0, p, r);
    CHECK(c < prev);
    prev = c;
    const double h = 1e-3 * r;
    const double slope = (std::log(helmholtz_field(1.0, p, r + h) * (r + h)) -
                          std::log(helmholtz_field(1.0, p, r - h) * (r - h))) / (2 * h);
    CHECK(slope == doctest::Approx(-k).epsilon(1e-6));
  }
}

TEST_CASE("geometric field") {
  const auto p0 = params(1.0, 0.0);
  CHECK(geometric_field(1.0, p0, 6.0) / geometric_field(1.0, p0, 3.0) == doctest::Approx(0.25).epsilon(1e-14));
  const auto p = params(2.0, 0.5);
  const double k = kappa_s(p);
  const double c0 = std::log(geometric_field(1.0, p, 1.0)) + k;
  for (double r = 0.2; r < 20.0; r += 0.7) {
    CHECK(std::log(geometric_field(1.0, p, r)) + 2 * std::log(r) + k * r == doctest::Approx(c0).epsilon(1e-12));
    CHECK(geometric_field(1.0, p, r) * r / helmholtz_field(1.0, p, r) == doctest::Approx(kGeometricReferenceKm).epsilon(1e-12));
  }
  CHECK_THROWS_AS(geometric_field(1.0, p, 0.0), DomainError);
}

TEST_CASE("K0 matches the integral representation on [0.01, 50]") {
  for (double x = 0.01; x <= 50.0; x *= 1.25) {
    CHECK(bessel_k0(x) == doctest::Approx(oracle::k0_integral(x)).epsilon(1e-6));
  }
  CHECK(bessel_k0(2.0) == doctest::Approx(oracle::k0_integral(2.0)).epsilon(1e-6));
  CHECK(bessel_k0(50.0) == doctest::Approx(oracle::k0_integral(50.0)).epsilon(1e-6));
}

TEST_CASE("advection asymmetry and isotropy") {
  const auto iso = params(5.0, 0.2, 0.0);
  for (double r : {0.5, 2.0, 9.0}) CHECK(advection_field(1.0, iso, r, 0.0) == advection_field(1.0, iso, r, std::numbers::pi));
  const auto p = params(5.0, 0.2, 3.0);
  for (double r : {0.5, 2.0, 9.0}) {
    const double ratio = advection_field(1.0, p, r, 0.0) / advection_field(1.0, p, r, std::numbers::pi);
    CHECK(ratio == doctest::Approx(std::exp(p.wind_speed * r / p.diffusivity)).epsilon(1e-10));
    CHECK(advection_field(1.0, p, r, 0.0) > advection_field(1.0, p, r, std::numbers::pi));
  }
  // U = 0 reduces to the 2-D isotropic kernel Q/(2 pi D) K0(kappa r).
  CHECK(advection_field(2.0, iso, 3.0, 1.0) ==
        doctest::Approx(2.0 / (2 * std::numbers::pi * 5.0) * oracle::k0_integral(kappa_s(iso) * 3.0)).epsilon(1e-6));
  CHECK_THROWS_AS(advection_field(1.0, p, 0.0, 0.0), DomainError);
}

TEST_CASE("pulse: peak time and mass conservation") {
  const auto p0 = params(2.0, 0.0);
  const double r = 3.0, tstar = r * r / (6 * 2.0);
  const double peak = pulse_field(1.0, p0, r, tstar);
  CHECK(pulse_field(1.0, p0, r, tstar * 0.999) < peak);
  CHECK(pulse_field(1.0, p0, r, tstar * 1.001) < peak);

  for (double lambda : {0.0, 0.3}) {
    const auto p = params(2.0, lambda);
    for (double t : {0.5, 2.0}) {
      const double rmax = 40.0 * std::sqrt(2.0 * t);
      const double mass = oracle::simpson(
          [&](double x) { return x <= 0.0 ? 0.0 : 4 * std::numbers::pi * x * x * pulse_field(1.0, p, x, t); }, 0.0,
          rmax, 20000);
      CHECK(mass == doctest::Approx(std::exp(-lambda * t)).epsilon(1e-6));
      CHECK(mass <= 1.0 + 1e-9);
    }
  }
  CHECK_THROWS_AS(pulse_field(1.0, p0, 1.0, 0.0), DomainError);
}

TEST_CASE("superposition: reduction, linearity and brute-force sum") {
  const auto p = params(50.0, 0.001);
  const std::vector<double> q1{7.0}, d1{12.0};
  CHECK(superposed_field(q1, p, d1) == helmholtz_field(7.0, p, 12.0));

  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(1.0, 300.0);
  std::vector<double> q(5), d(5);
  for (int i = 0; i < 5; ++i) {
    q[i] = u(g);
    d[i] = u(g);
  }
  double brute = 0.0;
  const double k = std::sqrt(0.001 / 50.0);
  for (int i = 0; i < 5; ++i) brute += q[i] / (4 * std::numbers::pi * 50.0 * d[i]) * std::exp(-k * d[i]);
  CHECK(superposed_field(q, p, d) == doctest::Approx(brute).epsilon(1e-13));
  std::vector<double> q2(q);
  for (auto& x : q2) x *= 2.0;
  CHECK(superposed_field(q2, p, d) == doctest::Approx(2.0 * superposed_field(q, p, d)).epsilon(1e-14));
}

TEST_CASE("finite-difference oracle agrees with the closed form") {
  const auto p = params(1.0, 1.0);  // kappa = 1
  CHECK(max_rel_error(p, 1000) < 0.005);
  const auto q = params(100.0, 0.0004);  // kappa = 0.002 1/km
  CHECK(max_rel_error(q, 1000) < 0.01);
}

TEST_CASE("finite-difference oracle converges at second order") {
  const auto p = params(1.0, 1.0);
  const double e1 = max_rel_error(p, 1000), e2 = max_rel_error(p, 2000), e3 = max_rel_error(p, 4000);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("finite-difference oracle with no decay gives 1/r") {
  const auto p = params(1.0, 0.0);
  const auto grid = uniform_grid(0.5, 50.0, 2000);
  const auto fd = helmholtz_fd_oracle(1.0, p, grid);
  for (std::size_t i = 0; i < grid.size(); i += 97)
    CHECK(fd[i] == doctest::Approx(1.0 / (4 * std::numbers::pi * grid[i])).epsilon(1e-3));
}

TEST_CASE("finite-difference oracle rejects bad grids") {
  const auto p = params(1.0, 1.0);
  CHECK_THROWS_AS(helmholtz_fd_oracle(1.0, p, uniform_grid(0.01, 10, 150)), OracleError);
  auto g = uniform_grid(0.01, 10, 300);
  std::swap(g[10], g[11]);
  CHECK_THROWS_AS(helmholtz_fd_oracle(1.0, p, g), OracleError);
}

TEST_CASE("finite-difference oracle on a stretched grid") {
  const auto p = params(1.0, 1.0);
  std::vector<double> g;
  for (int i = 0; i < 1500; ++i) g.push_back(0.01 * std::pow(1000.0, i / 1499.0));
  const auto fd = helmholtz_fd_oracle(1.0, p, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::fabs(fd[i] / helmholtz_field(1.0, p, g[i]) - 1.0));
  CHECK(worst < 0.01);
}

}  // TEST_SUITE
