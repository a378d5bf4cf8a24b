#pragma once

#include <span>
#include <string>
#include <vector>

namespace dscope::physics {

// Units: km, days, mass. kappa_s comes out in 1/km.
struct PhysicalParams {
  double diffusivity = 1.0;        // D, km^2/day
  double decay_rate = 0.0;         // lambda_0 (= lambda_1), 1/day
  double wind_speed = 0.0;         // U, km/day
  double length_scale = 1.0;       // L, km
  double viscosity = 1.0;          // nu, km^2/day
  double quad_decay = 0.0;         // lambda_2, regression-only (no closed-form field)
  double eddy_diffusivity = 0.0;   // D_turb, km^2/day

  // D_eff = D + D_turb; every closed form uses it.
  double effective_diffusivity() const { return diffusivity + eddy_diffusivity; }
};

// Throws ConfigError on non-finite values, D <= 0, L <= 0, nu <= 0 or negative rates.
void validate(const PhysicalParams& p);

// sqrt(lambda_0 / D_eff)
double kappa_s(const PhysicalParams& p);

enum class Regime { diffusive, advective, turbulent, reactive, mixed };
std::string to_string(Regime r);

struct RegimeNumbers {
  double reynolds = 0.0;
  double peclet = 0.0;
  double schmidt = 0.0;
  double damkohler = 0.0;
  Regime verdict = Regime::diffusive;
};

inline constexpr double kPecletLimit = 1.0;
inline constexpr double kReynoldsLimit = 2000.0;
inline constexpr double kDamkohlerLimit = 1.0;

// Re = UL/nu, Pe = UL/D, Sc = nu/D, Da = lambda_0 L^2 / D. Diffusive iff
// Pe < 1, Re < 2000 and Da < 1 (strict). A single failing condition names the
// regime (advective, turbulent, reactive); two or more give `mixed`.
RegimeNumbers dimensionless(const PhysicalParams& p);

// Q/(4 pi D r) exp(-kappa_s r). Throws DomainError for r <= 0.
double helmholtz_field(double q, const PhysicalParams& p, double r);

inline constexpr double kGeometricReferenceKm = 1.0;

// helmholtz_field * (r0 / r) with r0 = 1 km: the 1/r^2 spreading form.
double geometric_field(double q, const PhysicalParams& p, double r);

// Modified Bessel function of the second kind, order zero, x > 0.
// Polynomial fits (Abramowitz & Stegun 9.8.5/9.8.6) for x <= 2 and x > 2.
double bessel_k0(double x);

// 2-D steady plume (Q / 2 pi D) exp(U r cos(theta) / 2D) K0(alpha r),
// alpha = sqrt((U/2D)^2 + lambda_0/D). theta is measured from the downwind axis.
double advection_field(double q, const PhysicalParams& p, double r, double theta);

// Instantaneous release: Q (4 pi D t)^(-3/2) exp(-r^2/(4 D t) - lambda_0 t).
double pulse_field(double q, const PhysicalParams& p, double r, double t);

// Sum of helmholtz_field over sources; emission rates and distances are parallel spans.
double superposed_field(std::span<const double> emission_rates, const PhysicalParams& p,
                        std::span<const double> distances);

inline constexpr std::size_t kMinOracleNodes = 200;

// Second-order finite-difference solve of D(C'' + 2C'/r) - lambda_0 C = 0 on an
// ascending (possibly non-uniform) grid. Left boundary pinned to the closed-form
// amplitude; right boundary uses the decaying far-field (radiation) condition
// C' = -(kappa_s + 1/r) C, the truncated form of C -> 0. Throws OracleError for
// fewer than 200 nodes or a non-ascending grid.
std::vector<double> helmholtz_fd_oracle(double q, const PhysicalParams& p,
                                        std::span<const double> r_grid);

// n nodes uniformly spaced on [lo, hi].
std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

}  // namespace dscope::physics
