#include "dscope/physics.hpp"

#include <cmath>
#include <numbers>

#include "dscope/error.hpp"

namespace dscope::physics {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive_r(double r) {
  if (!(r > 0.0)) throw DomainError("distance must be positive, got " + std::to_string(r));
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Power series; exact to rounding for the x <= 2 branch where it is used.
double bessel_i0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace

void validate(const PhysicalParams& p) {
  if (!(std::isfinite(p.diffusivity) && p.diffusivity > 0.0))
    throw ConfigError("diffusivity must be positive and finite");
  if (!(std::isfinite(p.length_scale) && p.length_scale > 0.0))
    throw ConfigError("length scale must be positive and finite");
  if (!(std::isfinite(p.viscosity) && p.viscosity > 0.0))
    throw ConfigError("viscosity must be positive and finite");
  if (!finite_nonneg(p.decay_rate)) throw ConfigError("decay rate must be >= 0");
  if (!finite_nonneg(p.wind_speed)) throw ConfigError("wind speed must be >= 0");
  if (!finite_nonneg(p.quad_decay)) throw ConfigError("quadratic decay must be >= 0");
  if (!finite_nonneg(p.eddy_diffusivity)) throw ConfigError("eddy diffusivity must be >= 0");
}

double kappa_s(const PhysicalParams& p) {
  return std::sqrt(p.decay_rate / p.effective_diffusivity());
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::diffusive: return "diffusive";
    case Regime::advective: return "advective";
    case Regime::turbulent: return "turbulent";
    case Regime::reactive: return "reactive";
    case Regime::mixed: return "mixed";
  }
  return "mixed";
}

RegimeNumbers dimensionless(const PhysicalParams& p) {
  validate(p);
  const double d = p.effective_diffusivity();
  RegimeNumbers n;
  n.reynolds = p.wind_speed * p.length_scale / p.viscosity;
  n.peclet = p.wind_speed * p.length_scale / d;
  n.schmidt = p.viscosity / d;
  n.damkohler = p.decay_rate * p.length_scale * p.length_scale / d;

  const bool advective = !(n.peclet < kPecletLimit);
  const bool turbulent = !(n.reynolds < kReynoldsLimit);
  const bool reactive = !(n.damkohler < kDamkohlerLimit);
  const int failing = int(advective) + int(turbulent) + int(reactive);
  if (failing == 0)
    n.verdict = Regime::diffusive;
  else if (failing > 1)
    n.verdict = Regime::mixed;
  else if (advective)
    n.verdict = Regime::advective;
  else if (turbulent)
    n.verdict = Regime::turbulent;
  else
    n.verdict = Regime::reactive;
  return n;
}

double helmholtz_field(double q, const PhysicalParams& p, double r) {
  require_positive_r(r);
  const double d = p.effective_diffusivity();
  return q / (4.0 * kPi * d * r) * std::exp(-kappa_s(p) * r);
}

double geometric_field(double q, const PhysicalParams& p, double r) {
  return helmholtz_field(q, p, r) * (kGeometricReferenceKm / r);
}

double bessel_k0(double x) {
  if (!(x > 0.0)) throw DomainError("K0 requires x > 0");
  if (x <= 2.0) {
    const double y = 0.25 * x * x;
    const double poly =
        -0.57721566 +
        y * (0.42278420 +
             y * (0.23069756 + y * (0.03488590 + y * (0.00262698 + y * (0.00010750 + y * 0.00000740)))));
    return -std::log(0.5 * x) * bessel_i0_series(x) + poly;
  }
  const double y = 2.0 / x;
  const double poly =
      1.25331414 +
      y * (-0.07832358 +
           y * (0.02189568 + y * (-0.01062446 + y * (0.00587872 + y * (-0.00251540 + y * 0.00053208)))));
  return std::exp(-x) / std::sqrt(x) * poly;
}

double advection_field(double q, const PhysicalParams& p, double r, double theta) {
  require_positive_r(r);
  const double d = p.effective_diffusivity();
  const double half_drift = p.wind_speed / (2.0 * d);
  const double alpha = std::sqrt(half_drift * half_drift + p.decay_rate / d);
  // alpha = 0 only with no wind and no decay, where the 2-D kernel is unbounded.
  if (!(alpha > 0.0)) throw DomainError("advection field needs wind or decay (alpha > 0)");
  return q / (2.0 * kPi * d) * std::exp(half_drift * r * std::cos(theta)) * bessel_k0(alpha * r);
}

double pulse_field(double q, const PhysicalParams& p, double r, double t) {
  require_positive_r(r);
  if (!(t > 0.0)) throw DomainError("time must be positive");
  const double d = p.effective_diffusivity();
  const double spread = 4.0 * d * t;
  return q * std::pow(kPi * spread, -1.5) * std::exp(-r * r / spread - p.decay_rate * t);
}

double superposed_field(std::span<const double> emission_rates, const PhysicalParams& p,
                        std::span<const double> distances) {
  if (emission_rates.size() != distances.size())
    throw ConfigError("emission rates and distances differ in length");
  double c = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j)
    c += helmholtz_field(emission_rates[j], p, distances[j]);
  return c;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + h * static_cast<double>(i);
  g.back() = hi;
  return g;
}

std::vector<double> helmholtz_fd_oracle(double q, const PhysicalParams& p,
                                        std::span<const double> r) {
  const std::size_t n = r.size();
  if (n < kMinOracleNodes)
    throw OracleError("finite-difference grid too coarse: " + std::to_string(n) + " nodes, need " +
                      std::to_string(kMinOracleNodes));
  if (!(r[0] > 0.0)) throw OracleError("grid must start at r > 0");
  for (std::size_t i = 1; i < n; ++i)
    if (!(r[i] > r[i - 1])) throw OracleError("grid must be strictly ascending");

  const double k2 = p.decay_rate / p.effective_diffusivity();
  const double k = std::sqrt(k2);

  // Tridiagonal rows: lower[i] C[i-1] + diag[i] C[i] + upper[i] C[i+1] = rhs[i].
  std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
  diag[0] = 1.0;
  rhs[0] = helmholtz_field(q, p, r[0]);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    const double s = hm + hp;
    const double two_over_r = 2.0 / r[i];
    lower[i] = 2.0 / (hm * s) + two_over_r * (-hp / (hm * s));
    diag[i] = -2.0 / (hm * hp) + two_over_r * ((hp - hm) / (hm * hp)) - k2;
    upper[i] = 2.0 / (hp * s) + two_over_r * (hm / (hp * s));
  }

  // Far-field row: backward three-point C' + (kappa + 1/r) C = 0. Its C[n-3]
  // coefficient is folded away using row n-2 so the system stays tridiagonal.
  {
    const double h1 = r[n - 1] - r[n - 2];
    const double h2 = r[n - 2] - r[n - 3];
    const double a = h1 / (h2 * (h1 + h2));                  // C[n-3]
    const double b = -(h1 + h2) / (h1 * h2);                  // C[n-2]
    const double c = (2.0 * h1 + h2) / (h1 * (h1 + h2)) + k + 1.0 / r[n - 1];  // C[n-1]
    const double f = a / lower[n - 2];
    lower[n - 1] = b - f * diag[n - 2];
    diag[n - 1] = c - f * upper[n - 2];
    rhs[n - 1] = -f * rhs[n - 2];
  }

  // Thomas algorithm.
  std::vector<double> cp(n, 0.0), dp(n, 0.0);
  cp[0] = upper[0] / diag[0];
  dp[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag[i] - lower[i] * cp[i - 1];
    cp[i] = upper[i] / m;
    dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m;
  }
  std::vector<double> c(n);
  c[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) c[i] = dp[i] - cp[i] * c[i + 1];
  return c;
}

}  // namespace dscope::physics
