#include "dscope/boundary.hpp"

#include <cmath>

#include "dscope/error.hpp"

namespace dscope::boundary {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
}

}  // namespace

BoundaryEstimate spatial_boundary(const estimate::DecayEstimate& decay, double epsilon, double z) {
  check_epsilon(epsilon);
  BoundaryEstimate b;
  b.epsilon = epsilon;
  b.kappa_source = decay;
  if (!(decay.kappa_s > 0.0)) return b;

  const double d = std::log(1.0 / epsilon) / decay.kappa_s;
  const double rel = z * decay.se / decay.kappa_s;
  b.d_star = d;
  b.ci_low = std::max(0.0, d * (1.0 - rel));
  b.ci_high = d * (1.0 + rel);
  b.valid = std::fabs(decay.t_stat) >= z;
  return b;
}

std::vector<SensitivityPoint> epsilon_sensitivity(const estimate::DecayEstimate& decay,
                                                  std::span<const double> epsilons) {
  for (double e : epsilons) check_epsilon(e);
  std::vector<SensitivityPoint> out;
  out.reserve(epsilons.size());
  for (double e : epsilons) out.push_back({e, spatial_boundary(decay, e).d_star});
  return out;
}

double boundary_ratio(const BoundaryRatioInputs& in, double d_star) {
  if (!(in.treatment_intensity > 0.0) || !(in.diffusion > 0.0))
    throw ConfigError("treatment intensity and diffusion must be positive");
  if (!(d_star > 0.0)) throw ConfigError("d_star must be positive");
  return d_star / (kBoundaryRatioConstant * in.treatment_intensity * std::sqrt(in.diffusion));
}

}  // namespace dscope::boundary
