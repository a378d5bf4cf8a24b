#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dscope/estimate.hpp"

namespace dscope::boundary {

inline constexpr double kZ95 = 1.96;
inline constexpr double kBoundaryRatioConstant = 3.32;

struct BoundaryEstimate {
  std::optional<double> d_star;  // km; absent when kappa_s <= 0
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double epsilon = 0.1;
  estimate::DecayEstimate kappa_source;
  bool valid = false;  // kappa_s > 0 and |t| >= z
};

// d* = ln(1/epsilon) / kappa_s with the delta-method interval
// d* (1 -+ z se/kappa_s), lower end clipped at 0. Throws ConfigError unless
// 0 < epsilon < 1.
BoundaryEstimate spatial_boundary(const estimate::DecayEstimate& decay, double epsilon, double z = kZ95);

struct SensitivityPoint {
  double epsilon = 0.0;
  std::optional<double> d_star;
};

std::vector<SensitivityPoint> epsilon_sensitivity(const estimate::DecayEstimate& decay,
                                                  std::span<const double> epsilons);

struct BoundaryRatioInputs {
  double treatment_intensity = 0.0;  // lambda, 1/time
  double diffusion = 0.0;            // delta, km^2/time
};

// tau* = d* / (3.32 lambda sqrt(delta)).
double boundary_ratio(const BoundaryRatioInputs& in, double d_star);

}  // namespace dscope::boundary
