#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dscope/geo.hpp"
#include "dscope/observation.hpp"
#include "dscope/parallel.hpp"
#include "dscope/physics.hpp"

namespace dscope::synth {

enum class Background { none, constant, urban_gradient };
Background parse_background(const std::string& s);
std::string to_string(Background b);

// Closed form used for the source contribution.
enum class FieldMode { helmholtz, geometric, advection };
FieldMode parse_field_mode(const std::string& s);
std::string to_string(FieldMode m);

struct UrbanCenter {
  geo::GeoPoint location;
  double amplitude = 0.0;
};

inline constexpr double kUrbanScaleKm = 50.0;

struct ScenarioSpec {
  std::vector<geo::SourceRecord> sources;  // emission_rate is Q
  physics::PhysicalParams params;
  std::size_t n_obs = 0;
  double noise_sigma = 0.0;  // sd of the log-scale multiplicative noise
  Background background = Background::none;
  double background_level = 0.0;  // used by Background::constant
  std::vector<UrbanCenter> urban_centers;
  FieldMode field = FieldMode::helmholtz;
  double wind_dir_deg = 90.0;  // advection mode: direction the wind blows toward
  std::vector<std::string> periods{"2020-06-15"};  // assigned cyclically by index
  std::uint64_t seed = 0;
  BoundingBox bbox;
};

// Throws ConfigError on an invalid scenario.
void validate(const ScenarioSpec& s);

struct Truth {
  double kappa_s = 0.0;
  double d_star = 0.0;  // ln(10) / kappa_s; 0 when kappa_s == 0
  std::vector<double> emission_rates;
};

struct SyntheticDataset {
  std::vector<ObservationRecord> observations;
  std::vector<geo::SourceRecord> sources;
  Truth truth;
  bool weak_signal = false;  // every source farther than 10/kappa_s from the bbox
};

// Uniform locations in the bbox; value = source field + background, times
// exp(N(0, sigma^2)). Observation i depends only on (seed, i).
SyntheticDataset generate(const ScenarioSpec& spec, Execution exec = Execution::parallel);

// n unit-weight sources placed uniformly in the bbox.
std::vector<geo::SourceRecord> random_sources(std::size_t n, const BoundingBox& bbox,
                                              std::uint64_t seed);

}  // namespace dscope::synth
