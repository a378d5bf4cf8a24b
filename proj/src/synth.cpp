#include "dscope/synth.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <limits>
#include <numbers>

#include "dscope/error.hpp"
#include "dscope/rng.hpp"

namespace dscope::synth {

namespace {

// Per-observation random slots.
constexpr std::uint64_t kSlotLat = 0;
constexpr std::uint64_t kSlotLon = 1;
constexpr std::uint64_t kSlotNoise = 2;  // uses 2 and 3

std::string make_id(const char* prefix, std::size_t i, std::size_t n) {
  int width = 1;
  for (std::size_t m = n; m >= 10; m /= 10) ++width;
  width = std::max(width, 6);
  std::string digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

geo::GeoPoint draw_point(const rng::CounterRng& r, const BoundingBox& b) {
  return {b.lat_min + (b.lat_max - b.lat_min) * r.uniform(kSlotLat),
          b.lon_min + (b.lon_max - b.lon_min) * r.uniform(kSlotLon)};
}

double angle_diff(double a, double b) {
  double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::fabs(d);
}

}  // namespace

Background parse_background(const std::string& s) {
  if (s == "none") return Background::none;
  if (s == "constant") return Background::constant;
  if (s == "urban_gradient") return Background::urban_gradient;
  throw ConfigError("unknown background mode '" + s + "'");
}

std::string to_string(Background b) {
  switch (b) {
    case Background::none: return "none";
    case Background::constant: return "constant";
    case Background::urban_gradient: return "urban_gradient";
  }
  return "none";
}

FieldMode parse_field_mode(const std::string& s) {
  if (s == "helmholtz") return FieldMode::helmholtz;
  if (s == "geometric") return FieldMode::geometric;
  if (s == "advection") return FieldMode::advection;
  throw ConfigError("unknown field mode '" + s + "'");
}

std::string to_string(FieldMode m) {
  switch (m) {
    case FieldMode::helmholtz: return "helmholtz";
    case FieldMode::geometric: return "geometric";
    case FieldMode::advection: return "advection";
  }
  return "helmholtz";
}

void validate(const ScenarioSpec& s) {
  if (s.n_obs == 0) throw ConfigError("n_obs must be positive");
  if (!(std::isfinite(s.noise_sigma) && s.noise_sigma >= 0.0))
    throw ConfigError("noise_sigma must be >= 0");
  if (s.background == Background::urban_gradient && s.urban_centers.empty())
    throw ConfigError("urban_gradient background needs at least one urban center");
  if (s.background == Background::constant && !(s.background_level >= 0.0))
    throw ConfigError("background_level must be >= 0");
  if (s.periods.empty()) throw ConfigError("at least one period is required");
  validate(s.bbox);
  physics::validate(s.params);
  geo::validate(std::span<const geo::SourceRecord>(s.sources));
  for (const auto& u : s.urban_centers) geo::validate(u.location);
}

SyntheticDataset generate(const ScenarioSpec& spec, Execution exec) {
  validate(spec);

  SyntheticDataset out;
  out.sources = spec.sources;
  out.truth.kappa_s = physics::kappa_s(spec.params);
  out.truth.d_star = out.truth.kappa_s > 0.0 ? std::log(10.0) / out.truth.kappa_s : 0.0;
  for (const auto& s : spec.sources) out.truth.emission_rates.push_back(s.emission_rate);

  if (out.truth.kappa_s > 0.0 && !spec.sources.empty()) {
    const double reach = 10.0 / out.truth.kappa_s;
    bool all_far = true;
    for (const auto& s : spec.sources)
      if (geo::haversine(s.location, spec.bbox.clamp(s.location)) <= reach) all_far = false;
    out.weak_signal = all_far;
  }

  const double wind_rad = spec.wind_dir_deg * std::numbers::pi / 180.0;
  const auto n = static_cast<std::ptrdiff_t>(spec.n_obs);
  out.observations.resize(spec.n_obs);

  auto make = [&](std::ptrdiff_t i) {
    const rng::CounterRng r(spec.seed, static_cast<std::uint64_t>(i));
    ObservationRecord o;
    o.obs_id = make_id("obs", static_cast<std::size_t>(i), spec.n_obs);
    o.location = draw_point(r, spec.bbox);
    o.period = spec.periods[static_cast<std::size_t>(i) % spec.periods.size()];

    double field = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& s : spec.sources) {
      const double d = std::fmax(geo::haversine(s.location, o.location), geo::kMinDistanceKm);
      if (d < best_d) {
        best_d = d;
        o.region_tag = s.region_tag;
      }
      switch (spec.field) {
        case FieldMode::helmholtz: field += physics::helmholtz_field(s.emission_rate, spec.params, d); break;
        case FieldMode::geometric: field += physics::geometric_field(s.emission_rate, spec.params, d); break;
        case FieldMode::advection: {
          const double theta = angle_diff(geo::bearing(s.location, o.location), wind_rad);
          field += physics::advection_field(s.emission_rate, spec.params, d, theta);
          break;
        }
      }
    }

    double background = 0.0;
    if (spec.background == Background::constant) {
      background = spec.background_level;
    } else if (spec.background == Background::urban_gradient) {
      for (const auto& u : spec.urban_centers)
        background += u.amplitude * std::exp(-geo::haversine(o.location, u.location) / kUrbanScaleKm);
    }

    o.value = (field + background) * std::exp(spec.noise_sigma * r.normal(kSlotNoise));
    if (spec.field == FieldMode::advection) {
      o.wind_speed = spec.params.wind_speed;
      o.wind_dir = spec.wind_dir_deg;
    }
    out.observations[static_cast<std::size_t>(i)] = std::move(o);
  };

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) make(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) make(i);
  }
  return out;
}

std::vector<geo::SourceRecord> random_sources(std::size_t n, const BoundingBox& bbox,
                                              std::uint64_t seed) {
  if (n == 0) throw ConfigError("random_sources needs n > 0");
  validate(bbox);
  std::vector<geo::SourceRecord> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    // Distinct stream from observation draws with the same seed.
    const rng::CounterRng r(rng::derive_seed(seed, 0x5eed), j);
    out[j].source_id = make_id("rnd", j, n);
    out[j].location = draw_point(r, bbox);
    out[j].capacity_mw = 1.0;
    out[j].emission_rate = 1.0;
  }
  return out;
}

}  // namespace dscope::synth
