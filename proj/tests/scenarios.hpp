#pragma once

// Synthetic worlds shared by the unit and acceptance suites.

#include <cstdint>

#include "dscope/ingest.hpp"
#include "dscope/synth.hpp"

namespace scenario {

using namespace dscope;

inline const BoundingBox kBox{37.0, 41.0, -84.0, -78.0};

// One strong source in the middle of the box: kappa = 0.002/km.
inline synth::ScenarioSpec source_dominated(std::uint64_t seed, std::size_t n = 400, double sigma = 0.3) {
  synth::ScenarioSpec s;
  s.sources = {{"P1", {39.0, -81.0}, 1000.0, 5000.0, "WV"}};
  s.params.diffusivity = 100.0;
  s.params.decay_rate = 0.0004;
  s.n_obs = n;
  s.noise_sigma = sigma;
  s.seed = seed;
  s.bbox = kBox;
  return s;
}

// A weak source in one corner and a city in the opposite one, so outcomes
// rise with distance from the source.
inline synth::ScenarioSpec urban_dominated(std::uint64_t seed, std::size_t n = 400, double sigma = 0.3) {
  auto s = source_dominated(seed, n, sigma);
  s.sources = {{"P1", {37.2, -83.8}, 100.0, 5.0, "KY"}};
  s.background = synth::Background::urban_gradient;
  s.urban_centers = {{{40.8, -78.2}, 1.0}};
  return s;
}

// Many unit sources spread beyond the observation box, kappa = 0.01/km. Used
// for placebo runs: with few sources or slow decay the outcome surface is
// smooth, and any random placebo distance surface correlates with it.
inline synth::ScenarioSpec many_sources(std::uint64_t seed, std::size_t n_sources = 200, std::size_t n = 300,
                                        double sigma = 1.0) {
  synth::ScenarioSpec s;
  const BoundingBox wide{kBox.lat_min - 3.0, kBox.lat_max + 3.0, kBox.lon_min - 3.0, kBox.lon_max + 3.0};
  s.sources = synth::random_sources(n_sources, wide, seed ^ 0x5eedULL);
  s.params.diffusivity = 100.0;
  s.params.decay_rate = 0.01;
  s.n_obs = n;
  s.noise_sigma = sigma;
  s.seed = seed;
  s.bbox = kBox;
  return s;
}

inline std::vector<ingest::SiteMean> sites(const synth::SyntheticDataset& d) {
  return ingest::time_average(d.observations);
}

}  // namespace scenario
