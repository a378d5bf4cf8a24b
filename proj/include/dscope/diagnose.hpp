#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dscope/boundary.hpp"
#include "dscope/estimate.hpp"
#include "dscope/geo.hpp"
#include "dscope/ingest.hpp"
#include "dscope/observation.hpp"
#include "dscope/parallel.hpp"

namespace dscope::diagnose {

inline constexpr double kSignificanceZ = 1.96;
inline constexpr std::size_t kMinStratumExtra = 10;  // minimum stratum size is p + 10
inline constexpr std::size_t kMinPlaceboSeeds = 20;

// Minimum observations for a stratum to be assessed under `spec`.
std::size_t min_stratum_size(estimate::SpecKind spec);

struct ValidityRow {
  std::string data_source;
  std::string stratum;
  std::size_t n = 0;
  std::optional<double> kappa_s;
  std::optional<double> se;
  std::optional<double> t_stat;
  bool significant = false;
  bool framework_applies = false;  // kappa_s > 0 and |t| >= 1.96
  bool insufficient = false;
  std::optional<double> d_star;    // only where the framework applies
  std::string note;
};

struct SourceCoverage {
  std::string data_source;
  std::size_t n_applicable = 0;
  std::size_t n_total = 0;
  double fraction = 0.0;
};

struct ValidityReport {
  std::vector<ValidityRow> rows;
  std::vector<SourceCoverage> coverage;  // per data source, first-seen order
  double epsilon = 0.1;
};

// A stratum estimate produced elsewhere (e.g. a table of regional results).
struct PrecomputedStratum {
  std::string data_source;
  std::string stratum;
  std::size_t n = 0;
  double kappa_s = 0.0;
  double se = 0.0;
};

ValidityReport assess_precomputed(std::span<const PrecomputedStratum> strata, double epsilon);

// Fits `spec` per stratum, converts to a boundary and applies the validity
// rule. Strata below min_stratum_size are flagged insufficient and never apply.
ValidityReport validity_assessment(std::span<const estimate::DecayObservation> obs,
                                   std::span<const std::string> strata, estimate::SpecKind spec,
                                   double epsilon, const std::string& data_source = "observations");

// Appends `more`'s rows and coverage to `into` (same epsilon assumed).
void merge(ValidityReport& into, const ValidityReport& more);

// Table layout with applies/reject markers.
std::string render_grid(const ValidityReport& report);

struct PlaceboResult {
  estimate::DecayEstimate actual;
  std::vector<estimate::DecayEstimate> placebo;  // one per seed, seed order
  std::size_t n_seeds = 0;
  double rejection_rate = 0.0;  // share of placebo runs with |t| >= 1.96
  double placebo_mean_kappa = 0.0;
  double placebo_mean_se = 0.0;
  double difference = 0.0;      // actual kappa - mean placebo kappa
  double difference_se = 0.0;   // sqrt(se_actual^2 + mean placebo se^2)
};

// Keeps sites and outcomes fixed and swaps the sources for random points in
// `bbox` (as many as there are real sources), re-estimating kappa per seed.
// Seed k uses derive_seed(master_seed, k). Throws ConfigError for n_seeds < 20.
PlaceboResult placebo_test(std::span<const ingest::SiteMean> sites,
                           std::span<const geo::SourceRecord> sources, const BoundingBox& bbox,
                           std::size_t n_seeds, estimate::SpecKind spec, std::uint64_t master_seed,
                           Execution exec = Execution::parallel);

struct ModeResult {
  geo::WeightMode mode = geo::WeightMode::nearest;
  std::optional<estimate::DecayEstimate> decay;
  std::optional<boundary::BoundaryEstimate> boundary;
  std::string note;
};

struct RobustnessResult {
  std::vector<ModeResult> modes;
  double max_relative_spread = 0.0;  // (max - min) / mean |kappa| over modes with an estimate
};

RobustnessResult distance_measure_robustness(std::span<const ingest::SiteMean> sites,
                                             std::span<const geo::SourceRecord> sources,
                                             estimate::SpecKind spec,
                                             std::span<const geo::WeightMode> modes, double epsilon);

}  // namespace dscope::diagnose
