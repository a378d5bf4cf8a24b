#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dscope/geo.hpp"
#include "dscope/observation.hpp"

namespace dscope::ingest {

// Exact CSV headers. Observation files may append any of the optional
// columns `state`, `wind_speed`, `wind_dir` after the required ones.
inline constexpr const char* kPlantHeader = "plant_id,lat,lon,capacity_mw,so2_tons,nox_tons,state";
inline constexpr const char* kMonitorHeader = "monitor_id,lat,lon,date,value";
inline constexpr const char* kCellHeader = "cell_id,lat,lon,month,value,n_obs,qa";

enum class Schema { monitor, cell };
Schema parse_schema(const std::string& s);
std::string to_string(Schema s);

struct FilterPolicy {
  double min_coverage = 0.75;     // monitors: distinct days per (id, year) / days observed that year
  int min_obs_per_period = 5;     // cells
  double min_qa = 0.75;           // cells
  double trim_quantile = 0.99;    // global, over the pool left after dropping negatives
  bool drop_negative = true;
  // Resolved trim cutoff. When set it replaces the quantile, which makes a
  // second pass with the resolved policy a no-op.
  std::optional<double> trim_threshold;
};

// Throws ConfigError if a fraction is outside (0, 1] or min_obs_per_period < 0.
void validate(const FilterPolicy& p);

struct FilterAudit {
  std::size_t input_rows = 0;
  std::size_t malformed = 0;
  std::size_t negative = 0;
  std::size_t trimmed = 0;
  std::size_t coverage = 0;
  std::size_t min_obs = 0;
  std::size_t qa = 0;
  std::size_t retained = 0;
  std::optional<double> trim_threshold;
  std::vector<std::string> malformed_lines;  // "line N: reason", capped at 20 entries

  std::size_t dropped() const { return malformed + negative + trimmed + coverage + min_obs + qa; }
  bool empty() const { return dropped() == 0; }
};

struct LoadResult {
  std::vector<ObservationRecord> records;  // sorted by (obs_id, period)
  FilterAudit audit;
  FilterPolicy resolved_policy;  // policy with trim_threshold pinned
};

// Parses without filtering. Malformed rows are counted in the audit and
// skipped; more than half malformed is an InputError, as is a bad header.
LoadResult parse_observations(std::istream& in, Schema schema);

// Applies the policy in order: negative values, trim, then coverage (monitor)
// or min-obs and QA (cell). Each dropped row is counted under one rule.
LoadResult apply_filters(std::vector<ObservationRecord> records, Schema schema,
                         const FilterPolicy& policy);

LoadResult load_observations(const std::filesystem::path& path, Schema schema,
                             const FilterPolicy& policy);
LoadResult load_observations(std::istream& in, Schema schema, const FilterPolicy& policy);

// Header-sniffing helper for the CLI; throws InputError for unknown headers.
Schema detect_schema(const std::filesystem::path& path);

std::vector<geo::SourceRecord> read_sources(std::istream& in);
std::vector<geo::SourceRecord> read_sources(const std::filesystem::path& path);

// Writes emission_rate into so2_tons with nox_tons = 0.
void write_sources(std::ostream& out, std::span<const geo::SourceRecord> sources);
void write_observations(std::ostream& out, std::span<const ObservationRecord> records, Schema schema);

struct SiteMean {
  std::string obs_id;
  geo::GeoPoint location;
  double mean_value = 0.0;
  std::size_t n_periods = 0;
  std::string region_tag;
  std::optional<double> wind_speed;  // mean over periods that report it
  std::optional<double> wind_dir;    // first reported
  std::vector<std::string> periods;  // sorted, distinct
};

// Arithmetic mean per obs_id; output sorted by obs_id. Throws ConfigError when empty.
std::vector<SiteMean> time_average(std::span<const ObservationRecord> records);

enum class RegionClass { coal_near, coal_far, noncoal_near, noncoal_far };
std::string to_string(RegionClass c);

inline constexpr double kNearFieldKm = 100.0;

bool is_coal_state(const std::string& state_code);

// Coal set {WV, WY, KY, IN, PA, ND, MT, OH, TX, IL}; near iff distance < 100 km.
// Throws InputError unless the code is two ASCII letters.
RegionClass classify_region(const std::string& state_code, double nearest_distance_km);

}  // namespace dscope::ingest
