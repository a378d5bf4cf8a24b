#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dscope/parallel.hpp"

namespace dscope::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

// Distances below this are clamped; the point-source field diverges at r = 0.
inline constexpr double kMinDistanceKm = 0.1;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Throws InputError when either coordinate is non-finite or out of range.
void validate(const GeoPoint& p);

struct SourceRecord {
  std::string source_id;
  GeoPoint location;
  double capacity_mw = 0.0;
  double emission_rate = 0.0;  // SO2 + NOx, or the synthetic emission rate Q
  std::string region_tag;
};

// Throws InputError on negative weights, bad coordinates or duplicate ids.
void validate(std::span<const SourceRecord> sources);

enum class WeightMode { nearest, capacity, emissions };

WeightMode parse_weight_mode(const std::string& s);
std::string to_string(WeightMode m);

struct SourceAssignment {
  std::string nearest_id;
  std::size_t nearest_index = 0;
  double nearest_distance = 0.0;  // km, clamped at kMinDistanceKm
  std::string dominant_exposure_id;
  std::size_t dominant_index = 0;
  double dominant_distance = 0.0;  // km to the dominant-exposure source
  double exposure = 0.0;           // sum_j w_j / d_j^2, 1/km^2 scaled by w
  bool clamped = false;            // some source was closer than kMinDistanceKm
};

// Great-circle distance in km on a sphere of radius 6371 km.
double haversine(const GeoPoint& a, const GeoPoint& b);

// Initial bearing from `from` to `to`, radians clockwise from north in (-pi, pi].
double bearing(const GeoPoint& from, const GeoPoint& to);

double source_weight(const SourceRecord& s, WeightMode mode);

// Nearest source plus the source that dominates the w/d^2 exposure sum.
// Ties are broken by source_id so the result does not depend on ordering.
SourceAssignment assign_sources(const GeoPoint& point,
                                std::span<const SourceRecord> sources,
                                WeightMode mode);

std::vector<SourceAssignment> assign_all(std::span<const GeoPoint> points,
                                         std::span<const SourceRecord> sources,
                                         WeightMode mode,
                                         Execution exec = Execution::parallel);

// Row-major n_points x n_sources matrix of clamped distances.
std::vector<double> distance_matrix(std::span<const GeoPoint> points,
                                    std::span<const SourceRecord> sources,
                                    Execution exec = Execution::parallel);

struct DistanceValue {
  double distance = 0.0;
  double value = 0.0;
};

struct BinStats {
  double lo = 0.0;
  double hi = 0.0;  // +inf for an open-ended last bin
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> median;
  std::optional<double> sd;  // sample sd, needs n >= 2
};

struct BinSummary {
  std::vector<BinStats> bins;
  std::size_t outside = 0;  // observations below edges.front() or past a closed last edge
};

// Half-open bins [e_k, e_{k+1}); open_last appends [e_last, inf).
BinSummary distance_bin_summary(std::span<const DistanceValue> obs,
                                std::span<const double> edges,
                                bool open_last = false);

}  // namespace dscope::geo
