#pragma once

#include <optional>
#include <string>

#include "dscope/geo.hpp"

namespace dscope {

// One measurement: a monitor-day or a satellite cell-month.
struct ObservationRecord {
  std::string obs_id;
  geo::GeoPoint location;
  std::string period;  // YYYY-MM-DD or YYYY-MM
  double value = 0.0;
  std::optional<int> n_within_period;  // cell schema
  std::optional<double> qa;            // cell schema
  std::string region_tag;              // state code when known
  std::optional<double> wind_speed;    // km/day
  std::optional<double> wind_dir;      // degrees clockwise from north, direction the wind blows toward
};

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  bool contains(const geo::GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
  geo::GeoPoint clamp(const geo::GeoPoint& p) const;
};

// Throws ConfigError unless lat_min < lat_max and lon_min < lon_max within range.
void validate(const BoundingBox& b);

}  // namespace dscope
