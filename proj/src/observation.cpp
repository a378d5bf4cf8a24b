#include "dscope/observation.hpp"

#include <cmath>

#include "dscope/error.hpp"

namespace dscope {

geo::GeoPoint BoundingBox::clamp(const geo::GeoPoint& p) const {
  return {std::fmin(std::fmax(p.lat, lat_min), lat_max), std::fmin(std::fmax(p.lon, lon_min), lon_max)};
}

void validate(const BoundingBox& b) {
  const bool finite = std::isfinite(b.lat_min) && std::isfinite(b.lat_max) &&
                      std::isfinite(b.lon_min) && std::isfinite(b.lon_max);
  if (!finite || !(b.lat_min < b.lat_max) || !(b.lon_min < b.lon_max))
    throw ConfigError("bounding box is degenerate");
  if (b.lat_min < -90.0 || b.lat_max > 90.0 || b.lon_min < -180.0 || b.lon_max > 180.0)
    throw ConfigError("bounding box outside coordinate range");
}

}  // namespace dscope
