#include "dscope/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "dscope/error.hpp"

namespace dscope::pipeline {

namespace {

bool two_letters(const std::string& s) {
  return s.size() == 2 && std::isalpha(static_cast<unsigned char>(s[0])) &&
         std::isalpha(static_cast<unsigned char>(s[1]));
}

}  // namespace

StrataMode parse_strata(const std::string& s) {
  if (s == "none") return StrataMode::none;
  if (s == "region") return StrataMode::region;
  if (s == "near_far") return StrataMode::near_far;
  throw ConfigError("unknown strata mode '" + s + "'");
}

std::string to_string(StrataMode m) {
  switch (m) {
    case StrataMode::none: return "none";
    case StrataMode::region: return "region";
    case StrataMode::near_far: return "near_far";
  }
  return "none";
}

std::vector<std::string> strata_labels(StrataMode m) {
  switch (m) {
    case StrataMode::none: return {"all"};
    case StrataMode::region: return {"coal_near", "coal_far", "noncoal_near", "noncoal_far", "unclassified"};
    case StrataMode::near_far: return {"near", "far"};
  }
  return {"all"};
}

std::vector<estimate::DecayObservation> decay_observations(std::span<const ingest::SiteMean> sites,
                                                           std::span<const geo::SourceRecord> sources,
                                                           geo::WeightMode mode, StrataMode strata,
                                                           Execution exec) {
  std::vector<geo::GeoPoint> points;
  points.reserve(sites.size());
  for (const auto& s : sites) points.push_back(s.location);
  const auto assigned = geo::assign_all(points, sources, mode, exec);

  std::vector<estimate::DecayObservation> out(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& s = sites[i];
    const auto& a = assigned[i];
    auto& o = out[i];
    o.id = s.obs_id;
    o.outcome = s.mean_value;
    o.distance = a.dominant_distance;
    o.wind_speed = s.wind_speed;
    o.period = s.periods.empty() ? std::string() : s.periods.front().substr(0, 4);
    if (s.wind_dir) {
      const double toward = *s.wind_dir * std::numbers::pi / 180.0;
      const double b = geo::bearing(sources[a.dominant_index].location, s.location);
      o.downwind = std::fabs(std::remainder(b - toward, 2.0 * std::numbers::pi)) < std::numbers::pi / 2.0;
    }
    switch (strata) {
      case StrataMode::none: o.stratum = "all"; break;
      case StrataMode::near_far: o.stratum = a.nearest_distance < ingest::kNearFieldKm ? "near" : "far"; break;
      case StrataMode::region: {
        std::string state = s.region_tag;
        if (!two_letters(state)) state = sources[a.nearest_index].region_tag;
        o.stratum = two_letters(state) ? ingest::to_string(ingest::classify_region(state, a.nearest_distance))
                                       : "unclassified";
        break;
      }
    }
  }
  return out;
}

std::vector<ingest::SiteMean> yearly_averages(std::span<const ObservationRecord> records) {
  std::vector<ObservationRecord> keyed(records.begin(), records.end());
  // Key by id and year so time_average groups per calendar year.
  for (auto& r : keyed) r.obs_id = r.obs_id + '\x1f' + r.period.substr(0, 4);
  auto sites = ingest::time_average(keyed);
  for (auto& s : sites) {
    const auto cut = s.obs_id.find('\x1f');
    const std::string year = s.obs_id.substr(cut + 1);
    s.obs_id.resize(cut);
    s.periods = {year};
  }
  return sites;
}

BoundingBox observation_bbox(std::span<const ingest::SiteMean> sites) {
  if (sites.empty()) throw ConfigError("no sites to bound");
  BoundingBox b{90.0, -90.0, 180.0, -180.0};
  for (const auto& s : sites) {
    b.lat_min = std::min(b.lat_min, s.location.lat);
    b.lat_max = std::max(b.lat_max, s.location.lat);
    b.lon_min = std::min(b.lon_min, s.location.lon);
    b.lon_max = std::max(b.lon_max, s.location.lon);
  }
  constexpr double kPad = 1e-3;
  if (!(b.lat_max > b.lat_min)) {
    b.lat_min = std::max(-90.0, b.lat_min - kPad);
    b.lat_max = std::min(90.0, b.lat_max + kPad);
  }
  if (!(b.lon_max > b.lon_min)) {
    b.lon_min = std::max(-180.0, b.lon_min - kPad);
    b.lon_max = std::min(180.0, b.lon_max + kPad);
  }
  return b;
}

}  // namespace dscope::pipeline
