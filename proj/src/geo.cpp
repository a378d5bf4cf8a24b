#include "dscope/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "dscope/error.hpp"

namespace dscope::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct PairDistance {
  double d;
  bool clamped;
};

PairDistance clamped_distance(const GeoPoint& a, const GeoPoint& b) {
  const double d = haversine(a, b);
  if (d < kMinDistanceKm) return {kMinDistanceKm, true};
  return {d, false};
}

}  // namespace

void validate(const GeoPoint& p) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon))
    throw InputError("non-finite coordinate");
  if (p.lat < -90.0 || p.lat > 90.0)
    throw InputError("latitude out of range: " + std::to_string(p.lat));
  if (p.lon < -180.0 || p.lon > 180.0)
    throw InputError("longitude out of range: " + std::to_string(p.lon));
}

void validate(std::span<const SourceRecord> sources) {
  std::set<std::string> ids;
  for (const auto& s : sources) {
    validate(s.location);
    if (!(s.capacity_mw >= 0.0) || !(s.emission_rate >= 0.0))
      throw InputError("source " + s.source_id + " has a negative weight");
    if (!ids.insert(s.source_id).second)
      throw InputError("duplicate source id " + s.source_id);
  }
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "nearest") return WeightMode::nearest;
  if (s == "capacity") return WeightMode::capacity;
  if (s == "emissions") return WeightMode::emissions;
  throw ConfigError("unknown weight mode '" + s + "'");
}

std::string to_string(WeightMode m) {
  switch (m) {
    case WeightMode::nearest: return "nearest";
    case WeightMode::capacity: return "capacity";
    case WeightMode::emissions: return "emissions";
  }
  return "nearest";
}

double haversine(const GeoPoint& a, const GeoPoint& b) {
  if (!std::isfinite(a.lat) || !std::isfinite(a.lon) || !std::isfinite(b.lat) ||
      !std::isfinite(b.lon))
    throw InputError("non-finite coordinate in haversine");
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double sdphi = std::sin((phi2 - phi1) / 2.0);
  const double sdlam = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
  const double h = sdphi * sdphi + std::cos(phi1) * std::cos(phi2) * sdlam * sdlam;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

double bearing(const GeoPoint& from, const GeoPoint& to) {
  const double phi1 = from.lat * kDegToRad;
  const double phi2 = to.lat * kDegToRad;
  const double dlam = (to.lon - from.lon) * kDegToRad;
  const double y = std::sin(dlam) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
  return std::atan2(y, x);
}

double source_weight(const SourceRecord& s, WeightMode mode) {
  switch (mode) {
    case WeightMode::nearest: return 1.0;
    case WeightMode::capacity: return s.capacity_mw;
    case WeightMode::emissions: return s.emission_rate;
  }
  return 1.0;
}

SourceAssignment assign_sources(const GeoPoint& point, std::span<const SourceRecord> sources,
                                WeightMode mode) {
  if (sources.empty()) throw ConfigError("source collection is empty");

  SourceAssignment out;
  double best_d = std::numeric_limits<double>::infinity();
  double best_share = -1.0;
  double dominant_d = 0.0;
  const SourceRecord* nearest = nullptr;
  const SourceRecord* dominant = nullptr;

  for (std::size_t j = 0; j < sources.size(); ++j) {
    const auto& s = sources[j];
    const auto [d, clamped] = clamped_distance(point, s.location);
    out.clamped = out.clamped || clamped;

    if (d < best_d || (d == best_d && s.source_id < nearest->source_id)) {
      best_d = d;
      nearest = &s;
      out.nearest_index = j;
    }

    const double share = source_weight(s, mode) / (d * d);
    out.exposure += share;
    if (share > best_share ||
        (share == best_share && (d < dominant_d || (d == dominant_d && s.source_id < dominant->source_id)))) {
      best_share = share;
      dominant = &s;
      dominant_d = d;
      out.dominant_index = j;
    }
  }

  out.nearest_id = nearest->source_id;
  out.nearest_distance = best_d;
  // All-zero weights carry no exposure information; fall back to the nearest source.
  if (best_share <= 0.0) {
    dominant = nearest;
    dominant_d = best_d;
    out.dominant_index = out.nearest_index;
  }
  out.dominant_exposure_id = dominant->source_id;
  out.dominant_distance = dominant_d;
  return out;
}

std::vector<SourceAssignment> assign_all(std::span<const GeoPoint> points,
                                         std::span<const SourceRecord> sources, WeightMode mode,
                                         Execution exec) {
  if (sources.empty()) throw ConfigError("source collection is empty");
  std::vector<SourceAssignment> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = assign_sources(points[i], sources, mode);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = assign_sources(points[i], sources, mode);
  }
  return out;
}

std::vector<double> distance_matrix(std::span<const GeoPoint> points,
                                    std::span<const SourceRecord> sources, Execution exec) {
  const std::size_t m = sources.size();
  std::vector<double> out(points.size() * m);
  const auto n = static_cast<std::ptrdiff_t>(points.size());
  auto row = [&](std::ptrdiff_t i) {
    for (std::size_t j = 0; j < m; ++j)
      out[i * m + j] = clamped_distance(points[i], sources[j].location).d;
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) row(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) row(i);
  }
  return out;
}

BinSummary distance_bin_summary(std::span<const DistanceValue> obs, std::span<const double> edges,
                                bool open_last) {
  if (edges.size() < 2) throw ConfigError("at least two bin edges are required");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw ConfigError("bin edges must be strictly ascending");

  const std::size_t nbins = edges.size() - 1 + (open_last ? 1 : 0);
  std::vector<std::vector<double>> members(nbins);
  BinSummary out;
  for (const auto& o : obs) {
    if (o.distance < edges.front()) {
      ++out.outside;
      continue;
    }
    // First edge strictly greater than the distance closes the bin.
    const auto it = std::upper_bound(edges.begin(), edges.end(), o.distance);
    const auto k = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (k < nbins)
      members[k].push_back(o.value);
    else
      ++out.outside;
  }

  out.bins.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    auto& b = out.bins[k];
    b.lo = edges[k];
    b.hi = k + 1 < edges.size() ? edges[k + 1] : std::numeric_limits<double>::infinity();
    auto& v = members[k];
    b.n = v.size();
    if (v.empty()) continue;
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    b.mean = mean;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    b.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      b.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

}  // namespace dscope::geo
