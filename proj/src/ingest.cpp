#include "dscope/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dscope/error.hpp"

namespace dscope::ingest {

namespace {

constexpr std::size_t kMaxReportedMalformed = 20;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  if (b == 0 && s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
      static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF)
    b = 3;  // UTF-8 BOM
  return s.substr(b);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = strip(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
  const std::string t = strip(s);
  if (t.empty()) return false;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && p == t.data() + t.size();
}

bool parse_period(const std::string& s, Schema schema) {
  int y = 0, m = 0, d = 1;
  if (schema == Schema::monitor) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) || !parse_int(s.substr(8, 2), d))
      return false;
  } else {
    if (s.size() != 7 || s[4] != '-') return false;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m)) return false;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  return ymd.ok();
}

std::string year_of(const std::string& period) { return period.substr(0, 4); }

bool in_range(double lat, double lon) {
  return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

std::vector<std::string> required_columns(Schema schema) {
  return split_csv(schema == Schema::monitor ? kMonitorHeader : kCellHeader);
}

const std::set<std::string>& optional_columns() {
  static const std::set<std::string> s{"state", "wind_speed", "wind_dir"};
  return s;
}

// Linear-interpolation quantile of an unsorted pool.
// Nearest-rank (inverted CDF) quantile: the smallest value with at least a
// share q of the pool at or below it.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

void sort_records(std::vector<ObservationRecord>& r) {
  std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
    if (a.obs_id != b.obs_id) return a.obs_id < b.obs_id;
    return a.period < b.period;
  });
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

Schema parse_schema(const std::string& s) {
  if (s == "monitor") return Schema::monitor;
  if (s == "cell") return Schema::cell;
  throw ConfigError("unknown schema '" + s + "'");
}

std::string to_string(Schema s) { return s == Schema::monitor ? "monitor" : "cell"; }

void validate(const FilterPolicy& p) {
  auto frac = [](double x, const char* name) {
    if (!(x > 0.0 && x <= 1.0)) throw ConfigError(std::string(name) + " must be in (0, 1]");
  };
  frac(p.min_coverage, "min_coverage");
  frac(p.min_qa, "min_qa");
  frac(p.trim_quantile, "trim_quantile");
  if (p.min_obs_per_period < 0) throw ConfigError("min_obs_per_period must be >= 0");
  if (p.trim_threshold && !std::isfinite(*p.trim_threshold))
    throw ConfigError("trim_threshold must be finite");
}

LoadResult parse_observations(std::istream& in, Schema schema) {
  LoadResult res;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty observation file");
  const auto header = split_csv(strip(line));
  const auto required = required_columns(schema);
  if (header.size() < required.size() ||
      !std::equal(required.begin(), required.end(), header.begin(),
                  [](const std::string& a, const std::string& b) { return a == strip(b); }))
    throw InputError("header does not match the " + to_string(schema) + " schema; expected '" +
                     (schema == Schema::monitor ? kMonitorHeader : kCellHeader) + "'");

  int col_state = -1, col_ws = -1, col_wd = -1;
  for (std::size_t c = required.size(); c < header.size(); ++c) {
    const std::string name = strip(header[c]);
    if (!optional_columns().count(name)) throw InputError("unknown column '" + name + "'");
    if (name == "state") col_state = int(c);
    if (name == "wind_speed") col_ws = int(c);
    if (name == "wind_dir") col_wd = int(c);
  }

  auto& audit = res.audit;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    ++audit.input_rows;
    const auto f = split_csv(line);
    auto bad = [&](const std::string& why) {
      ++audit.malformed;
      if (audit.malformed_lines.size() < kMaxReportedMalformed)
        audit.malformed_lines.push_back("line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != header.size()) {
      bad("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
      continue;
    }
    ObservationRecord r;
    r.obs_id = strip(f[0]);
    if (r.obs_id.empty()) {
      bad("empty id");
      continue;
    }
    if (!parse_double(f[1], r.location.lat) || !parse_double(f[2], r.location.lon) ||
        !in_range(r.location.lat, r.location.lon)) {
      bad("invalid coordinates");
      continue;
    }
    r.period = strip(f[3]);
    if (!parse_period(r.period, schema)) {
      bad("invalid period '" + r.period + "'");
      continue;
    }
    if (!parse_double(f[4], r.value)) {
      bad("invalid value");
      continue;
    }
    if (schema == Schema::cell) {
      int n = 0;
      if (!parse_int(f[5], n) || n < 0) {
        bad("invalid n_obs");
        continue;
      }
      r.n_within_period = n;
      if (!strip(f[6]).empty()) {
        double q = 0.0;
        if (!parse_double(f[6], q) || q < 0.0 || q > 1.0) {
          bad("invalid qa");
          continue;
        }
        r.qa = q;
      }
    }
    if (col_state >= 0) r.region_tag = strip(f[col_state]);
    double w = 0.0;
    if (col_ws >= 0 && !strip(f[col_ws]).empty()) {
      if (!parse_double(f[col_ws], w) || w < 0.0) {
        bad("invalid wind_speed");
        continue;
      }
      r.wind_speed = w;
    }
    if (col_wd >= 0 && !strip(f[col_wd]).empty()) {
      if (!parse_double(f[col_wd], w)) {
        bad("invalid wind_dir");
        continue;
      }
      r.wind_dir = w;
    }
    res.records.push_back(std::move(r));
  }

  if (audit.input_rows > 0 && 2 * audit.malformed > audit.input_rows)
    throw InputError("more than half of the rows are malformed (" + std::to_string(audit.malformed) +
                     " of " + std::to_string(audit.input_rows) + ")");
  sort_records(res.records);
  audit.retained = res.records.size();
  return res;
}

LoadResult apply_filters(std::vector<ObservationRecord> records, Schema schema,
                         const FilterPolicy& policy) {
  validate(policy);
  LoadResult res;
  res.resolved_policy = policy;
  auto& audit = res.audit;
  audit.input_rows = records.size();

  if (policy.drop_negative) {
    const auto it = std::stable_partition(records.begin(), records.end(),
                                          [](const auto& r) { return r.value >= 0.0; });
    audit.negative = static_cast<std::size_t>(records.end() - it);
    records.erase(it, records.end());
  }

  if (!records.empty()) {
    double cutoff = 0.0;
    if (policy.trim_threshold) {
      cutoff = *policy.trim_threshold;
    } else {
      std::vector<double> pool;
      pool.reserve(records.size());
      for (const auto& r : records) pool.push_back(r.value);
      cutoff = quantile(std::move(pool), policy.trim_quantile);
    }
    audit.trim_threshold = cutoff;
    res.resolved_policy.trim_threshold = cutoff;
    const auto it = std::stable_partition(records.begin(), records.end(),
                                          [&](const auto& r) { return r.value <= cutoff; });
    audit.trimmed = static_cast<std::size_t>(records.end() - it);
    records.erase(it, records.end());
  }

  if (schema == Schema::monitor) {
    // Denominator: distinct dates observed anywhere in the data for that year.
    std::map<std::string, std::set<std::string>> days_in_year;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> days_for_id;
    for (const auto& r : records) {
      days_in_year[year_of(r.period)].insert(r.period);
      days_for_id[{r.obs_id, year_of(r.period)}].insert(r.period);
    }
    const auto it = std::stable_partition(records.begin(), records.end(), [&](const auto& r) {
      const auto y = year_of(r.period);
      const double cov = static_cast<double>(days_for_id[{r.obs_id, y}].size()) /
                         static_cast<double>(days_in_year[y].size());
      return cov >= policy.min_coverage;
    });
    audit.coverage = static_cast<std::size_t>(records.end() - it);
    records.erase(it, records.end());
  } else {
    auto it = std::stable_partition(records.begin(), records.end(), [&](const auto& r) {
      return r.n_within_period.value_or(0) >= policy.min_obs_per_period;
    });
    audit.min_obs = static_cast<std::size_t>(records.end() - it);
    records.erase(it, records.end());
    it = std::stable_partition(records.begin(), records.end(),
                               [&](const auto& r) { return !r.qa || *r.qa >= policy.min_qa; });
    audit.qa = static_cast<std::size_t>(records.end() - it);
    records.erase(it, records.end());
  }

  sort_records(records);
  audit.retained = records.size();
  res.records = std::move(records);
  return res;
}

LoadResult load_observations(std::istream& in, Schema schema, const FilterPolicy& policy) {
  validate(policy);
  LoadResult parsed = parse_observations(in, schema);
  LoadResult res = apply_filters(std::move(parsed.records), schema, policy);
  res.audit.input_rows = parsed.audit.input_rows;
  res.audit.malformed = parsed.audit.malformed;
  res.audit.malformed_lines = std::move(parsed.audit.malformed_lines);
  return res;
}

LoadResult load_observations(const std::filesystem::path& path, Schema schema,
                             const FilterPolicy& policy) {
  auto in = open_or_throw(path);
  return load_observations(in, schema, policy);
}

Schema detect_schema(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::string line;
  std::getline(in, line);
  const auto h = strip(line);
  if (h.rfind(kMonitorHeader, 0) == 0) return Schema::monitor;
  if (h.rfind(kCellHeader, 0) == 0) return Schema::cell;
  throw InputError("unrecognized observation header in " + path.string());
}

std::vector<geo::SourceRecord> read_sources(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip(line) != kPlantHeader)
    throw InputError(std::string("plant file header must be '") + kPlantHeader + "'");
  std::vector<geo::SourceRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string where = "plant file line " + std::to_string(lineno);
    if (f.size() != 7) throw InputError(where + ": expected 7 fields");
    geo::SourceRecord s;
    s.source_id = strip(f[0]);
    double so2 = 0.0, nox = 0.0;
    if (s.source_id.empty() || !parse_double(f[1], s.location.lat) ||
        !parse_double(f[2], s.location.lon) || !parse_double(f[3], s.capacity_mw) ||
        !parse_double(f[4], so2) || !parse_double(f[5], nox))
      throw InputError(where + ": malformed field");
    s.emission_rate = so2 + nox;
    s.region_tag = strip(f[6]);
    out.push_back(std::move(s));
  }
  geo::validate(std::span<const geo::SourceRecord>(out));
  return out;
}

std::vector<geo::SourceRecord> read_sources(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_sources(in);
}

void write_sources(std::ostream& out, std::span<const geo::SourceRecord> sources) {
  out << kPlantHeader << '\n';
  for (const auto& s : sources)
    out << s.source_id << ',' << fmt(s.location.lat) << ',' << fmt(s.location.lon) << ','
        << fmt(s.capacity_mw) << ',' << fmt(s.emission_rate) << ",0," << s.region_tag << '\n';
}

void write_observations(std::ostream& out, std::span<const ObservationRecord> records,
                        Schema schema) {
  bool has_state = false, has_ws = false, has_wd = false;
  for (const auto& r : records) {
    has_state = has_state || !r.region_tag.empty();
    has_ws = has_ws || r.wind_speed.has_value();
    has_wd = has_wd || r.wind_dir.has_value();
  }
  out << (schema == Schema::monitor ? kMonitorHeader : kCellHeader);
  if (has_state) out << ",state";
  if (has_ws) out << ",wind_speed";
  if (has_wd) out << ",wind_dir";
  out << '\n';
  for (const auto& r : records) {
    out << r.obs_id << ',' << fmt(r.location.lat) << ',' << fmt(r.location.lon) << ',' << r.period
        << ',' << fmt(r.value);
    if (schema == Schema::cell)
      out << ',' << r.n_within_period.value_or(0) << ',' << (r.qa ? fmt(*r.qa) : std::string());
    if (has_state) out << ',' << r.region_tag;
    if (has_ws) out << ',' << (r.wind_speed ? fmt(*r.wind_speed) : std::string());
    if (has_wd) out << ',' << (r.wind_dir ? fmt(*r.wind_dir) : std::string());
    out << '\n';
  }
}

std::vector<SiteMean> time_average(std::span<const ObservationRecord> records) {
  if (records.empty()) throw ConfigError("time_average needs at least one observation");
  struct Acc {
    SiteMean site;
    double sum = 0.0;
    double wind_sum = 0.0;
    std::size_t wind_n = 0;
    std::set<std::string> periods;
  };
  std::map<std::string, Acc> groups;
  for (const auto& r : records) {
    auto [it, fresh] = groups.try_emplace(r.obs_id);
    auto& a = it->second;
    if (fresh) {
      a.site.obs_id = r.obs_id;
      a.site.location = r.location;
    }
    a.sum += r.value;
    ++a.site.n_periods;
    a.periods.insert(r.period);
    if (a.site.region_tag.empty()) a.site.region_tag = r.region_tag;
    if (r.wind_speed) {
      a.wind_sum += *r.wind_speed;
      ++a.wind_n;
    }
    if (!a.site.wind_dir && r.wind_dir) a.site.wind_dir = r.wind_dir;
  }
  std::vector<SiteMean> out;
  out.reserve(groups.size());
  for (auto& [id, a] : groups) {
    a.site.mean_value = a.sum / static_cast<double>(a.site.n_periods);
    if (a.wind_n) a.site.wind_speed = a.wind_sum / static_cast<double>(a.wind_n);
    a.site.periods.assign(a.periods.begin(), a.periods.end());
    out.push_back(std::move(a.site));
  }
  return out;
}

std::string to_string(RegionClass c) {
  switch (c) {
    case RegionClass::coal_near: return "coal_near";
    case RegionClass::coal_far: return "coal_far";
    case RegionClass::noncoal_near: return "noncoal_near";
    case RegionClass::noncoal_far: return "noncoal_far";
  }
  return "noncoal_far";
}

bool is_coal_state(const std::string& state_code) {
  static const std::array<const char*, 10> coal{"WV", "WY", "KY", "IN", "PA",
                                               "ND", "MT", "OH", "TX", "IL"};
  return std::any_of(coal.begin(), coal.end(), [&](const char* c) { return state_code == c; });
}

RegionClass classify_region(const std::string& state_code, double nearest_distance_km) {
  const bool alpha2 = state_code.size() == 2 && std::isalpha(static_cast<unsigned char>(state_code[0])) &&
                      std::isalpha(static_cast<unsigned char>(state_code[1]));
  if (!alpha2) throw InputError("state code must be two letters, got '" + state_code + "'");
  std::string code = state_code;
  for (auto& ch : code) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  const bool near = nearest_distance_km < kNearFieldKm;
  if (is_coal_state(code)) return near ? RegionClass::coal_near : RegionClass::coal_far;
  return near ? RegionClass::noncoal_near : RegionClass::noncoal_far;
}

}  // namespace dscope::ingest
