#include "dscope/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "dscope/error.hpp"

namespace dscope::json {

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

double number(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError(std::string("missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

double number_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be numeric");
  return j.at(key).get<double>();
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const char* what) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(std::string("unknown key '") + k + "' in " + what);
}

Json sources_to_json(const std::vector<geo::SourceRecord>& sources) {
  Json arr = Json::array();
  for (const auto& s : sources)
    arr.push_back({{"id", s.source_id},
                   {"lat", s.location.lat},
                   {"lon", s.location.lon},
                   {"capacity_mw", s.capacity_mw},
                   {"emission_rate", s.emission_rate},
                   {"state", s.region_tag}});
  return arr;
}

}  // namespace

Json to_json(const estimate::RegressionFit& fit) {
  Json coef = Json::object(), se = Json::object();
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    coef[fit.names[k]] = fit.coefficients(static_cast<Eigen::Index>(k));
    se[fit.names[k]] = fit.robust_se(static_cast<Eigen::Index>(k));
  }
  Json cov = Json::array();
  for (Eigen::Index i = 0; i < fit.cov.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < fit.cov.cols(); ++j) row.push_back(fit.cov(i, j));
    cov.push_back(row);
  }
  return {{"spec", estimate::to_string(fit.spec)},
          {"n", fit.n},
          {"coefficients", coef},
          {"robust_se", se},
          {"cov", cov},
          {"rss", fit.rss},
          {"r2", fit.r2},
          {"aic", fit.aic}};
}

Json to_json(const estimate::DecayEstimate& d) {
  return {{"kappa_s", d.kappa_s}, {"se", d.se}, {"t_stat", d.t_stat}, {"n", d.n}, {"stratum", d.stratum}};
}

Json to_json(const estimate::SpecComparison& c) {
  Json ranked = Json::array();
  for (const auto& r : c.ranked) {
    Json f = to_json(r.fit);
    f["delta_aic"] = r.delta_aic;
    try {
      f["decay"] = to_json(estimate::extract_decay(r.fit));
    } catch (const ConfigError&) {
      f["decay"] = nullptr;
    }
    ranked.push_back(std::move(f));
  }
  Json skipped = Json::array();
  for (const auto& [spec, why] : c.skipped) skipped.push_back({{"spec", estimate::to_string(spec)}, {"reason", why}});
  return {{"fits", ranked}, {"skipped", skipped}};
}

Json to_json(const estimate::StratumDecay& s) {
  Json j = {{"label", s.label}, {"n", s.n}};
  j["decay"] = s.decay ? to_json(*s.decay) : Json(nullptr);
  if (!s.skip_reason.empty()) j["skip_reason"] = s.skip_reason;
  return j;
}

Json to_json(const estimate::TemporalResult& t) {
  Json per = Json::array();
  for (const auto& p : t.per_period) per.push_back(to_json(p));
  return {{"per_period", per},
          {"pooled", t.pooled ? to_json(*t.pooled) : Json(nullptr)},
          {"max_pairwise_diff", t.max_pairwise_diff}};
}

Json to_json(const estimate::AttEstimate& a) {
  return {{"att", a.att},
          {"se", a.se},
          {"threshold_km", a.threshold_km},
          {"scale", estimate::to_string(a.scale)},
          {"n_near", a.n_near},
          {"n_far", a.n_far}};
}

Json to_json(const boundary::BoundaryEstimate& b) {
  return {{"epsilon", b.epsilon},
          {"d_star_km", opt(b.d_star)},
          {"ci_low_km", opt(b.ci_low)},
          {"ci_high_km", opt(b.ci_high)},
          {"valid", b.valid},
          {"kappa_source", to_json(b.kappa_source)}};
}

Json to_json(const diagnose::ValidityReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"data_source", row.data_source},
                    {"stratum", row.stratum},
                    {"n", row.n},
                    {"kappa_s", opt(row.kappa_s)},
                    {"se", opt(row.se)},
                    {"t_stat", opt(row.t_stat)},
                    {"significant", row.significant},
                    {"framework_applies", row.framework_applies},
                    {"insufficient", row.insufficient},
                    {"d_star_km", opt(row.d_star)},
                    {"note", row.note}});
  Json cov = Json::array();
  for (const auto& c : r.coverage)
    cov.push_back({{"data_source", c.data_source},
                   {"n_applicable", c.n_applicable},
                   {"n_total", c.n_total},
                   {"fraction", c.fraction}});
  return {{"epsilon", r.epsilon}, {"rows", rows}, {"coverage", cov}};
}

Json to_json(const diagnose::PlaceboResult& p) {
  Json kappas = Json::array();
  for (const auto& d : p.placebo) kappas.push_back({{"kappa_s", d.kappa_s}, {"se", d.se}, {"t_stat", d.t_stat}});
  return {{"actual", to_json(p.actual)},
          {"n_seeds", p.n_seeds},
          {"rejection_rate", p.rejection_rate},
          {"placebo_mean_kappa", p.placebo_mean_kappa},
          {"placebo_mean_se", p.placebo_mean_se},
          {"difference", p.difference},
          {"difference_se", p.difference_se},
          {"placebo", kappas}};
}

Json to_json(const diagnose::RobustnessResult& r) {
  Json modes = Json::array();
  for (const auto& m : r.modes) {
    Json j = {{"mode", geo::to_string(m.mode)}};
    j["decay"] = m.decay ? to_json(*m.decay) : Json(nullptr);
    j["boundary"] = m.boundary ? to_json(*m.boundary) : Json(nullptr);
    if (!m.note.empty()) j["note"] = m.note;
    modes.push_back(std::move(j));
  }
  return {{"modes", modes}, {"max_relative_spread", r.max_relative_spread}};
}

Json to_json(const ingest::FilterAudit& a) {
  return {{"input_rows", a.input_rows},
          {"malformed", a.malformed},
          {"negative", a.negative},
          {"trimmed", a.trimmed},
          {"coverage", a.coverage},
          {"min_obs", a.min_obs},
          {"qa", a.qa},
          {"retained", a.retained},
          {"trim_threshold", opt(a.trim_threshold)},
          {"malformed_lines", a.malformed_lines}};
}

Json to_json(const physics::PhysicalParams& p) {
  return {{"diffusivity", p.diffusivity},
          {"decay_rate", p.decay_rate},
          {"wind_speed", p.wind_speed},
          {"length_scale", p.length_scale},
          {"viscosity", p.viscosity},
          {"quad_decay", p.quad_decay},
          {"eddy_diffusivity", p.eddy_diffusivity}};
}

Json to_json(const physics::RegimeNumbers& r) {
  return {{"reynolds", r.reynolds},
          {"peclet", r.peclet},
          {"schmidt", r.schmidt},
          {"damkohler", r.damkohler},
          {"verdict", physics::to_string(r.verdict)}};
}

Json to_json(const synth::Truth& t) {
  return {{"kappa_s", t.kappa_s}, {"d_star_km", t.d_star}, {"emission_rates", t.emission_rates}};
}

Json to_json(const BoundingBox& b) {
  return {{"lat_min", b.lat_min}, {"lat_max", b.lat_max}, {"lon_min", b.lon_min}, {"lon_max", b.lon_max}};
}

Json to_json(const synth::ScenarioSpec& s) {
  Json urban = Json::array();
  for (const auto& u : s.urban_centers)
    urban.push_back({{"lat", u.location.lat}, {"lon", u.location.lon}, {"amplitude", u.amplitude}});
  return {{"seed", s.seed},
          {"n_obs", s.n_obs},
          {"noise_sigma", s.noise_sigma},
          {"params", to_json(s.params)},
          {"bbox", to_json(s.bbox)},
          {"sources", sources_to_json(s.sources)},
          {"background", synth::to_string(s.background)},
          {"background_level", s.background_level},
          {"urban_centers", urban},
          {"field", synth::to_string(s.field)},
          {"wind_dir_deg", s.wind_dir_deg},
          {"periods", s.periods}};
}

estimate::DecayEstimate decay_from_json(const Json& j) {
  estimate::DecayEstimate d;
  d.kappa_s = number(j, "kappa_s");
  d.se = number_or(j, "se", 0.0);
  if (d.se < 0.0) throw ConfigError("se must be >= 0");
  d.n = static_cast<std::size_t>(number_or(j, "n", 0.0));
  if (j.contains("stratum") && j.at("stratum").is_string()) d.stratum = j.at("stratum").get<std::string>();
  if (d.se > 0.0)
    d.t_stat = d.kappa_s / d.se;
  else
    d.t_stat = d.kappa_s == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d.kappa_s);
  return d;
}

estimate::RegressionFit fit_from_json(const Json& j) {
  estimate::RegressionFit f;
  f.spec = estimate::parse_spec(j.at("spec").get<std::string>());
  f.n = j.at("n").get<std::size_t>();
  const auto& c = j.at("coefficients");
  const auto& s = j.at("robust_se");
  f.coefficients.resize(static_cast<Eigen::Index>(c.size()));
  f.robust_se.resize(static_cast<Eigen::Index>(c.size()));
  Eigen::Index k = 0;
  for (const auto& [name, v] : c.items()) {
    f.names.push_back(name);
    f.coefficients(k) = v.get<double>();
    f.robust_se(k) = s.at(name).get<double>();
    ++k;
  }
  const auto& cov = j.at("cov");
  f.cov.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) f.cov(a, b) = cov.at(a).at(b).get<double>();
  f.rss = j.at("rss").get<double>();
  f.r2 = j.at("r2").get<double>();
  f.aic = j.at("aic").get<double>();
  return f;
}

physics::PhysicalParams params_from_json(const Json& j) {
  reject_unknown(j,
                 {"diffusivity", "decay_rate", "wind_speed", "length_scale", "viscosity", "quad_decay",
                  "eddy_diffusivity"},
                 "params");
  physics::PhysicalParams p;
  p.diffusivity = number_or(j, "diffusivity", p.diffusivity);
  p.decay_rate = number_or(j, "decay_rate", p.decay_rate);
  p.wind_speed = number_or(j, "wind_speed", p.wind_speed);
  p.length_scale = number_or(j, "length_scale", p.length_scale);
  p.viscosity = number_or(j, "viscosity", p.viscosity);
  p.quad_decay = number_or(j, "quad_decay", p.quad_decay);
  p.eddy_diffusivity = number_or(j, "eddy_diffusivity", p.eddy_diffusivity);
  physics::validate(p);
  return p;
}

BoundingBox bbox_from_json(const Json& j) {
  BoundingBox b{number(j, "lat_min"), number(j, "lat_max"), number(j, "lon_min"), number(j, "lon_max")};
  validate(b);
  return b;
}

diagnose::ValidityReport validity_from_json(const Json& j) {
  diagnose::ValidityReport r;
  r.epsilon = j.at("epsilon").get<double>();
  auto optd = [](const Json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  for (const auto& row : j.at("rows")) {
    diagnose::ValidityRow v;
    v.data_source = row.at("data_source").get<std::string>();
    v.stratum = row.at("stratum").get<std::string>();
    v.n = row.at("n").get<std::size_t>();
    v.kappa_s = optd(row.at("kappa_s"));
    v.se = optd(row.at("se"));
    v.t_stat = optd(row.at("t_stat"));
    v.significant = row.at("significant").get<bool>();
    v.framework_applies = row.at("framework_applies").get<bool>();
    v.insufficient = row.at("insufficient").get<bool>();
    v.d_star = optd(row.at("d_star_km"));
    v.note = row.at("note").get<std::string>();
    r.rows.push_back(std::move(v));
  }
  for (const auto& c : j.at("coverage"))
    r.coverage.push_back({c.at("data_source").get<std::string>(), c.at("n_applicable").get<std::size_t>(),
                          c.at("n_total").get<std::size_t>(), c.at("fraction").get<double>()});
  return r;
}

synth::ScenarioSpec scenario_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  reject_unknown(j,
                 {"seed", "n_obs", "noise_sigma", "params", "bbox", "sources", "sources_csv", "background",
                  "background_level", "urban_centers", "field", "wind_dir_deg", "periods"},
                 "scenario");
  synth::ScenarioSpec s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.n_obs = j.at("n_obs").get<std::size_t>();
    s.noise_sigma = number_or(j, "noise_sigma", 0.0);
    s.params = params_from_json(j.at("params"));
    s.bbox = bbox_from_json(j.at("bbox"));
    if (j.contains("sources_csv")) {
      s.sources = ingest::read_sources(base_dir / j.at("sources_csv").get<std::string>());
    }
    if (j.contains("sources")) {
      for (const auto& src : j.at("sources")) {
        geo::SourceRecord r;
        r.source_id = src.at("id").get<std::string>();
        r.location = {number(src, "lat"), number(src, "lon")};
        r.capacity_mw = number_or(src, "capacity_mw", 0.0);
        r.emission_rate = number(src, "emission_rate");
        r.region_tag = src.value("state", std::string());
        s.sources.push_back(std::move(r));
      }
    }
    s.background = synth::parse_background(j.value("background", std::string("none")));
    s.background_level = number_or(j, "background_level", 0.0);
    if (j.contains("urban_centers"))
      for (const auto& u : j.at("urban_centers"))
        s.urban_centers.push_back({{number(u, "lat"), number(u, "lon")}, number(u, "amplitude")});
    s.field = synth::parse_field_mode(j.value("field", std::string("helmholtz")));
    s.wind_dir_deg = number_or(j, "wind_dir_deg", s.wind_dir_deg);
    if (j.contains("periods")) s.periods = j.at("periods").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  synth::validate(s);
  return s;
}

Json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << dump(j);
}

}  // namespace dscope::json
