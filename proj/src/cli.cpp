#include "dscope/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "dscope/boundary.hpp"
#include "dscope/diagnose.hpp"
#include "dscope/error.hpp"
#include "dscope/parallel.hpp"
#include "dscope/physics.hpp"
#include "dscope/serialize.hpp"
#include "dscope/synth.hpp"

namespace dscope::cli {

namespace fs = std::filesystem;
using json::Json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

double parse_number(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(x))
    throw ConfigError("option '" + key + "' expects a number, got '" + v + "'");
  return x;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t x = 0;
  try {
    if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw ConfigError("option '" + key + "' expects a non-negative integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("option '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> parse_number_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
  if (out.empty()) throw ConfigError("option '" + key + "' is empty");
  return out;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string num(double x) { return std::isfinite(x) ? fmt("%.10g", x) : std::string(); }

std::string opt_num(const Json& v) { return v.is_number() ? num(v.get<double>()) : std::string(); }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory " + p.string() + ": " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  out << text;
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("--") + what + " is required");
  if (!fs::is_regular_file(p)) throw InputError(std::string(what) + " file not found: " + p.string());
}

struct Inputs {
  ingest::LoadResult load;
  ingest::Schema schema = ingest::Schema::monitor;
  std::vector<geo::SourceRecord> sources;
  std::vector<ingest::SiteMean> sites;
  std::vector<estimate::DecayObservation> obs;
};

Inputs load_inputs(const RunConfig& cfg) {
  require_file(cfg.input, "input");
  require_file(cfg.sources, "sources");
  Inputs in;
  in.schema = cfg.schema ? *cfg.schema : ingest::detect_schema(cfg.input);
  in.load = ingest::load_observations(cfg.input, in.schema, cfg.filters);
  if (in.load.records.empty()) throw InputError("no observations survive filtering in " + cfg.input.string());
  in.sources = ingest::read_sources(cfg.sources);
  if (in.sources.empty()) throw InputError("no sources in " + cfg.sources.string());
  in.sites = ingest::time_average(in.load.records);
  in.obs = pipeline::decay_observations(in.sites, in.sources, cfg.weight_mode, cfg.strata);
  return in;
}

estimate::SpecKind primary_spec(const RunConfig& cfg) { return cfg.specs.front(); }

Json decay_or_null(const estimate::RegressionFit& fit) {
  try {
    return json::to_json(estimate::extract_decay(fit));
  } catch (const ConfigError&) {
    return nullptr;
  }
}

Json sensitivity_json(const estimate::DecayEstimate& d, const std::vector<double>& eps) {
  Json arr = Json::array();
  for (const auto& p : boundary::epsilon_sensitivity(d, eps))
    arr.push_back({{"epsilon", p.epsilon}, {"d_star_km", p.d_star ? Json(*p.d_star) : Json(nullptr)}});
  return arr;
}

std::string boundary_line(const boundary::BoundaryEstimate& b) {
  const auto& k = b.kappa_source;
  if (!b.d_star)
    return "framework rejected: kappa_s = " + fmt("%.6g", k.kappa_s) +
           " is not positive, no spatial boundary (d* = N/A)";
  std::string s = "d* = " + fmt("%.1f", *b.d_star) + " km (95% CI " + fmt("%.1f", *b.ci_low) + " to " +
                  fmt("%.1f", *b.ci_high) + ") at epsilon = " + fmt("%g", b.epsilon);
  if (!b.valid) s += "; framework rejected: |t| = " + fmt("%.2f", std::fabs(k.t_stat)) + " < 1.96";
  return s;
}

// Predicted log outcome for plotting, with wind terms at their reference level.
std::optional<double> predict_log(const Json& fit, double d) {
  if (!fit.is_object() || !fit.contains("coefficients")) return std::nullopt;
  const std::string spec = fit.at("spec").get<std::string>();
  double y = 0.0;
  for (const auto& [name, v] : fit.at("coefficients").items()) {
    const double c = v.get<double>();
    if (name == "intercept") y += c;
    else if (name == "distance" || name == "distance_downwind") y += c * d;
    else if (name == "distance_sq") y += c * d * d;
    else if (name == "log_distance") y += c * std::log(d);
  }
  if (spec == "log_linear") y -= std::log(d);
  if (spec == "geometric") y -= 2.0 * std::log(d);
  return y;
}

struct Point {
  double distance;
  double outcome;
};

std::vector<Point> read_decay_points(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  std::vector<Point> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() < 3) throw InputError("malformed row in " + p.string());
    out.push_back({parse_number("distance_km", f[1]), parse_number("outcome", f[2])});
  }
  return out;
}

std::optional<Json> read_optional(const fs::path& p) {
  if (!fs::is_regular_file(p)) return std::nullopt;
  return json::read_file(p);
}

}  // namespace

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [raw, v] : kv) {
    const std::string k = normalize_key(raw);
    if (k == "input") cfg.input = v;
    else if (k == "sources") cfg.sources = v;
    else if (k == "out") cfg.out = v;
    else if (k == "spec") {
      cfg.specs = estimate::parse_spec_list(v);
      if (cfg.specs.empty()) throw ConfigError("spec list is empty");
    } else if (k == "epsilon") cfg.epsilon = parse_number(k, v);
    else if (k == "epsilons") cfg.epsilons = parse_number_list(k, v);
    else if (k == "strata") cfg.strata = pipeline::parse_strata(v);
    else if (k == "seed") cfg.seed = parse_unsigned(k, v);
    else if (k == "weight_mode") cfg.weight_mode = geo::parse_weight_mode(v);
    else if (k == "schema") cfg.schema = ingest::parse_schema(v);
    else if (k == "placebo_seeds") cfg.placebo_seeds = parse_unsigned(k, v);
    else if (k == "threads") cfg.threads = static_cast<int>(parse_unsigned(k, v));
    else if (k == "min_coverage") cfg.filters.min_coverage = parse_number(k, v);
    else if (k == "min_obs_per_period") cfg.filters.min_obs_per_period = static_cast<int>(parse_unsigned(k, v));
    else if (k == "min_qa") cfg.filters.min_qa = parse_number(k, v);
    else if (k == "trim_quantile") cfg.filters.trim_quantile = parse_number(k, v);
    else if (k == "drop_negative") cfg.filters.drop_negative = parse_bool(k, v);
    else throw ConfigError("unknown option '" + raw + "'");
  }
}

void validate(const RunConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  for (double e : cfg.epsilons)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("every sensitivity epsilon must lie in (0, 1)");
  if (cfg.specs.empty()) throw ConfigError("no regression specification requested");
  ingest::validate(cfg.filters);
  if (!cfg.input.empty() && !fs::exists(cfg.input)) throw InputError("input not found: " + cfg.input.string());
  if (!cfg.sources.empty() && !fs::exists(cfg.sources))
    throw InputError("sources not found: " + cfg.sources.string());
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.input, "input");
  auto spec = json::scenario_from_json(json::read_file(cfg.input), cfg.input.parent_path());
  if (cfg.seed) spec.seed = *cfg.seed;
  const auto data = synth::generate(spec);
  ensure_dir(cfg.out);

  std::ostringstream obs, src;
  ingest::write_observations(obs, data.observations, ingest::Schema::monitor);
  ingest::write_sources(src, data.sources);
  write_text(cfg.out / "observations.csv", obs.str());
  write_text(cfg.out / "sources.csv", src.str());

  Json truth = json::to_json(data.truth);
  truth["weak_signal"] = data.weak_signal;
  truth["regime"] = json::to_json(physics::dimensionless(spec.params));
  truth["scenario"] = json::to_json(spec);
  json::write_file(cfg.out / "truth.json", truth);

  log << "simulated " << data.observations.size() << " observations from " << data.sources.size()
      << " sources; true kappa_s = " << fmt("%.6g", data.truth.kappa_s) << " 1/km\n";
  if (data.weak_signal) log << "warning: every source lies beyond 10/kappa_s of the region; signal is weak\n";
  return kExitOk;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& log) {
  const auto in = load_inputs(cfg);
  ensure_dir(cfg.out);
  const auto spec = primary_spec(cfg);

  Json j;
  j["input"] = cfg.input.filename().string();
  j["schema"] = ingest::to_string(in.schema);
  j["weight_mode"] = geo::to_string(cfg.weight_mode);
  j["strata"] = pipeline::to_string(cfg.strata);
  j["audit"] = json::to_json(in.load.audit);
  j["n_sites"] = in.sites.size();

  const auto fit = estimate::fit_spec(in.obs, spec);
  Json primary = json::to_json(fit);
  primary["decay"] = decay_or_null(fit);
  j["primary"] = primary;

  if (cfg.specs.size() >= 2) {
    j["comparison"] = json::to_json(estimate::compare_specs(in.obs, cfg.specs));
  }
  if (cfg.strata != pipeline::StrataMode::none) {
    const auto labels = pipeline::strata_labels(cfg.strata);
    Json arr = Json::array();
    for (const auto& s : estimate::stratified_decay(in.obs, labels, spec)) arr.push_back(json::to_json(s));
    j["by_stratum"] = arr;
  }
  json::write_file(cfg.out / "fits.json", j);

  std::ostringstream pts;
  pts << "id,distance_km,outcome,stratum\n";
  for (const auto& o : in.obs)
    pts << o.id << ',' << fmt("%.17g", o.distance) << ',' << fmt("%.17g", o.outcome) << ',' << o.stratum << '\n';
  write_text(cfg.out / "decay_points.csv", pts.str());

  log << "fitted " << estimate::to_string(spec) << " on " << fit.n << " sites";
  if (const auto& d = primary["decay"]; d.is_object())
    log << ": kappa_s = " << fmt("%.6g", d.at("kappa_s").get<double>())
        << " (se " << fmt("%.3g", d.at("se").get<double>()) << ")";
  log << '\n';
  if (!in.load.audit.empty()) log << "filters dropped " << in.load.audit.dropped() << " rows\n";
  return kExitOk;
}

int cmd_bound(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.input, "input");
  const Json in = json::read_file(cfg.input);
  estimate::DecayEstimate decay;
  try {
    if (in.contains("primary")) {
      const auto& d = in.at("primary").at("decay");
      if (!d.is_object()) throw ConfigError("fit file has no decay estimate");
      decay = json::decay_from_json(d);
    } else {
      decay = json::decay_from_json(in);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed decay input: ") + e.what());
  }
  ensure_dir(cfg.out);

  const auto b = boundary::spatial_boundary(decay, cfg.epsilon);
  Json j;
  j["boundary"] = json::to_json(b);
  j["verdict"] = b.valid ? "applies" : "rejected";
  j["sensitivity"] = sensitivity_json(decay, cfg.epsilons);
  if (in.contains("by_stratum")) {
    Json arr = Json::array();
    for (const auto& s : in.at("by_stratum")) {
      if (!s.contains("decay") || !s.at("decay").is_object()) continue;
      arr.push_back(json::to_json(boundary::spatial_boundary(json::decay_from_json(s.at("decay")), cfg.epsilon)));
    }
    j["by_stratum"] = arr;
  }
  json::write_file(cfg.out / "boundary.json", j);
  log << boundary_line(b) << '\n';
  return kExitOk;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.input, "input");
  const auto spec = primary_spec(cfg);

  // A JSON input carries already-estimated strata: only the validity grid applies.
  if (cfg.input.extension() == ".json") {
    const Json in = json::read_file(cfg.input);
    std::vector<diagnose::PrecomputedStratum> strata;
    try {
      for (const auto& s : in.at("strata"))
        strata.push_back({s.at("data_source").get<std::string>(), s.at("stratum").get<std::string>(),
                          s.at("n").get<std::size_t>(), s.at("kappa_s").get<double>(), s.at("se").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed strata file: ") + e.what());
    }
    for (const auto& s : strata)
      if (!(s.se >= 0.0)) throw ConfigError("stratum '" + s.stratum + "' has a negative se");
    ensure_dir(cfg.out);
    const auto rep = diagnose::assess_precomputed(strata, cfg.epsilon);
    json::write_file(cfg.out / "validity.json", json::to_json(rep));
    write_text(cfg.out / "validity.txt", diagnose::render_grid(rep));
    log << diagnose::render_grid(rep);
    return kExitOk;
  }

  const auto in = load_inputs(cfg);
  ensure_dir(cfg.out);
  const auto labels = pipeline::strata_labels(cfg.strata);
  const auto rep = diagnose::validity_assessment(in.obs, labels, spec, cfg.epsilon, cfg.input.stem().string());
  json::write_file(cfg.out / "validity.json", json::to_json(rep));
  write_text(cfg.out / "validity.txt", diagnose::render_grid(rep));

  Json placebo;
  try {
    const auto bbox = pipeline::observation_bbox(in.sites);
    const auto p = diagnose::placebo_test(in.sites, in.sources, bbox, cfg.placebo_seeds, spec, cfg.seed.value_or(0));
    placebo = json::to_json(p);
    log << "placebo: rejection rate " << fmt("%.3f", p.rejection_rate) << " over " << p.n_seeds
        << " seeds; actual kappa_s " << fmt("%.6g", p.actual.kappa_s) << " vs placebo mean "
        << fmt("%.6g", p.placebo_mean_kappa) << '\n';
  } catch (const ConfigError& e) {
    placebo = {{"skipped", e.what()}};
  } catch (const SingularDesignError& e) {
    placebo = {{"skipped", e.what()}};
  }
  json::write_file(cfg.out / "placebo.json", placebo);

  const std::vector<geo::WeightMode> modes{geo::WeightMode::nearest, geo::WeightMode::capacity,
                                           geo::WeightMode::emissions};
  json::write_file(cfg.out / "robustness.json",
                   json::to_json(diagnose::distance_measure_robustness(in.sites, in.sources, spec, modes,
                                                                      cfg.epsilon)));

  const auto yearly = pipeline::yearly_averages(in.load.records);
  const auto yearly_obs = pipeline::decay_observations(yearly, in.sources, cfg.weight_mode,
                                                       pipeline::StrataMode::none);
  std::set<std::string> years;
  for (const auto& o : yearly_obs) years.insert(o.period);
  const std::vector<std::string> periods(years.begin(), years.end());
  json::write_file(cfg.out / "temporal.json",
                   json::to_json(estimate::temporal_splits(yearly_obs, periods, spec,
                                                           diagnose::min_stratum_size(spec))));

  log << diagnose::render_grid(rep);
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = cfg.input.empty() ? cfg.out : cfg.input;
  if (!fs::is_directory(dir)) throw InputError("report input directory not found: " + dir.string());
  const auto fits = read_optional(dir / "fits.json");
  if (!fits) throw InputError("missing " + (dir / "fits.json").string() + "; run estimate first");
  const auto bnd = read_optional(dir / "boundary.json");
  const auto validity = read_optional(dir / "validity.json");
  const auto placebo = read_optional(dir / "placebo.json");
  const auto robust = read_optional(dir / "robustness.json");
  ensure_dir(cfg.out);

  const Json& primary = fits->at("primary");
  const Json& decay = primary.at("decay");
  std::vector<std::string> notes;
  std::ostringstream txt;

  Json rep;
  rep["input"] = fits->value("input", "");
  rep["n_sites"] = fits->value("n_sites", 0);
  rep["primary_spec"] = primary.at("spec");
  rep["decay"] = decay;

  Json ranking = Json::array();
  if (fits->contains("comparison"))
    for (const auto& f : fits->at("comparison").at("fits"))
      ranking.push_back({{"spec", f.at("spec")},
                         {"aic", f.at("aic")},
                         {"delta_aic", f.at("delta_aic")},
                         {"kappa_s", f.at("decay").is_object() ? f.at("decay").at("kappa_s") : Json(nullptr)}});
  rep["ranking"] = ranking;

  std::optional<estimate::DecayEstimate> d;
  if (decay.is_object()) d = json::decay_from_json(decay);
  if (bnd) {
    rep["boundary"] = bnd->at("boundary");
    rep["verdict"] = bnd->at("verdict");
  } else if (d) {
    const auto b = boundary::spatial_boundary(*d, cfg.epsilon);
    rep["boundary"] = json::to_json(b);
    rep["verdict"] = b.valid ? "applies" : "rejected";
  }

  if (validity) {
    rep["validity"] = *validity;
    for (const auto& r : validity->at("rows"))
      if (r.at("insufficient").get<bool>())
        notes.push_back("stratum " + r.at("stratum").get<std::string>() + " (" +
                        r.at("data_source").get<std::string>() + "): insufficient data, " +
                        r.at("note").get<std::string>());
  }
  if (placebo) {
    Json p = *placebo;
    p.erase("placebo");
    rep["placebo"] = p;
    if (placebo->contains("skipped")) notes.push_back("placebo skipped: " + placebo->at("skipped").get<std::string>());
  }
  if (robust) rep["robustness"] = *robust;
  rep["notes"] = notes;
  json::write_file(cfg.out / "report.json", rep);

  // Plain-text summary.
  txt << "Spatial decay report\n====================\n\n";
  txt << "input: " << rep["input"].get<std::string>() << "  sites: " << rep["n_sites"].get<std::size_t>() << "\n";
  txt << "primary specification: " << primary.at("spec").get<std::string>() << "\n";
  if (d)
    txt << "kappa_s = " << fmt("%.6g", d->kappa_s) << " 1/km, se = " << fmt("%.3g", d->se)
        << ", t = " << fmt("%.2f", d->t_stat) << "\n";
  else
    txt << "kappa_s: not estimable\n";
  if (rep.contains("boundary")) {
    const Json& b = rep["boundary"];
    txt << "epsilon = " << fmt("%g", b.at("epsilon").get<double>()) << ": d* = "
        << (b.at("d_star_km").is_number() ? fmt("%.1f", b.at("d_star_km").get<double>()) + " km" : "N/A")
        << ", verdict: " << rep["verdict"].get<std::string>() << "\n";
  }
  if (!ranking.empty()) {
    txt << "\nSpecification ranking (AIC)\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %14s %10s %12s\n", "spec", "aic", "delta", "kappa_s");
    txt << line;
    for (const auto& r : ranking) {
      std::snprintf(line, sizeof line, "%-18s %14.4f %10.4f %12s\n", r.at("spec").get<std::string>().c_str(),
                    r.at("aic").get<double>(), r.at("delta_aic").get<double>(),
                    r.at("kappa_s").is_number() ? fmt("%+.6f", r.at("kappa_s").get<double>()).c_str() : "-");
      txt << line;
    }
  }
  if (validity) txt << "\nValidity grid\n" << diagnose::render_grid(json::validity_from_json(*validity));
  if (placebo && !placebo->contains("skipped"))
    txt << "\nPlacebo: rejection rate " << fmt("%.3f", placebo->at("rejection_rate").get<double>()) << " over "
        << placebo->at("n_seeds").get<std::size_t>() << " seeds; difference "
        << fmt("%.6g", placebo->at("difference").get<double>()) << " (se "
        << fmt("%.3g", placebo->at("difference_se").get<double>()) << ")\n";
  if (robust)
    txt << "Distance-measure spread: " << fmt("%.4f", robust->at("max_relative_spread").get<double>()) << "\n";
  if (!notes.empty()) {
    txt << "\nNotes\n";
    for (const auto& n : notes) txt << "- " << n << "\n";
  }
  write_text(cfg.out / "report.txt", txt.str());

  // decay_curve.csv: binned observed means with the fitted curve at bin midpoints.
  {
    std::ostringstream csv;
    csv << "distance_lo_km,distance_hi_km,n,mean_outcome,fitted_outcome\n";
    const fs::path pts_path = dir / "decay_points.csv";
    if (fs::is_regular_file(pts_path)) {
      const auto pts = read_decay_points(pts_path);
      std::vector<geo::DistanceValue> dv;
      double dmax = 0.0;
      for (const auto& p : pts) {
        dv.push_back({p.distance, p.outcome});
        dmax = std::max(dmax, p.distance);
      }
      if (!dv.empty() && dmax > 0.0) {
        constexpr int kBins = 20;
        std::vector<double> edges;
        for (int k = 0; k < kBins; ++k) edges.push_back(dmax * k / kBins);
        const auto summary = geo::distance_bin_summary(dv, edges, true);
        for (const auto& b : summary.bins) {
          const double mid = std::isfinite(b.hi) ? 0.5 * (b.lo + b.hi) : b.lo + 0.5 * dmax / kBins;
          const auto ly = predict_log(primary, std::max(mid, geo::kMinDistanceKm));
          csv << num(b.lo) << ',' << (std::isfinite(b.hi) ? num(b.hi) : std::string("inf")) << ',' << b.n << ','
              << (b.mean ? num(*b.mean) : std::string()) << ',' << (ly ? num(std::exp(*ly)) : std::string())
              << '\n';
        }
      }
    }
    write_text(cfg.out / "decay_curve.csv", csv.str());
  }

  // kappa_by_stratum.csv from the validity grid, or the per-stratum fits.
  {
    std::ostringstream csv;
    csv << "data_source,stratum,n,kappa_s,se,ci_low,ci_high,framework_applies,d_star_km\n";
    auto row = [&](const std::string& src, const std::string& stratum, std::size_t n, const Json& k,
                   const Json& se, const std::string& applies, const Json& dstar) {
      std::string lo, hi;
      if (k.is_number() && se.is_number()) {
        lo = num(k.get<double>() - boundary::kZ95 * se.get<double>());
        hi = num(k.get<double>() + boundary::kZ95 * se.get<double>());
      }
      csv << src << ',' << stratum << ',' << n << ',' << opt_num(k) << ',' << opt_num(se) << ',' << lo << ','
          << hi << ',' << applies << ',' << opt_num(dstar) << '\n';
    };
    if (validity) {
      for (const auto& r : validity->at("rows"))
        row(r.at("data_source").get<std::string>(), r.at("stratum").get<std::string>(),
            r.at("n").get<std::size_t>(), r.at("kappa_s"), r.at("se"),
            r.at("insufficient").get<bool>() ? "n/a" : (r.at("framework_applies").get<bool>() ? "yes" : "no"),
            r.at("d_star_km"));
    } else if (fits->contains("by_stratum")) {
      for (const auto& s : fits->at("by_stratum")) {
        const Json& dd = s.at("decay");
        const Json none;
        row(fits->value("input", ""), s.at("label").get<std::string>(), s.at("n").get<std::size_t>(),
            dd.is_object() ? dd.at("kappa_s") : none, dd.is_object() ? dd.at("se") : none, "", none);
      }
    }
    write_text(cfg.out / "kappa_by_stratum.csv", csv.str());
  }

  // epsilon_sensitivity.csv
  {
    std::ostringstream csv;
    csv << "epsilon,d_star_km\n";
    Json sens;
    if (bnd && bnd->contains("sensitivity")) sens = bnd->at("sensitivity");
    else if (d) sens = sensitivity_json(*d, cfg.epsilons);
    if (sens.is_array())
      for (const auto& p : sens) csv << num(p.at("epsilon").get<double>()) << ',' << opt_num(p.at("d_star_km")) << '\n';
    write_text(cfg.out / "epsilon_sensitivity.csv", csv.str());
  }

  log << "report written to " << cfg.out.string() << '\n';
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"decayscope: spatial decay boundaries around point sources"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::map<std::string, std::string> flags;
  std::string config_path;
  auto flag = [&](const std::string& name, const std::string& help) {
    app.add_option_function<std::string>(
        "--" + name, [&flags, key = normalize_key(name)](const std::string& v) { flags[key] = v; }, help);
  };
  flag("input", "input file (scenario JSON, observations CSV, fits JSON or report directory)");
  flag("sources", "plant/source CSV");
  flag("spec", "comma-separated specifications; the first drives boundaries and diagnostics");
  flag("epsilon", "boundary threshold fraction in (0, 1)");
  flag("epsilons", "comma-separated epsilon grid for the sensitivity table");
  flag("strata", "none | region | near_far");
  flag("seed", "random seed (simulate, placebo)");
  flag("weight-mode", "nearest | capacity | emissions");
  flag("out", "output directory");
  flag("schema", "monitor | cell (sniffed from the header by default)");
  flag("placebo-seeds", "number of placebo replicates");
  flag("threads", "OpenMP threads (0 = default)");
  flag("min-coverage", "monitor filter: minimum share of days observed per year");
  flag("min-obs-per-period", "cell filter: minimum retrievals per cell-month");
  flag("min-qa", "cell filter: minimum QA value");
  flag("trim-quantile", "drop values above this global quantile (1 keeps all)");
  flag("drop-negative", "drop negative values (true/false)");
  app.add_option("--config", config_path, "flat key = value file; its values override flags");

  RunConfig cfg;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "generate a synthetic dataset from a scenario JSON"},
      {"estimate", "fit decay specifications to observations"},
      {"bound", "spatial boundary d* with CI and epsilon sensitivity"},
      {"diagnose", "validity grid, placebo, distance-measure and temporal robustness"},
      {"report", "consolidated report from a work directory"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty())
      for (const auto& [k, v] : read_config_file(config_path)) flags[k] = v;
    apply_overrides(cfg, flags);
    validate(cfg);
    if (cfg.threads > 0) set_threads(cfg.threads);

    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "estimate") return cmd_estimate(cfg, out);
    if (cfg.command == "bound") return cmd_bound(cfg, out);
    if (cfg.command == "diagnose") return cmd_diagnose(cfg, out);
    if (cfg.command == "report") return cmd_report(cfg, out);
    err << "error: unknown command\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SingularDesignError& e) {
    err << "estimation error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    // Structurally valid JSON with the wrong shape.
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace dscope::cli
