#include "dscope/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "dscope/error.hpp"
#include "dscope/pipeline.hpp"
#include "dscope/rng.hpp"
#include "dscope/synth.hpp"

namespace dscope::diagnose {

namespace {

ValidityRow row_from(const std::string& source, const std::string& stratum, std::size_t n,
                     const estimate::DecayEstimate& d, double epsilon) {
  ValidityRow r;
  r.data_source = source;
  r.stratum = stratum;
  r.n = n;
  r.kappa_s = d.kappa_s;
  r.se = d.se;
  r.t_stat = d.t_stat;
  r.significant = std::fabs(d.t_stat) >= kSignificanceZ;
  r.framework_applies = d.kappa_s > 0.0 && r.significant;
  if (r.framework_applies) r.d_star = boundary::spatial_boundary(d, epsilon).d_star;
  if (!r.framework_applies)
    r.note = d.kappa_s > 0.0 ? "positive but insignificant decay" : "non-positive decay";
  return r;
}

void tally(ValidityReport& rep) {
  rep.coverage.clear();
  std::vector<std::string> order;
  std::map<std::string, SourceCoverage> acc;
  for (const auto& r : rep.rows) {
    auto [it, fresh] = acc.try_emplace(r.data_source);
    if (fresh) {
      order.push_back(r.data_source);
      it->second.data_source = r.data_source;
    }
    it->second.n_total += r.n;
    if (r.framework_applies) it->second.n_applicable += r.n;
  }
  for (const auto& s : order) {
    auto c = acc[s];
    c.fraction = c.n_total ? static_cast<double>(c.n_applicable) / static_cast<double>(c.n_total) : 0.0;
    rep.coverage.push_back(c);
  }
}

std::optional<estimate::DecayEstimate> try_decay(std::span<const estimate::DecayObservation> obs,
                                                 estimate::SpecKind spec) {
  try {
    return estimate::extract_decay(estimate::fit_spec(obs, spec));
  } catch (const SingularDesignError&) {
    return std::nullopt;
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

}  // namespace

std::size_t min_stratum_size(estimate::SpecKind spec) {
  return estimate::coefficient_count(spec) + kMinStratumExtra;
}

ValidityReport assess_precomputed(std::span<const PrecomputedStratum> strata, double epsilon) {
  ValidityReport rep;
  rep.epsilon = epsilon;
  for (const auto& s : strata) {
    estimate::DecayEstimate d;
    d.kappa_s = s.kappa_s;
    d.se = s.se;
    d.n = s.n;
    d.stratum = s.stratum;
    d.t_stat = s.se > 0.0 ? s.kappa_s / s.se : (s.kappa_s == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), s.kappa_s));
    rep.rows.push_back(row_from(s.data_source, s.stratum, s.n, d, epsilon));
  }
  tally(rep);
  return rep;
}

ValidityReport validity_assessment(std::span<const estimate::DecayObservation> obs,
                                   std::span<const std::string> strata, estimate::SpecKind spec,
                                   double epsilon, const std::string& data_source) {
  if (strata.empty()) throw ConfigError("no strata configured");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const auto fits = estimate::stratified_decay(obs, strata, spec, min_stratum_size(spec));
  ValidityReport rep;
  rep.epsilon = epsilon;
  for (const auto& f : fits) {
    if (f.decay) {
      rep.rows.push_back(row_from(data_source, f.label, f.n, *f.decay, epsilon));
    } else {
      ValidityRow r;
      r.data_source = data_source;
      r.stratum = f.label;
      r.n = f.n;
      r.insufficient = true;
      r.note = f.skip_reason;
      rep.rows.push_back(r);
    }
  }
  tally(rep);
  return rep;
}

void merge(ValidityReport& into, const ValidityReport& more) {
  into.rows.insert(into.rows.end(), more.rows.begin(), more.rows.end());
  tally(into);
}

std::string render_grid(const ValidityReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-16s %8s %12s %12s %8s  %-9s %10s\n", "data_source", "stratum",
                "n", "kappa_s", "se", "t", "applies", "d_star_km");
  os << line;
  os << std::string(104, '-') << '\n';
  for (const auto& r : report.rows) {
    const std::string k = r.kappa_s ? fmt("%+.5f", *r.kappa_s) : "-";
    const std::string se = r.se ? fmt("%.5f", *r.se) : "-";
    const std::string t = r.t_stat ? fmt("%.2f", *r.t_stat) : "-";
    const char* mark = r.insufficient ? "[?] n/a" : (r.framework_applies ? "[+] yes" : "[x] no");
    const std::string d = r.d_star ? fmt("%.1f", *r.d_star) : "N/A";
    std::snprintf(line, sizeof line, "%-20s %-16s %8zu %12s %12s %8s  %-9s %10s\n", r.data_source.c_str(),
                  r.stratum.c_str(), r.n, k.c_str(), se.c_str(), t.c_str(), mark, d.c_str());
    os << line;
    if (r.insufficient) os << "    note: " << r.note << '\n';
  }
  os << '\n';
  for (const auto& c : report.coverage) {
    std::snprintf(line, sizeof line, "%s: framework applies to %zu of %zu observations (%.1f%%)\n",
                  c.data_source.c_str(), c.n_applicable, c.n_total, 100.0 * c.fraction);
    os << line;
  }
  std::snprintf(line, sizeof line, "epsilon = %g; applies iff kappa_s > 0 and |t| >= %.2f\n", report.epsilon,
                kSignificanceZ);
  os << line;
  return os.str();
}

PlaceboResult placebo_test(std::span<const ingest::SiteMean> sites, std::span<const geo::SourceRecord> sources,
                           const BoundingBox& bbox, std::size_t n_seeds, estimate::SpecKind spec,
                           std::uint64_t master_seed, Execution exec) {
  if (n_seeds < kMinPlaceboSeeds)
    throw ConfigError("placebo test needs at least " + std::to_string(kMinPlaceboSeeds) + " seeds");
  if (sources.empty()) throw ConfigError("source collection is empty");

  PlaceboResult res;
  res.n_seeds = n_seeds;
  {
    const auto obs = pipeline::decay_observations(sites, sources, geo::WeightMode::nearest,
                                                  pipeline::StrataMode::none, exec);
    res.actual = estimate::extract_decay(estimate::fit_spec(obs, spec));
  }

  res.placebo.resize(n_seeds);
  std::vector<char> ok(n_seeds, 0);
  const auto n = static_cast<std::ptrdiff_t>(n_seeds);
  auto run = [&](std::ptrdiff_t k) {
    const auto fake = synth::random_sources(sources.size(), bbox, rng::derive_seed(master_seed, std::uint64_t(k)));
    const auto obs = pipeline::decay_observations(sites, fake, geo::WeightMode::nearest,
                                                  pipeline::StrataMode::none, Execution::serial);
    if (auto d = try_decay(obs, spec)) {
      res.placebo[static_cast<std::size_t>(k)] = *d;
      ok[static_cast<std::size_t>(k)] = 1;
    }
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) run(k);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) run(k);
  }

  std::size_t used = 0, rejected = 0;
  double sum_k = 0.0, sum_se = 0.0;
  for (std::size_t k = 0; k < n_seeds; ++k) {
    if (!ok[k]) continue;
    ++used;
    sum_k += res.placebo[k].kappa_s;
    sum_se += res.placebo[k].se;
    if (std::fabs(res.placebo[k].t_stat) >= kSignificanceZ) ++rejected;
  }
  if (used == 0) throw ConfigError("no placebo replicate produced an estimate");
  res.rejection_rate = static_cast<double>(rejected) / static_cast<double>(used);
  res.placebo_mean_kappa = sum_k / static_cast<double>(used);
  res.placebo_mean_se = sum_se / static_cast<double>(used);
  res.difference = res.actual.kappa_s - res.placebo_mean_kappa;
  res.difference_se = std::sqrt(res.actual.se * res.actual.se + res.placebo_mean_se * res.placebo_mean_se);
  return res;
}

RobustnessResult distance_measure_robustness(std::span<const ingest::SiteMean> sites,
                                             std::span<const geo::SourceRecord> sources,
                                             estimate::SpecKind spec, std::span<const geo::WeightMode> modes,
                                             double epsilon) {
  if (sources.empty()) throw ConfigError("source collection is empty");
  RobustnessResult res;
  std::vector<double> kappas;
  for (const auto mode : modes) {
    ModeResult m;
    m.mode = mode;
    const bool has_weights = std::any_of(sources.begin(), sources.end(),
                                         [&](const auto& s) { return geo::source_weight(s, mode) > 0.0; });
    if (!has_weights) {
      m.note = "no positive source weights for this mode";
      res.modes.push_back(m);
      continue;
    }
    const auto obs = pipeline::decay_observations(sites, sources, mode, pipeline::StrataMode::none);
    m.decay = try_decay(obs, spec);
    if (m.decay) {
      m.boundary = boundary::spatial_boundary(*m.decay, epsilon);
      kappas.push_back(m.decay->kappa_s);
    } else {
      m.note = "fit failed";
    }
    res.modes.push_back(m);
  }
  if (kappas.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(kappas.begin(), kappas.end());
    double mean_abs = 0.0;
    for (double k : kappas) mean_abs += std::fabs(k);
    mean_abs /= static_cast<double>(kappas.size());
    res.max_relative_spread = mean_abs > 0.0 ? (*hi - *lo) / mean_abs : 0.0;
  }
  return res;
}

}  // namespace dscope::diagnose
