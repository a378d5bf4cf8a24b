#include "dscope/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dscope/error.hpp"

namespace dscope::estimate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> base_names(SpecKind k) {
  switch (k) {
    case SpecKind::linear:
    case SpecKind::log_linear:
    case SpecKind::geometric: return {"intercept", "distance"};
    case SpecKind::quadratic: return {"intercept", "distance", "distance_sq"};
    case SpecKind::both: return {"intercept", "log_distance", "distance"};
    case SpecKind::asymmetric: return {"intercept", "distance_downwind", "distance_upwind"};
    case SpecKind::wind_interaction: return {"intercept", "distance", "distance_x_wind"};
  }
  return {};
}

double log_offset(SpecKind k) {
  if (k == SpecKind::log_linear) return 1.0;
  if (k == SpecKind::geometric) return 2.0;
  return 0.0;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? names.size() : static_cast<std::size_t>(it - names.begin());
}

}  // namespace

SpecKind parse_spec(const std::string& s) {
  if (s == "linear") return SpecKind::linear;
  if (s == "quadratic") return SpecKind::quadratic;
  if (s == "both") return SpecKind::both;
  if (s == "log_linear") return SpecKind::log_linear;
  if (s == "geometric") return SpecKind::geometric;
  if (s == "asymmetric") return SpecKind::asymmetric;
  if (s == "wind_interaction") return SpecKind::wind_interaction;
  throw ConfigError("unknown specification '" + s + "'");
}

std::string to_string(SpecKind k) {
  switch (k) {
    case SpecKind::linear: return "linear";
    case SpecKind::quadratic: return "quadratic";
    case SpecKind::both: return "both";
    case SpecKind::log_linear: return "log_linear";
    case SpecKind::geometric: return "geometric";
    case SpecKind::asymmetric: return "asymmetric";
    case SpecKind::wind_interaction: return "wind_interaction";
  }
  return "linear";
}

std::vector<SpecKind> parse_spec_list(const std::string& csv) {
  std::vector<SpecKind> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_spec(item.substr(b, item.find_last_not_of(" \t") - b + 1)));
  }
  if (out.empty()) throw ConfigError("empty specification list");
  return out;
}

std::size_t coefficient_count(SpecKind k) { return base_names(k).size(); }

Design build_design(std::span<const DecayObservation> obs, SpecKind spec,
                    std::span<const std::string> covariate_names) {
  Design d;
  d.names = base_names(spec);
  for (const auto& c : covariate_names) d.names.push_back(c);
  const std::size_t p = d.names.size();
  const double offset = log_offset(spec);

  std::vector<const DecayObservation*> rows;
  rows.reserve(obs.size());
  for (const auto& o : obs) {
    if (!(o.outcome > 0.0)) {
      ++d.dropped_nonpositive;
      continue;
    }
    if (!(o.distance > 0.0)) throw InputError("distance must be positive for " + o.id);
    if (o.covariates.size() != covariate_names.size())
      throw ConfigError("observation " + o.id + " has the wrong number of covariates");
    if (spec == SpecKind::asymmetric && !o.downwind)
      throw ConfigError("asymmetric spec needs a wind direction for " + o.id);
    if (spec == SpecKind::wind_interaction && !o.wind_speed)
      throw ConfigError("wind_interaction spec needs wind_speed for " + o.id);
    rows.push_back(&o);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  d.y.resize(n);
  d.x.resize(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = *rows[static_cast<std::size_t>(i)];
    const double r = o.distance;
    d.y(i) = std::log(o.outcome) + offset * std::log(r);
    d.x(i, 0) = 1.0;
    switch (spec) {
      case SpecKind::linear:
      case SpecKind::log_linear:
      case SpecKind::geometric: d.x(i, 1) = r; break;
      case SpecKind::quadratic:
        d.x(i, 1) = r;
        d.x(i, 2) = r * r;
        break;
      case SpecKind::both:
        d.x(i, 1) = std::log(r);
        d.x(i, 2) = r;
        break;
      case SpecKind::asymmetric:
        d.x(i, 1) = *o.downwind ? r : 0.0;
        d.x(i, 2) = *o.downwind ? 0.0 : r;
        break;
      case SpecKind::wind_interaction:
        d.x(i, 1) = r;
        d.x(i, 2) = r * *o.wind_speed;
        break;
    }
    const std::size_t base = coefficient_count(spec);
    for (std::size_t c = 0; c < o.covariates.size(); ++c)
      d.x(i, static_cast<Eigen::Index>(base + c)) = o.covariates[c];
  }
  return d;
}

std::optional<double> RegressionFit::coefficient(const std::string& name) const {
  const auto k = index_of(names, name);
  if (k == names.size()) return std::nullopt;
  return coefficients(static_cast<Eigen::Index>(k));
}

std::optional<double> RegressionFit::se(const std::string& name) const {
  const auto k = index_of(names, name);
  if (k == names.size()) return std::nullopt;
  return robust_se(static_cast<Eigen::Index>(k));
}

RegressionFit fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::vector<std::string> names,
                      SpecKind spec) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw ConfigError("outcome and design differ in length");
  if (static_cast<Eigen::Index>(names.size()) != p) throw ConfigError("one name per column required");
  if (!(n > p))
    throw ConfigError("need more observations than coefficients (n = " + std::to_string(n) +
                      ", p = " + std::to_string(p) + ")");

  // Equilibrate columns so the rank decision does not depend on units (d vs d^2).
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double nrm = x.col(j).norm();
    scale(j) = nrm > 0.0 ? nrm : 1.0;
  }
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<std::size_t>(perm(k))];
    }
    throw SingularDesignError("design is rank deficient; collinear column(s): " + cols);
  }

  RegressionFit fit;
  fit.spec = spec;
  fit.names = std::move(names);
  fit.n = static_cast<std::size_t>(n);
  fit.coefficients = qr.solve(y).cwiseQuotient(scale);

  const Eigen::VectorXd e = y - x * fit.coefficients;
  fit.rss = e.squaredNorm();
  const double mean_y = y.mean();
  const double tss = (y.array() - mean_y).square().sum();
  fit.r2 = tss > 0.0 ? 1.0 - fit.rss / tss : 1.0;
  // Exact fits would give ln(0); floor RSS/n at the smallest normal double.
  const double sigma2 = std::max(fit.rss / static_cast<double>(n), std::numeric_limits<double>::min());
  fit.aic = static_cast<double>(n) * std::log(sigma2) + 2.0 * static_cast<double>(p + 1);

  // (X'X)^-1 = S^-1 P R^-1 R^-T P' S^-1
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  Eigen::MatrixXd bread = perm * (rinv * rinv.transpose()) * perm.transpose();
  bread = scale.cwiseInverse().asDiagonal() * bread * scale.cwiseInverse().asDiagonal();

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) meat.noalias() += (e(i) * e(i)) * x.row(i).transpose() * x.row(i);

  const double hc1 = static_cast<double>(n) / static_cast<double>(n - p);
  fit.cov = hc1 * bread * meat * bread;
  fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
  fit.robust_se = fit.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

RegressionFit fit_spec(std::span<const DecayObservation> obs, SpecKind spec,
                       std::span<const std::string> covariate_names) {
  Design d = build_design(obs, spec, covariate_names);
  return fit_ols(d.y, d.x, std::move(d.names), spec);
}

std::string distance_coefficient(SpecKind spec) {
  return spec == SpecKind::asymmetric ? "distance_downwind" : "distance";
}

DecayEstimate extract_decay(const RegressionFit& fit, const std::string& coefficient) {
  const std::string name = coefficient.empty() ? distance_coefficient(fit.spec) : coefficient;
  const auto beta = fit.coefficient(name);
  if (!beta) throw ConfigError("fit has no '" + name + "' coefficient");
  DecayEstimate d;
  d.kappa_s = beta.value() == 0.0 ? 0.0 : -*beta;
  d.se = *fit.se(name);
  d.n = fit.n;
  if (d.se > 0.0)
    d.t_stat = d.kappa_s / d.se;
  else
    d.t_stat = d.kappa_s == 0.0 ? 0.0 : std::copysign(kInf, d.kappa_s);
  return d;
}

SpecComparison compare_specs(std::span<const DecayObservation> obs, std::span<const SpecKind> specs,
                             std::span<const std::string> covariate_names) {
  if (specs.size() < 2) throw ConfigError("compare_specs needs at least two specifications");
  SpecComparison out;
  for (const auto spec : specs) {
    try {
      out.ranked.push_back({fit_spec(obs, spec, covariate_names), 0.0});
    } catch (const SingularDesignError& e) {
      out.skipped.emplace_back(spec, e.what());
    } catch (const ConfigError& e) {
      out.skipped.emplace_back(spec, e.what());
    }
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const RankedFit& a, const RankedFit& b) { return a.fit.aic < b.fit.aic; });
  if (!out.ranked.empty()) {
    const double best = out.ranked.front().fit.aic;
    for (auto& r : out.ranked) r.delta_aic = r.fit.aic - best;
  }
  return out;
}

double initial_kappa(std::span<const double> outcome, std::span<const double> nearest_distance) {
  std::vector<DecayObservation> obs(outcome.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs[i].outcome = outcome[i];
    obs[i].distance = nearest_distance[i];
  }
  return extract_decay(fit_spec(obs, SpecKind::log_linear)).kappa_s;
}

namespace {

struct SuperpositionState {
  std::span<const double> logy;
  std::span<const double> dist;
  std::size_t m;

  // Objective and, optionally, the model log m_i at params (kappa, s).
  double objective(double kappa, const Eigen::VectorXd& s) const {
    double f = 0.0;
    const std::size_t n = logy.size();
    for (std::size_t i = 0; i < n; ++i) {
      double mi = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double d = dist[i * m + j];
        mi += s(static_cast<Eigen::Index>(j)) * std::exp(-kappa * d) / d;
      }
      if (!(mi > 0.0) || !std::isfinite(mi)) return kInf;
      const double r = logy[i] - std::log(mi);
      f += r * r;
    }
    return f;
  }

  // Residuals r_i = log y_i - log m_i and Jacobian of log m_i (columns: kappa, s_1..s_m).
  void linearize(double kappa, const Eigen::VectorXd& s, Eigen::VectorXd& r, Eigen::MatrixXd& j) const {
    const auto n = static_cast<Eigen::Index>(logy.size());
    r.resize(n);
    j.resize(n, static_cast<Eigen::Index>(m + 1));
    std::vector<double> g(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      double mi = 0.0, dm_dk = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double d = dist[static_cast<std::size_t>(i) * m + k];
        g[k] = std::exp(-kappa * d) / d;
        mi += s(static_cast<Eigen::Index>(k)) * g[k];
        dm_dk -= s(static_cast<Eigen::Index>(k)) * d * g[k];
      }
      r(i) = logy[static_cast<std::size_t>(i)] - std::log(mi);
      j(i, 0) = dm_dk / mi;
      for (std::size_t k = 0; k < m; ++k) j(i, static_cast<Eigen::Index>(k + 1)) = g[k] / mi;
    }
  }
};

}  // namespace

SuperpositionFit fit_superposition(std::span<const double> outcome, std::span<const double> distances,
                                   std::size_t n_sources, double kappa0) {
  if (n_sources == 0) throw ConfigError("superposition fit needs at least one source");
  if (!(kappa0 > 0.0)) throw ConfigError("initial kappa must be positive");
  const std::size_t n = outcome.size();
  if (distances.size() != n * n_sources) throw ConfigError("distance matrix has the wrong shape");
  if (n <= n_sources + 1) throw ConfigError("too few observations for the superposition fit");

  std::vector<double> logy(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(outcome[i] > 0.0)) throw InputError("superposition fit needs positive outcomes");
    logy[i] = std::log(outcome[i]);
  }
  for (double d : distances)
    if (!(d > 0.0)) throw InputError("superposition fit needs positive distances");

  const SuperpositionState st{logy, distances, n_sources};
  const auto m = static_cast<Eigen::Index>(n_sources);

  // Common scale matching mean log level at kappa0.
  double kappa = kappa0;
  Eigen::VectorXd s = Eigen::VectorXd::Ones(m);
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mi = 0.0;
      for (std::size_t j = 0; j < n_sources; ++j) {
        const double d = distances[i * n_sources + j];
        mi += std::exp(-kappa * d) / d;
      }
      acc += logy[i] - std::log(mi);
    }
    s.setConstant(std::exp(acc / static_cast<double>(n)));
  }

  SuperpositionFit out;
  double f = st.objective(kappa, s);
  if (!std::isfinite(f)) throw InputError("initial superposition model underflows; choose a smaller kappa0");

  double mu = 1e-3;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  std::size_t it = 0;
  for (; it < kSuperpositionMaxIter; ++it) {
    st.linearize(kappa, s, r, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;  // r = y - model, so step solves (J'J) delta = J'r
    const Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);

    bool accepted = false;
    while (mu < 1e16) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * diag;
      const Eigen::VectorXd delta = a.ldlt().solve(jtr);
      double k_new = kappa + delta(0);
      Eigen::VectorXd s_new = s + delta.tail(m);
      bool projected = false;
      for (Eigen::Index j = 0; j < m; ++j)
        if (s_new(j) < 0.0) {
          s_new(j) = 0.0;
          projected = true;
        }
      const double f_new = st.objective(k_new, s_new);
      if (f_new < f) {
        const double rel = (f - f_new) / std::max(f, std::numeric_limits<double>::min());
        kappa = k_new;
        s = s_new;
        f = f_new;
        mu = std::max(mu / 10.0, 1e-12);
        out.projected_steps += projected ? 1 : 0;
        accepted = true;
        if (rel < kSuperpositionRelTol) out.converged = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at any damping: a stationary point.
      out.converged = true;
      break;
    }
    if (out.converged || f == 0.0) {
      out.converged = true;
      ++it;
      break;
    }
  }

  out.iterations = it;
  out.kappa_s = kappa;
  out.scales.assign(s.data(), s.data() + s.size());
  out.objective = f;
  st.linearize(kappa, s, r, jac);
  const double dof = static_cast<double>(n) - static_cast<double>(m + 1);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible() && dof > 0.0) {
    const double v = (f / dof) * lu.inverse()(0, 0);
    out.kappa_se = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  return out;
}

AttScale parse_att_scale(const std::string& s) {
  if (s == "level") return AttScale::level;
  if (s == "log") return AttScale::log;
  throw ConfigError("unknown ATT scale '" + s + "'");
}

std::string to_string(AttScale s) { return s == AttScale::level ? "level" : "log"; }

AttEstimate att_stage1(std::span<const double> outcome, std::span<const double> distance,
                       double threshold_km, AttScale scale) {
  if (!(threshold_km > 0.0)) throw ConfigError("threshold must be positive");
  if (outcome.size() != distance.size()) throw ConfigError("outcome and distance differ in length");

  std::vector<double> near, far;
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    double v = outcome[i];
    if (scale == AttScale::log) {
      if (!(v > 0.0)) throw InputError("log-scale ATT needs positive outcomes");
      v = std::log(v);
    }
    (distance[i] < threshold_km ? near : far).push_back(v);
  }
  if (near.empty() || far.empty()) throw ConfigError("both sides of the threshold must be non-empty");

  auto moments = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
    return std::pair{mean, var};
  };
  const auto [mn, vn] = moments(near);
  const auto [mf, vf] = moments(far);

  AttEstimate a;
  a.att = mn - mf;
  a.se = std::sqrt(vn / static_cast<double>(near.size()) + vf / static_cast<double>(far.size()));
  a.threshold_km = threshold_km;
  a.scale = scale;
  a.n_near = near.size();
  a.n_far = far.size();
  return a;
}

std::vector<int> define_treatment(std::span<const double> distance, double d_star) {
  if (!(d_star > 0.0)) throw ConfigError("d_star must be positive");
  std::vector<int> out(distance.size());
  for (std::size_t i = 0; i < distance.size(); ++i) out[i] = distance[i] < d_star ? 1 : 0;
  return out;
}

namespace {

StratumDecay fit_group(const std::string& label, const std::vector<DecayObservation>& rows, SpecKind spec,
                       std::size_t min_n) {
  StratumDecay sd;
  sd.label = label;
  std::size_t usable = 0;
  for (const auto& o : rows) usable += o.outcome > 0.0 ? 1 : 0;
  sd.n = usable;
  if (usable < min_n) {
    sd.skip_reason = "insufficient observations (" + std::to_string(usable) + " < " +
                     std::to_string(min_n) + ")";
    return sd;
  }
  try {
    sd.fit = fit_spec(rows, spec);
    sd.decay = extract_decay(*sd.fit);
    sd.decay->stratum = label;
  } catch (const SingularDesignError& e) {
    sd.skip_reason = e.what();
  }
  return sd;
}

}  // namespace

std::vector<StratumDecay> stratified_decay(std::span<const DecayObservation> obs,
                                           std::span<const std::string> strata, SpecKind spec,
                                           std::size_t min_n, Execution exec) {
  const std::size_t need = std::max(min_n, coefficient_count(spec) + 1);
  std::map<std::string, std::vector<DecayObservation>> groups;
  for (const auto& s : strata) groups[s];
  for (const auto& o : obs)
    if (auto it = groups.find(o.stratum); it != groups.end()) it->second.push_back(o);

  std::vector<StratumDecay> out(strata.size());
  const auto n = static_cast<std::ptrdiff_t>(strata.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = fit_group(strata[k], groups.at(strata[k]), spec, need);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = fit_group(strata[k], groups.at(strata[k]), spec, need);
  }
  return out;
}

TemporalResult temporal_splits(std::span<const DecayObservation> obs, std::span<const std::string> periods,
                               SpecKind spec, std::size_t min_n) {
  if (periods.empty()) throw ConfigError("temporal_splits needs at least one period");
  const std::size_t need = std::max(min_n, coefficient_count(spec) + 1);
  TemporalResult out;
  std::vector<DecayObservation> pooled;
  for (const auto& p : periods) {
    std::vector<DecayObservation> rows;
    for (const auto& o : obs)
      if (o.period == p) rows.push_back(o);
    pooled.insert(pooled.end(), rows.begin(), rows.end());
    out.per_period.push_back(fit_group(p, rows, spec, need));
  }
  bool any = false;
  for (const auto& r : out.per_period) any = any || r.decay.has_value();
  if (!any) throw ConfigError("no period has enough observations");

  const auto all = fit_group("pooled", pooled, spec, need);
  out.pooled = all.decay;
  for (std::size_t a = 0; a < out.per_period.size(); ++a)
    for (std::size_t b = a + 1; b < out.per_period.size(); ++b)
      if (out.per_period[a].decay && out.per_period[b].decay)
        out.max_pairwise_diff = std::max(
            out.max_pairwise_diff,
            std::fabs(out.per_period[a].decay->kappa_s - out.per_period[b].decay->kappa_s));
  return out;
}

}  // namespace dscope::estimate
