#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dscope/parallel.hpp"

namespace dscope::estimate {

// Regression forms for log outcome against distance d (km):
//   linear           a + b1 d
//   quadratic        a + b1 d + b2 d^2
//   both             a + g log d + b1 d          (free log-distance term)
//   log_linear       a - log d + b1 d            (offset fixed at -1)
//   geometric        a - 2 log d + b1 d          (offset fixed at -2)
//   asymmetric       a + b_down d 1[down] + b_up d 1[up]
//   wind_interaction a + b1 d + b2 d * wind_speed
// Pass-through covariates are appended to every form.
enum class SpecKind { linear, quadratic, both, log_linear, geometric, asymmetric, wind_interaction };

SpecKind parse_spec(const std::string& s);
std::string to_string(SpecKind k);
std::vector<SpecKind> parse_spec_list(const std::string& csv);

// Number of estimated coefficients (intercept included, covariates excluded).
std::size_t coefficient_count(SpecKind k);

struct DecayObservation {
  std::string id;
  double outcome = 0.0;   // level; rows with outcome <= 0 are dropped from log designs
  double distance = 0.0;  // km
  std::optional<bool> downwind;
  std::optional<double> wind_speed;
  std::vector<double> covariates;
  std::string stratum;
  std::string period;  // year label for temporal splits
};

struct Design {
  Eigen::VectorXd y;  // log outcome minus any fixed offset
  Eigen::MatrixXd x;
  std::vector<std::string> names;
  std::size_t dropped_nonpositive = 0;
};

// Throws ConfigError when a row lacks the wind fields its spec needs.
Design build_design(std::span<const DecayObservation> obs, SpecKind spec,
                    std::span<const std::string> covariate_names = {});

struct RegressionFit {
  SpecKind spec = SpecKind::linear;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd robust_se;
  Eigen::MatrixXd cov;  // HC1
  std::size_t n = 0;
  double rss = 0.0;
  double r2 = 0.0;
  double aic = 0.0;

  std::optional<double> coefficient(const std::string& name) const;
  std::optional<double> se(const std::string& name) const;
};

// Least squares by column-pivoted QR on a column-equilibrated design.
// HC1: n/(n-p) (X'X)^-1 X' diag(e^2) X (X'X)^-1 with p = number of columns.
// AIC: n ln(RSS/n) + 2(p+1). Needs n > p; throws SingularDesignError naming
// the collinear columns when X lacks full column rank.
RegressionFit fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                      std::vector<std::string> names, SpecKind spec);

RegressionFit fit_spec(std::span<const DecayObservation> obs, SpecKind spec,
                       std::span<const std::string> covariate_names = {});

struct DecayEstimate {
  double kappa_s = 0.0;  // 1/km, = -beta_distance
  double se = 0.0;
  double t_stat = 0.0;   // kappa_s / se; +-inf when se == 0 and kappa != 0
  std::size_t n = 0;
  std::string stratum;
};

// Coefficient naming the distance slope for each spec (`distance`, or
// `distance_downwind` for the asymmetric form).
std::string distance_coefficient(SpecKind spec);

DecayEstimate extract_decay(const RegressionFit& fit, const std::string& coefficient = "");

struct RankedFit {
  RegressionFit fit;
  double delta_aic = 0.0;
};

struct SpecComparison {
  std::vector<RankedFit> ranked;  // ascending AIC, ties keep request order
  std::vector<std::pair<SpecKind, std::string>> skipped;
};

// Throws ConfigError with fewer than two specs.
SpecComparison compare_specs(std::span<const DecayObservation> obs, std::span<const SpecKind> specs,
                             std::span<const std::string> covariate_names = {});

struct SuperpositionFit {
  double kappa_s = 0.0;
  double kappa_se = 0.0;
  std::vector<double> scales;
  double objective = 0.0;  // sum of squared log residuals
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t projected_steps = 0;  // accepted steps where some scale was clipped to 0
};

inline constexpr std::size_t kSuperpositionMaxIter = 200;
inline constexpr double kSuperpositionRelTol = 1e-10;

// Minimises sum_i [log y_i - log sum_j s_j exp(-kappa d_ij)/d_ij]^2 over kappa
// and s_j >= 0 by damped Gauss-Newton (Marquardt scaling) with the analytic
// Jacobian. `distances` is row-major n x n_sources. Only objective-reducing
// steps are accepted. Not converging yields the best iterate with
// converged = false.
SuperpositionFit fit_superposition(std::span<const double> outcome, std::span<const double> distances,
                                   std::size_t n_sources, double kappa0);

// kappa from a log_linear fit on nearest-source distances; the usual kappa0.
double initial_kappa(std::span<const double> outcome, std::span<const double> nearest_distance);

enum class AttScale { level, log };
AttScale parse_att_scale(const std::string& s);
std::string to_string(AttScale s);

struct AttEstimate {
  double att = 0.0;
  double se = 0.0;  // Welch
  double threshold_km = 0.0;
  AttScale scale = AttScale::level;
  std::size_t n_near = 0;
  std::size_t n_far = 0;
};

// mean(outcome | d < threshold) - mean(outcome | d >= threshold).
AttEstimate att_stage1(std::span<const double> outcome, std::span<const double> distance,
                       double threshold_km, AttScale scale);

// 1 iff distance < d_star.
std::vector<int> define_treatment(std::span<const double> distance, double d_star);

struct StratumDecay {
  std::string label;
  std::size_t n = 0;
  std::optional<RegressionFit> fit;
  std::optional<DecayEstimate> decay;
  std::string skip_reason;
};

// One independent fit per label, in the order of `strata`. Strata with
// n < min_n (default p + 1) or a singular design are reported with a reason.
std::vector<StratumDecay> stratified_decay(std::span<const DecayObservation> obs,
                                           std::span<const std::string> strata, SpecKind spec,
                                           std::size_t min_n = 0,
                                           Execution exec = Execution::parallel);

struct TemporalResult {
  std::vector<StratumDecay> per_period;
  std::optional<DecayEstimate> pooled;
  double max_pairwise_diff = 0.0;  // over periods that produced an estimate
};

TemporalResult temporal_splits(std::span<const DecayObservation> obs,
                               std::span<const std::string> periods, SpecKind spec,
                               std::size_t min_n = 0);

}  // namespace dscope::estimate
