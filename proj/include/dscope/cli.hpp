#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dscope/estimate.hpp"
#include "dscope/geo.hpp"
#include "dscope/ingest.hpp"
#include "dscope/pipeline.hpp"

namespace dscope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

struct RunConfig {
  std::string command;
  std::filesystem::path input;
  std::filesystem::path sources;
  std::filesystem::path out = ".";
  std::vector<estimate::SpecKind> specs{estimate::SpecKind::linear, estimate::SpecKind::log_linear,
                                        estimate::SpecKind::both, estimate::SpecKind::quadratic};
  double epsilon = 0.1;
  std::vector<double> epsilons{0.01, 0.05, 0.1, 0.2, 0.3};
  pipeline::StrataMode strata = pipeline::StrataMode::none;
  std::optional<std::uint64_t> seed;
  geo::WeightMode weight_mode = geo::WeightMode::nearest;
  std::optional<ingest::Schema> schema;  // sniffed from the header when absent
  ingest::FilterPolicy filters;
  std::size_t placebo_seeds = 50;
  int threads = 0;  // 0 keeps the OpenMP default
};

// Flat `key = value` lines; '#' starts a comment. Keys are the long flag
// names with '-' or '_' (e.g. `weight_mode = capacity`), plus the filter keys
// min_coverage, min_obs_per_period, min_qa, trim_quantile, drop_negative.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Applies key/value overrides onto `cfg`. Throws ConfigError for unknown keys
// or unparsable values.
void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& kv);

// Throws ConfigError for epsilon outside (0, 1) or a missing input file.
void validate(const RunConfig& cfg);

int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_estimate(const RunConfig& cfg, std::ostream& log);
int cmd_bound(const RunConfig& cfg, std::ostream& log);
int cmd_diagnose(const RunConfig& cfg, std::ostream& log);
int cmd_report(const RunConfig& cfg, std::ostream& log);

// Entry point for the `decayscope` binary. Returns the process exit code:
// 0 on success (framework rejection included), 1 internal error, 2 bad input.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dscope::cli
