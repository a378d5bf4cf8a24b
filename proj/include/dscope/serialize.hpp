#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dscope/boundary.hpp"
#include "dscope/diagnose.hpp"
#include "dscope/estimate.hpp"
#include "dscope/ingest.hpp"
#include "dscope/physics.hpp"
#include "dscope/synth.hpp"

// JSON records for every artifact the CLI writes. Keys keep insertion order;
// non-finite numbers serialise as null.
namespace dscope::json {

using Json = nlohmann::ordered_json;

Json to_json(const estimate::RegressionFit& fit);
Json to_json(const estimate::DecayEstimate& d);
Json to_json(const estimate::SpecComparison& c);
Json to_json(const estimate::StratumDecay& s);
Json to_json(const estimate::TemporalResult& t);
Json to_json(const estimate::AttEstimate& a);
Json to_json(const boundary::BoundaryEstimate& b);
Json to_json(const diagnose::ValidityReport& r);
Json to_json(const diagnose::PlaceboResult& p);
Json to_json(const diagnose::RobustnessResult& r);
Json to_json(const ingest::FilterAudit& a);
Json to_json(const physics::PhysicalParams& p);
Json to_json(const physics::RegimeNumbers& r);
Json to_json(const synth::Truth& t);
Json to_json(const synth::ScenarioSpec& s);
Json to_json(const BoundingBox& b);

// Accepts {"kappa_s", "se"[, "n", "stratum", "t_stat"]}; t_stat is recomputed when absent.
estimate::DecayEstimate decay_from_json(const Json& j);
estimate::RegressionFit fit_from_json(const Json& j);
physics::PhysicalParams params_from_json(const Json& j);
BoundingBox bbox_from_json(const Json& j);
diagnose::ValidityReport validity_from_json(const Json& j);

// Scenario file: sources inline or from a plants CSV path given relative to
// the scenario file. Unknown keys are rejected. Throws ConfigError.
synth::ScenarioSpec scenario_from_json(const Json& j, const std::filesystem::path& base_dir = {});

Json read_file(const std::filesystem::path& path);
// Two-space indent plus trailing newline.
void write_file(const std::filesystem::path& path, const Json& j);
std::string dump(const Json& j);

}  // namespace dscope::json
