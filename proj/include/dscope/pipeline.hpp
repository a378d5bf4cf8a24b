#pragma once

#include <span>
#include <string>
#include <vector>

#include "dscope/estimate.hpp"
#include "dscope/geo.hpp"
#include "dscope/ingest.hpp"
#include "dscope/observation.hpp"

// Glue between ingested sites, the source set and the regression rows.
namespace dscope::pipeline {

enum class StrataMode { none, region, near_far };
StrataMode parse_strata(const std::string& s);
std::string to_string(StrataMode m);

// Labels a mode can produce, in report order.
std::vector<std::string> strata_labels(StrataMode m);

// One regression row per site. Distance is the dominant-exposure distance for
// the weight mode (the nearest distance for WeightMode::nearest). Region strata
// use the site's state, falling back to the nearest source's state.
std::vector<estimate::DecayObservation> decay_observations(std::span<const ingest::SiteMean> sites,
                                                           std::span<const geo::SourceRecord> sources,
                                                           geo::WeightMode mode, StrataMode strata,
                                                           Execution exec = Execution::parallel);

// Per (id, calendar year) means; `periods` holds the single year label.
std::vector<ingest::SiteMean> yearly_averages(std::span<const ObservationRecord> records);

// Smallest box holding every site (padded when degenerate in one axis).
BoundingBox observation_bbox(std::span<const ingest::SiteMean> sites);

}  // namespace dscope::pipeline
