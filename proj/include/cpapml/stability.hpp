#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpapml/dataset.hpp"
#include "cpapml/pipeline.hpp"

namespace cpapml::stability {

struct StabilityConfig {
    int n_runs = 100;
    double subsample_fraction = 0.70;
    double weight_threshold = 0.4;
    std::uint64_t seed = 0;
};

struct FeatureStability {
    std::string feature;
    std::size_t selection_count = 0;
    double stability = 0.0;    // selection_count / n_runs
    double mean_weight = 0.0;  // mean per-run max-normalized |weight| where the
                               // feature survived the selector mask
};

struct StabilityReport {
    std::vector<FeatureStability> entries;  // descending stability, tie -> higher weight
    int n_runs = 0;
    int failed_runs = 0;
};

// Refits the pipeline on n_runs stratified subsamples; a feature counts as
// selected in a run iff it survives the selector mask and its per-run
// max-normalized absolute weight exceeds the threshold. Descriptive learners
// (LR, RF) only.
StabilityReport stability_run(const pipeline::PipelineSpec& spec,
                              const pipeline::HyperAssignment& assignment, const Dataset& d,
                              const StabilityConfig& cfg);

std::vector<FeatureStability> render_feature_ranking(const StabilityReport& r, std::size_t top_k);

// Mode/chi-square columns for a schema: every non-numeric feature.
std::vector<std::uint8_t> categorical_mask(const Schema& schema);

}  // namespace cpapml::stability
