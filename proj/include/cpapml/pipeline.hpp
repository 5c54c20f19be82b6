#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cpapml/learners.hpp"
#include "cpapml/matrix.hpp"
#include "cpapml/preprocess.hpp"
#include "cpapml/selection.hpp"

namespace cpapml::pipeline {

// One of the 80 grid families: a method per slot, hyperparameters still open.
struct PipelineSpec {
    std::string sampler = "none";           // none | smote
    std::string selector = "none";          // none | combine_fs | lasso_fs | rfe_rf_fs
    std::string learning_metric = "f1_weighted";  // f1_weighted | precision_weighted
    learners::Algo algo = learners::Algo::lr;

    std::string family_id() const;  // "<sampler>+<selector>+<metric>+<algo>"
};

// A concrete hyperparameter choice within a family's grid.
struct HyperAssignment {
    selection::SelectorSpec selector;
    selection::SamplerSpec sampler;
    learners::LearnerSpec learner;
};

// All 80 families in a fixed order: selector, algorithm, sampler, metric.
std::vector<PipelineSpec> enumerate_grid();

// Drops families whose selector and classifier are the same algorithm
// (rfe_rf_fs + RF): 80 -> 76.
std::vector<PipelineSpec> apply_exclusion(const std::vector<PipelineSpec>& families);

// Per-slot hyperparameter grids (Table 1).
std::vector<selection::SelectorSpec> selector_grid(const std::string& method);
std::vector<selection::SamplerSpec> sampler_grid(const std::string& method);
std::vector<learners::LearnerSpec> learner_grid(learners::Algo algo);

// The family's full hyperparameter cross-product, in deterministic order
// (selector grid, then sampler grid, then classifier grid).
std::vector<HyperAssignment> expand_family(const PipelineSpec& family);

struct FittedPipeline {
    PipelineSpec spec;
    HyperAssignment assignment;
    preprocess::FittedTransform impute, variance, standardize;
    std::vector<std::uint8_t> selector_mask;  // over post-variance-filter columns
    bool selector_warning = false;
    bool sampler_warning = false;
    std::unique_ptr<learners::TrainedModel> model;
};

// Fit order: impute -> variance filter -> standardize -> select -> sample ->
// train. Only `rows`/`labels` are consulted; `categorical` marks raw columns
// imputed by mode and scored by chi-square in combine_fs.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const HyperAssignment& assignment,
                            const Matrix& rows, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& categorical, std::uint64_t seed);

std::vector<double> pipeline_scores(const FittedPipeline& p, const Matrix& rows);
std::vector<int> pipeline_predict(const FittedPipeline& p, const Matrix& rows);

void serialize_pipeline(const FittedPipeline& p, std::ostream& out);
void save_pipeline(const FittedPipeline& p, const std::string& path);
FittedPipeline load_pipeline(const std::string& path);

}  // namespace cpapml::pipeline
