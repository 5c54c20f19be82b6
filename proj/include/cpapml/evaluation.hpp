#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cpapml/matrix.hpp"
#include "cpapml/pipeline.hpp"
#include "cpapml/stats.hpp"

namespace cpapml::evaluation {

struct MetricSet {
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double auc = 0.0;
    std::array<std::array<long, 2>, 2> confusion{};  // [true label][predicted]
    bool zero_division = false;                      // some per-label ratio hit 0/0

    double metric(const std::string& name) const;  // f1_weighted | precision_weighted
};

// Support-weighted per-label precision/recall/f1 (0/0 -> 0) plus pairwise AUC
// (ties count 1/2; 0.5 when a class is absent).
MetricSet weighted_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                           const std::vector<double>& scores);

// k disjoint stratified folds; sizes differ by <= 1, per-label counts per fold
// differ by <= 1. Depends only on labels and seed.
std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed);

// Per-hyperassignment inner-selection score, aggregated over repetitions.
// Both candidate learning metrics come from the same fits.
struct CellScore {
    double mean_f1 = 0.0, sd_f1 = 0.0;
    double mean_prec = 0.0, sd_prec = 0.0;
    int failed_reps = 0;
    std::string failure;  // first failure message, if any

    double mean(const std::string& metric) const;
    double sd(const std::string& metric) const;
};

enum class InnerMode { repeated_resample, kfold };

// Scores every hyper-assignment of the family (expand_family order) by: 10
// stratified 70/30 resamples (default) or stratified 10-fold CV. The metric
// slot of `family` is ignored; failures score 0 for the failing repetition.
std::vector<CellScore> evaluate_inner_cells(const pipeline::PipelineSpec& family, const Matrix& rows,
                                            const std::vector<int>& labels,
                                            const std::vector<std::uint8_t>& categorical,
                                            std::uint64_t seed, int n_reps = 10,
                                            double validation_ratio = 0.30,
                                            InnerMode mode = InnerMode::repeated_resample);

// Greedy argmax of the metric mean; ties -> lower sd, then smallest index.
std::size_t pick_best_cell(const std::vector<CellScore>& cells, const std::string& metric);

struct InnerResult {
    std::vector<CellScore> cells;
    std::size_t best_index = 0;
    pipeline::HyperAssignment best;
};

InnerResult inner_select(const pipeline::PipelineSpec& family, const Matrix& rows,
                         const std::vector<int>& labels, const std::vector<std::uint8_t>& categorical,
                         std::uint64_t seed);

struct CvResult {
    std::vector<MetricSet> folds;
    std::vector<double> fold_scores;  // f1-weighted per fold
    double mean = 0.0, sd = 0.0;      // population sd over folds
    std::vector<std::string> failures;
};

// Outer stratified k-fold CV of one chosen assignment, reported f1-weighted
// regardless of the family's learning metric. Folds depend only on
// (labels, seed), so every family sees identical partitions.
CvResult outer_evaluate(const pipeline::PipelineSpec& family, const pipeline::HyperAssignment& assignment,
                        const Matrix& rows, const std::vector<int>& labels,
                        const std::vector<std::uint8_t>& categorical, std::uint64_t seed,
                        std::size_t k = 10);

// Indices ordered by (mean desc, sd asc, input order).
std::vector<std::size_t> rank_pipelines(const std::vector<CvResult>& results);

struct Comparison {
    double mean_difference = 0.0;
    double sd_difference = 0.0;
    stats::TestResult test;
};

// Fold-aligned paired t comparison (a - b).
Comparison compare_pipelines(const std::vector<double>& fold_scores_a,
                             const std::vector<double>& fold_scores_b);

MetricSet test_evaluate(const pipeline::FittedPipeline& p, const Matrix& test_rows,
                        const std::vector<int>& test_labels);

struct RocPoint {
    double fpr = 0.0, tpr = 0.0;
};

// Threshold sweep over distinct scores, (0,0) to (1,1); trapezoidal area
// equals the pairwise AUC.
std::vector<RocPoint> roc_curve(const std::vector<int>& y_true, const std::vector<double>& scores);

double trapezoid_auc(const std::vector<RocPoint>& curve);

struct CurvePoint {
    double fraction = 0.0;
    double train_mean = 0.0, train_sd = 0.0;
    double validation_mean = 0.0, validation_sd = 0.0;
};

inline const std::vector<double> kDefaultFractions = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

// Stratified-subsample k-fold f1-weighted means for each training fraction.
std::vector<CurvePoint> learning_curve(const pipeline::PipelineSpec& family,
                                       const pipeline::HyperAssignment& assignment, const Matrix& rows,
                                       const std::vector<int>& labels,
                                       const std::vector<std::uint8_t>& categorical,
                                       const std::vector<double>& fractions, std::uint64_t seed,
                                       std::size_t k = 10);

}  // namespace cpapml::evaluation
