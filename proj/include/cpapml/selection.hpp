#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpapml/matrix.hpp"

namespace cpapml::selection {

struct SelectorSpec {
    std::string method = "none";  // none | combine_fs | lasso_fs | rfe_rf_fs
    int percentile = 20;          // combine_fs
    double C = 10.0;              // lasso_fs
    double step_fraction = 0.1;   // rfe_rf_fs
    double target_fraction = 0.6;

    std::string params_text() const;
};

struct SamplerSpec {
    std::string method = "none";  // none | smote
    int n_neighbors = 5;

    std::string params_text() const;
};

struct SelectionResult {
    std::vector<std::uint8_t> mask;  // per-feature keep flag
    bool warning = false;
    std::string warning_text;
};

// Ranks every feature by association p-value (ANOVA F for numeric, chi-square
// on min-shifted values for categorical) and keeps the top percentile,
// ceil-rounded, at least 1.
SelectionResult combine_fs(const Matrix& rows, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& categorical, int percentile);

// L1 logistic regression; keeps |coefficient| > 1e-8. Non-convergence falls
// back to the full mask with a warning.
SelectionResult lasso_fs(const Matrix& rows, const std::vector<int>& labels, double C);

// Recursive elimination by random-forest importance: drops the
// ceil(step_fraction * current) weakest features per round until
// ceil(target_fraction * p) remain.
SelectionResult rfe_rf_fs(const Matrix& rows, const std::vector<int>& labels, double step_fraction,
                          double target_fraction, std::uint64_t seed);

// Dispatch on spec.method. `raw_rows` is the unstandardized view used for
// scoring categorical features in combine_fs; `std_rows` feeds the others.
SelectionResult run_selector(const SelectorSpec& spec, const Matrix& std_rows, const Matrix& raw_rows,
                             const std::vector<int>& labels, const std::vector<std::uint8_t>& categorical,
                             std::uint64_t seed);

std::vector<std::size_t> mask_indices(const std::vector<std::uint8_t>& mask);

struct SampleResult {
    Matrix rows;
    std::vector<int> labels;
    bool warning = false;
    std::string warning_text;
};

// SMOTE with ratio "auto": appends synthetic minority rows x + u * (x_nn - x)
// until the classes are equal. Degrades to a no-op with a warning when the
// minority class has no more than n_neighbors members.
SampleResult smote(const Matrix& rows, const std::vector<int>& labels, int n_neighbors,
                   std::uint64_t seed);

SampleResult run_sampler(const SamplerSpec& spec, const Matrix& rows, const std::vector<int>& labels,
                         std::uint64_t seed);

}  // namespace cpapml::selection
