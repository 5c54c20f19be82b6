#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpapml/dataset.hpp"
#include "cpapml/matrix.hpp"
#include "cpapml/stats.hpp"

namespace cpapml::preprocess {

struct PreprocessConfig {
    double rare_category_ratio = 0.10;
    double nmi_threshold = 0.5;
    double correlation_threshold = 0.8;
    double alpha = 0.05;
};

enum class TransformKind { impute, variance_filter, standardize };

struct FittedTransform {
    TransformKind kind = TransformKind::impute;
    std::vector<double> fill;        // impute: per-feature mean/mode
    std::vector<std::uint8_t> keep;  // variance_filter
    std::vector<double> mean, sd;    // standardize
    std::size_t width = 0;           // fitted feature count
};

// Per-feature mean (numeric) or mode (categorical, ties -> smallest code).
// `categorical` marks which columns take the mode.
FittedTransform fit_impute(const Matrix& rows, const std::vector<std::uint8_t>& categorical);
FittedTransform fit_variance_filter(const Matrix& rows);
FittedTransform fit_standardize(const Matrix& rows);  // population sd

Matrix apply_transform(const FittedTransform& t, const Matrix& rows);

// Indices of kept columns after a variance filter.
std::vector<std::size_t> kept_indices(const FittedTransform& variance_filter);

struct Removal {
    std::string feature;
    std::string filter;      // rare_category | nmi_redundancy | correlation_redundancy
    double score = 0.0;      // category ratio, NMI, or |rho|
    double p_value = 0.0;    // association p of the removed feature vs labels
    std::string kept_partner;
};

struct FilterResult {
    Dataset dataset;
    std::vector<Removal> removals;
};

// Drops categorical features with an observed category of count <= ceil(ratio * n).
FilterResult rare_category_filter(const Dataset& d, const PreprocessConfig& cfg);
// Pairs of categorical features with NMI > threshold: drop the one whose
// chi-square p against the labels is larger. Descending-NMI pair order.
FilterResult nmi_redundancy_filter(const Dataset& d, const PreprocessConfig& cfg);
// Numeric pairs with |Spearman rho| > threshold: drop the one whose
// Mann-Whitney p against the labels is larger. Descending-|rho| order.
FilterResult correlation_redundancy_filter(const Dataset& d, const PreprocessConfig& cfg);

struct FeatureDescription {
    std::string feature;
    std::string method;  // mann-whitney-u | chi-square
    double statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;
    std::size_t missing_count = 0;
    double missing_ratio = 0.0;
};

std::vector<FeatureDescription> describe_dataset(const Dataset& d, const PreprocessConfig& cfg);

}  // namespace cpapml::preprocess
