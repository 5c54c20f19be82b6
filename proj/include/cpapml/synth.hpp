#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpapml/dataset.hpp"

namespace cpapml::synth {

// Shape/signal description for a generated stand-in dataset. Total feature
// count is n_numeric + n_categorical; the usage-hours column that labels are
// derived from is appended on top of that.
struct SyntheticSpec {
    std::size_t n_rows = 42;
    std::size_t n_numeric = 60;
    std::size_t n_categorical = 17;
    std::size_t n_informative = 5;
    double label_balance = 24.0 / 42.0;  // positive-label fraction
    double noise = 1.0;                  // 0 = perfectly separable signal
    std::uint64_t seed = 0;
};

inline const std::string kHoursColumn = "avg_nightly_hours_m6";

struct SyntheticResult {
    Dataset dataset;  // labels filled; last feature is kHoursColumn
    std::vector<std::string> informative;
};

// Informative numerics are label-shifted Gaussians (shift 2, sd = noise);
// informative categoricals are label-dependent multinomials over {a,b,c}
// that become label-determined at noise 0. Everything else is pure noise.
// Deterministic given the spec.
SyntheticResult generate(const SyntheticSpec& spec);

// Writes CSV + schema (both load_csv-compatible) and the ground-truth
// informative-feature list, one name per line.
void write_synthetic(const SyntheticResult& r, const std::string& csv_path,
                     const std::string& schema_path, const std::string& truth_path);

}  // namespace cpapml::synth
