#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpapml/matrix.hpp"

namespace cpapml {

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

enum class FeatureKind { numeric, binary, ordered_categorical };
enum class TimePoint { t0, t1, t3 };

std::string to_string(FeatureKind k);
std::string to_string(TimePoint t);
FeatureKind feature_kind_from_string(const std::string& s);
TimePoint timepoint_from_string(const std::string& s);

struct FeatureSchema {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // ordered; empty iff numeric
    TimePoint timepoint = TimePoint::t0;

    bool is_categorical() const { return kind != FeatureKind::numeric; }
};

struct Schema {
    std::vector<FeatureSchema> features;

    void validate() const;  // throws DataError on invariant violation
    std::size_t size() const { return features.size(); }
    std::optional<std::size_t> index_of(const std::string& name) const;
};

// Schema file: blank-line separated records of "key: value" lines with keys
// name, kind, timepoint and (for categorical kinds) categories. See README.
Schema load_schema(const std::string& path);
Schema parse_schema(const std::string& text);
void save_schema(const Schema& s, const std::string& path);

// A dataset as loaded from CSV: categorical cells still carry their category
// text, numeric cells are parsed. Missing = nullopt.
struct RawCell {
    std::optional<double> number;
    std::optional<std::string> text;
    bool missing() const { return !number && !text; }
};

struct RawDataset {
    Schema schema;
    std::vector<std::string> row_ids;
    std::vector<std::vector<RawCell>> cells;  // [row][feature]
};

// Encoded dataset: numeric matrix, categorical cells hold their ordinal code.
struct Dataset {
    Schema schema;
    std::vector<std::string> row_ids;
    Matrix values;
    std::vector<int> labels;  // empty when unlabeled; else one 0/1 per row

    std::size_t n_rows() const { return values.rows(); }
    std::size_t n_features() const { return values.cols(); }
    bool has_labels() const { return !labels.empty(); }
    Dataset select_rows(const std::vector<std::size_t>& idx) const;
    Dataset select_features(const std::vector<std::size_t>& idx) const;
};

RawDataset load_csv(const std::string& path, const std::string& schema_path);
RawDataset parse_csv(const std::string& csv_text, const Schema& schema, const std::string& origin);

Dataset encode_categoricals(const RawDataset& raw);
// Inverse of encode_categoricals for schema-valid encoded values.
RawDataset decode_categoricals(const Dataset& d);

// Writes an encoded dataset back to CSV (categorical cells as category text,
// missing as empty). Optional extra column appended, e.g. a label column.
void save_csv(const Dataset& d, const std::string& path,
              const std::string& label_column = "", const std::vector<double>& label_values = {});

struct LabelResult {
    std::vector<int> labels;                  // aligned with kept_rows
    std::vector<std::size_t> kept_rows;       // rows with an observed hours value
    std::vector<std::size_t> excluded_rows;   // rows excluded because hours missing
};

// Compliance labels: 1 iff average nightly hours at month 6 exceed 4.0.
LabelResult derive_labels(const std::vector<std::optional<double>>& avg_nightly_hours_m6);

struct SplitIndex {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::uint64_t seed = 0;
};

// Stratified train/test split. Per-label test counts come from a
// largest-remainder allocation of test_ratio * count, then totals are
// reconciled to round(test_ratio * n). Deterministic given seed.
SplitIndex stratified_split(const std::vector<int>& labels, double test_ratio, std::uint64_t seed);

}  // namespace cpapml
