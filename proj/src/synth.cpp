#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cpapml/rng.hpp"
#include "cpapml/synth.hpp"

namespace cpapml::synth {

namespace {

constexpr std::uint64_t kSynthTag = 0x73796e7468;  // "synth"

std::string padded(const std::string& prefix, std::size_t i, std::size_t total) {
    std::size_t width = std::to_string(total == 0 ? 1 : total - 1).size();
    std::string digits = std::to_string(i);
    return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

// Category distribution for an informative categorical: label-determined at
// noise 0, blended toward uniform as noise grows.
std::array<double, 3> category_probs(int label, double noise) {
    double w = 0.6 * std::clamp(noise, 0.0, 1.0);
    std::array<double, 3> pure = label == 1 ? std::array<double, 3>{0.0, 0.0, 1.0}
                                            : std::array<double, 3>{1.0, 0.0, 0.0};
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) out[c] = (1.0 - w) * pure[c] + w / 3.0;
    return out;
}

}  // namespace

SyntheticResult generate(const SyntheticSpec& spec) {
    if (spec.n_rows < 2) throw std::invalid_argument("synth: need at least 2 rows");
    if (spec.noise < 0.0) throw std::invalid_argument("synth: noise must be >= 0");
    std::size_t total = spec.n_numeric + spec.n_categorical;
    if (spec.n_informative > total)
        throw std::invalid_argument("synth: n_informative exceeds the feature count");
    auto n_pos = static_cast<std::size_t>(std::llround(spec.label_balance * spec.n_rows));
    if (n_pos < 1 || n_pos >= spec.n_rows)
        throw std::invalid_argument("synth: impossible label balance (needs both classes)");

    SyntheticResult res;
    std::vector<int> labels(spec.n_rows, 0);
    std::fill(labels.begin(), labels.begin() + n_pos, 1);
    auto label_rng = make_rng(spec.seed, {kSynthTag, 0});
    std::shuffle(labels.begin(), labels.end(), label_rng);

    std::size_t info_numeric = std::min(spec.n_informative, spec.n_numeric);
    std::size_t info_categorical = spec.n_informative - info_numeric;

    Schema schema;
    Matrix values(spec.n_rows, total + 1);
    for (std::size_t j = 0; j < spec.n_numeric; ++j) {
        FeatureSchema f;
        f.name = padded("num_", j, spec.n_numeric);
        schema.features.push_back(f);
        bool informative = j < info_numeric;
        if (informative) res.informative.push_back(f.name);
        auto rng = make_rng(spec.seed, {kSynthTag, 1, j});
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t i = 0; i < spec.n_rows; ++i) {
            double z = normal(rng);
            values.at(i, j) = informative ? 2.0 * labels[i] + spec.noise * z : z;
        }
    }
    for (std::size_t j = 0; j < spec.n_categorical; ++j) {
        FeatureSchema f;
        f.name = padded("cat_", j, spec.n_categorical);
        f.kind = FeatureKind::ordered_categorical;
        f.categories = {"a", "b", "c"};
        schema.features.push_back(f);
        bool informative = j < info_categorical;
        if (informative) res.informative.push_back(f.name);
        auto rng = make_rng(spec.seed, {kSynthTag, 2, j});
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < spec.n_rows; ++i) {
            double u = unit(rng);
            int code = 0;
            if (informative) {
                auto p = category_probs(labels[i], spec.noise);
                code = u < p[0] ? 0 : (u < p[0] + p[1] ? 1 : 2);
            } else {
                code = std::min(2, static_cast<int>(u * 3.0));
            }
            values.at(i, spec.n_numeric + j) = code;
        }
    }

    // Usage-hours column the compliance label derives from: positives clear
    // the 4-hour threshold, negatives stay below it.
    FeatureSchema hours;
    hours.name = kHoursColumn;
    schema.features.push_back(hours);
    auto hours_rng = make_rng(spec.seed, {kSynthTag, 3});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        double u = unit(hours_rng);
        values.at(i, total) = labels[i] == 1 ? 4.5 + 1.5 * u : 0.5 + 3.0 * u;
    }

    schema.validate();
    res.dataset.schema = schema;
    res.dataset.values = values;
    res.dataset.labels = labels;
    for (std::size_t i = 0; i < spec.n_rows; ++i)
        res.dataset.row_ids.push_back(padded("r", i, spec.n_rows));
    return res;
}

void write_synthetic(const SyntheticResult& r, const std::string& csv_path,
                     const std::string& schema_path, const std::string& truth_path) {
    save_csv(r.dataset, csv_path);
    save_schema(r.dataset.schema, schema_path);
    std::ofstream truth(truth_path, std::ios::binary);
    if (!truth) throw DataError("cannot write informative list: " + truth_path);
    for (const auto& name : r.informative) truth << name << "\n";
}

}  // namespace cpapml::synth
