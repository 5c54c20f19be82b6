#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpapml/evaluation.hpp"
#include "cpapml/preprocess.hpp"

namespace cpapml::config {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetEntry {
    std::string name;    // e.g. "d0"
    std::string csv;     // CSV path
    std::string schema;  // schema path
};

// Parsed experiment configuration. Flat "key = value" lines grouped under
// [data] / [split] / [preprocess] / [run] section headers; see README for the
// grammar.
struct ExperimentConfig {
    std::vector<DatasetEntry> datasets;
    std::string label_column = "avg_nightly_hours_m6";

    double test_ratio = 0.30;
    std::size_t k = 10;
    std::uint64_t seed = 0;
    bool seed_set = false;  // no wall-clock seeding: a seed is mandatory
    evaluation::InnerMode inner_mode = evaluation::InnerMode::repeated_resample;
    int inner_reps = 10;

    preprocess::PreprocessConfig pre;

    std::string out = "out";
    std::vector<std::string> grid;  // family-id restriction; empty = full grid
    bool exclude_same_algorithm = true;
    std::size_t top_k = 10;
    int jobs = 0;  // 0 = machine parallelism

    std::string raw_text;  // exact file contents, hashed into the manifest
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin);
// Reads the file, parses it, and applies the CPAPML_OUT environment override.
ExperimentConfig load_config(const std::string& path);

// Checks the cross-field invariants load_config cannot see alone: seed set,
// at least one dataset, referenced files readable, grid ids known.
void validate_config(const ExperimentConfig& cfg);

// FNV-1a 64-bit hash of the raw config text, as 16 hex digits.
std::string config_hash(const std::string& text);

}  // namespace cpapml::config
