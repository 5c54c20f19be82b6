#pragma once

#include <string>
#include <vector>

#include "cpapml/config.hpp"
#include "cpapml/dataset.hpp"
#include "cpapml/synth.hpp"

namespace cpapml::runner {

struct LoadedDataset {
    std::string name;
    Dataset data;               // label column dropped, labels derived
    std::vector<double> hours;  // source column, aligned with kept rows
};

// Loads CSV+schema, derives compliance labels from the configured hours
// column, drops rows with missing hours and the column itself.
LoadedDataset load_labeled(const config::DatasetEntry& entry, const std::string& label_column);

// CLI entry points. All return process exit codes: 0 success, 1 config
// error (thrown as config::ConfigError by callers), 2 data error, 3 partial
// run. They throw; main() maps exceptions to codes.
int cmd_describe(const config::ExperimentConfig& cfg);
int cmd_preprocess(const config::ExperimentConfig& cfg);
int cmd_run(const config::ExperimentConfig& cfg);
// pipeline_id = dataset name whose saved best pipeline to analyze; empty =
// every dataset in the config.
int cmd_stability(const config::ExperimentConfig& cfg, const std::string& pipeline_id);
int cmd_synth(const synth::SyntheticSpec& spec, const std::string& out_dir);

}  // namespace cpapml::runner
