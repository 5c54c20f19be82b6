#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cpapml/config.hpp"
#include "cpapml/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::int64_t seed = -1;
    int jobs = -1;
    std::string grid;
    std::size_t top_k = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config = true) {
    auto* opt = cmd->add_option("--config", f.config_path, "experiment config file");
    if (needs_config) opt->required();
    cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
    cmd->add_option("--out", f.out, "output directory (overrides the config)");
    cmd->add_option("--jobs", f.jobs, "worker count; 0 = machine parallelism");
    cmd->add_option("--grid", f.grid, "comma-separated family-id restriction");
    cmd->add_option("--top-k", f.top_k, "rows in ranked reports (default 10)");
}

cpapml::config::ExperimentConfig load(const CommonFlags& f) {
    auto cfg = cpapml::config::load_config(f.config_path);
    if (f.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(f.seed);
        cfg.seed_set = true;
    }
    if (!f.out.empty()) cfg.out = f.out;
    if (f.jobs >= 0) cfg.jobs = f.jobs;
    if (f.top_k > 0) cfg.top_k = f.top_k;
    if (!f.grid.empty()) {
        cfg.grid.clear();
        std::string id;
        std::stringstream ss(f.grid);
        while (std::getline(ss, id, ','))
            if (!id.empty()) cfg.grid.push_back(id);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CPAP-compliance pipeline experimentation engine"};
    app.require_subcommand(1);

    CommonFlags describe_f, preprocess_f, run_f, stability_f;
    std::string stability_id;
    auto* describe = app.add_subcommand("describe", "per-feature statistical description");
    add_common(describe, describe_f);
    auto* preprocess = app.add_subcommand("preprocess", "rare-category/NMI/correlation filters + ledger");
    add_common(preprocess, preprocess_f);
    auto* run = app.add_subcommand("run", "full nested-CV study over the pipeline grid");
    add_common(run, run_f);
    auto* stability = app.add_subcommand("stability", "stability selection for a saved best pipeline");
    add_common(stability, stability_f);
    stability->add_option("--pipeline", stability_id, "dataset name whose best pipeline to analyze");

    cpapml::synth::SyntheticSpec spec;
    std::string synth_out = "out";
    auto* synth = app.add_subcommand("synth", "generate a synthetic stand-in dataset");
    synth->add_option("--rows", spec.n_rows, "row count");
    synth->add_option("--numeric", spec.n_numeric, "numeric feature count");
    synth->add_option("--categorical", spec.n_categorical, "categorical feature count");
    synth->add_option("--informative", spec.n_informative, "informative feature count");
    synth->add_option("--balance", spec.label_balance, "positive-label fraction");
    synth->add_option("--noise", spec.noise, "noise level; 0 = separable");
    synth->add_option("--seed", spec.seed, "generator seed")->required();
    synth->add_option("--out", synth_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (describe->parsed()) return cpapml::runner::cmd_describe(load(describe_f));
        if (preprocess->parsed()) return cpapml::runner::cmd_preprocess(load(preprocess_f));
        if (run->parsed()) return cpapml::runner::cmd_run(load(run_f));
        if (stability->parsed()) return cpapml::runner::cmd_stability(load(stability_f), stability_id);
        if (synth->parsed()) return cpapml::runner::cmd_synth(spec, synth_out);
    } catch (const cpapml::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const cpapml::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
