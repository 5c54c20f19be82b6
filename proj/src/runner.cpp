#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "cpapml/evaluation.hpp"
#include "cpapml/model_io.hpp"
#include "cpapml/pipeline.hpp"
#include "cpapml/rng.hpp"
#include "cpapml/runner.hpp"
#include "cpapml/stability.hpp"

namespace cpapml::runner {

namespace fs = std::filesystem;
namespace io = learners::io;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kRunTag = 0x72756e;    // "run"
constexpr std::uint64_t kStabTag = 0x737463;   // stability command

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string mean_sd_text(double mean, double sd) { return fmt2(mean) + "+/-" + fmt2(sd); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path);
    return out;
}

// fold statistics for one metric of a CV result
std::pair<double, double> fold_stats(const std::vector<evaluation::MetricSet>& folds,
                                     const std::string& metric) {
    if (folds.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (const auto& m : folds) sum += m.metric(metric);
    double mean = sum / folds.size();
    double var = 0.0;
    for (const auto& m : folds) var += (m.metric(metric) - mean) * (m.metric(metric) - mean);
    return {mean, std::sqrt(var / folds.size())};
}

void set_jobs(const config::ExperimentConfig& cfg) {
#ifdef _OPENMP
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#else
    (void)cfg;
#endif
}

std::vector<pipeline::PipelineSpec> configured_families(const config::ExperimentConfig& cfg) {
    auto families = pipeline::enumerate_grid();
    if (cfg.exclude_same_algorithm) families = pipeline::apply_exclusion(families);
    if (!cfg.grid.empty()) {
        std::vector<pipeline::PipelineSpec> kept;
        for (const auto& f : pipeline::enumerate_grid()) {
            if (std::find(cfg.grid.begin(), cfg.grid.end(), f.family_id()) != cfg.grid.end())
                kept.push_back(f);
        }
        families = kept;
    }
    if (families.empty()) throw config::ConfigError("config: grid restriction left no families");
    return families;
}

bool descriptive(learners::Algo a) { return a == learners::Algo::lr || a == learners::Algo::rf; }

}  // namespace

LoadedDataset load_labeled(const config::DatasetEntry& entry, const std::string& label_column) {
    LoadedDataset out;
    out.name = entry.name;
    Dataset full = encode_categoricals(load_csv(entry.csv, entry.schema));
    auto col = full.schema.index_of(label_column);
    if (!col) throw DataError(entry.name + ": label column '" + label_column + "' not found");
    std::vector<std::optional<double>> hours(full.n_rows());
    for (std::size_t i = 0; i < full.n_rows(); ++i) {
        double v = full.values.at(i, *col);
        if (!Matrix::is_missing(v)) hours[i] = v;
    }
    LabelResult lr = derive_labels(hours);
    Dataset kept = full.select_rows(lr.kept_rows);
    std::vector<std::size_t> feature_idx;
    for (std::size_t j = 0; j < kept.n_features(); ++j)
        if (j != *col) feature_idx.push_back(j);
    out.data = kept.select_features(feature_idx);
    out.data.labels = lr.labels;
    for (std::size_t i : lr.kept_rows) out.hours.push_back(*hours[i]);
    return out;
}

int cmd_describe(const config::ExperimentConfig& cfg) {
    config::validate_config(cfg);
    fs::create_directories(cfg.out);
    for (const auto& entry : cfg.datasets) {
        try {
            LoadedDataset ds = load_labeled(entry, cfg.label_column);
            auto table = preprocess::describe_dataset(ds.data, cfg.pre);
            auto out = open_out(cfg.out + "/describe_" + ds.name + ".csv");
            out << "feature,method,statistic,p_value,significant,missing_count,missing_ratio\n";
            for (const auto& row : table)
                out << csv_field(row.feature) << "," << row.method << "," << io::num(row.statistic) << ","
                    << io::num(row.p_value) << "," << (row.significant ? 1 : 0) << "," << row.missing_count
                    << "," << io::num(row.missing_ratio) << "\n";
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(entry.name + ": " + e.what());
        }
    }
    return 0;
}

int cmd_preprocess(const config::ExperimentConfig& cfg) {
    config::validate_config(cfg);
    fs::create_directories(cfg.out);
    for (const auto& entry : cfg.datasets) {
        try {
            LoadedDataset ds = load_labeled(entry, cfg.label_column);
            std::vector<preprocess::Removal> removals;
            auto step = [&](preprocess::FilterResult r) {
                removals.insert(removals.end(), r.removals.begin(), r.removals.end());
                ds.data = std::move(r.dataset);
            };
            step(preprocess::rare_category_filter(ds.data, cfg.pre));
            step(preprocess::nmi_redundancy_filter(ds.data, cfg.pre));
            step(preprocess::correlation_redundancy_filter(ds.data, cfg.pre));

            save_csv(ds.data, cfg.out + "/clean_" + ds.name + ".csv", cfg.label_column, ds.hours);
            Schema clean_schema = ds.data.schema;
            FeatureSchema hours_col;
            hours_col.name = cfg.label_column;
            clean_schema.features.push_back(hours_col);
            save_schema(clean_schema, cfg.out + "/clean_" + ds.name + ".schema");

            auto out = open_out(cfg.out + "/removals_" + ds.name + ".csv");
            out << "feature,filter,score,p_value,kept_partner\n";
            for (const auto& r : removals)
                out << csv_field(r.feature) << "," << r.filter << "," << io::num(r.score) << ","
                    << io::num(r.p_value) << "," << csv_field(r.kept_partner) << "\n";
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(entry.name + ": " + e.what());
        }
    }
    return 0;
}

namespace {

struct GroupTask {
    std::size_t ds = 0;
    pipeline::PipelineSpec probe;      // metric slot ignored by the inner loop
    std::uint64_t seed = 0;
    std::vector<evaluation::CellScore> cells;
    std::string error;
};

struct FamilyState {
    pipeline::PipelineSpec spec;
    std::size_t group = 0;
    pipeline::HyperAssignment best;
    bool has_best = false;
    evaluation::CvResult cv;
    evaluation::MetricSet test;
    bool test_ok = false;
    std::unique_ptr<pipeline::FittedPipeline> fitted;
    std::vector<std::pair<std::string, std::string>> failures;  // (stage, message)
};

struct DsState {
    std::string name;
    Dataset data;
    SplitIndex split;
    Matrix train, test;
    std::vector<int> train_labels, test_labels;
    std::vector<std::uint8_t> categorical;
    std::vector<FamilyState> families;
    std::vector<std::size_t> rank;
    std::uint64_t outer_seed = 0;
};

void write_pipeline_report(const config::ExperimentConfig& cfg, const DsState& ds) {
    auto out = open_out(cfg.out + "/pipelines_" + ds.name + ".csv");
    out << "ds,sm,fs,metric,cls,params,cv_prec,cv_rec,cv_f1,test_prec,test_rec,test_f1\n";
    for (std::size_t r : ds.rank) {
        const FamilyState& f = ds.families[r];
        auto [pm, ps] = fold_stats(f.cv.folds, "precision_weighted");
        auto [rm, rs] = fold_stats(f.cv.folds, "recall_weighted");
        out << ds.name << "," << f.spec.sampler << "," << f.spec.selector << "," << f.spec.learning_metric
            << "," << learners::to_string(f.spec.algo) << ","
            << csv_field(f.has_best ? f.best.learner.params_text() : "[]") << "," << mean_sd_text(pm, ps)
            << "," << mean_sd_text(rm, rs) << "," << mean_sd_text(f.cv.mean, f.cv.sd) << ","
            << fmt2(f.test.precision_weighted) << "," << fmt2(f.test.recall_weighted) << ","
            << fmt2(f.test.f1_weighted) << "\n";
    }
}

std::size_t write_failures(const config::ExperimentConfig& cfg, const DsState& ds) {
    auto out = open_out(cfg.out + "/failures_" + ds.name + ".csv");
    out << "family,stage,message\n";
    std::size_t n = 0;
    for (const auto& f : ds.families)
        for (const auto& [stage, message] : f.failures) {
            out << csv_field(f.spec.family_id()) << "," << stage << "," << csv_field(message) << "\n";
            ++n;
        }
    return n;
}

}  // namespace

int cmd_run(const config::ExperimentConfig& cfg) {
    config::validate_config(cfg);
    set_jobs(cfg);
    fs::create_directories(cfg.out);
    auto t_start = std::chrono::steady_clock::now();
    auto families = configured_families(cfg);

    std::vector<DsState> states(cfg.datasets.size());
    std::vector<GroupTask> tasks;
    for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
        DsState& ds = states[i];
        LoadedDataset loaded = load_labeled(cfg.datasets[i], cfg.label_column);
        ds.name = loaded.name;
        ds.data = std::move(loaded.data);
        if (ds.data.n_rows() < 2 * cfg.k)
            std::cerr << "warning: " << ds.name << " has " << ds.data.n_rows() << " rows for k=" << cfg.k
                      << "\n";
        ds.split = stratified_split(ds.data.labels, cfg.test_ratio, derive_seed(cfg.seed, {kRunTag, i, 0}));
        ds.train = ds.data.values.select_rows(ds.split.train_rows);
        ds.test = ds.data.values.select_rows(ds.split.test_rows);
        for (std::size_t r : ds.split.train_rows) ds.train_labels.push_back(ds.data.labels[r]);
        for (std::size_t r : ds.split.test_rows) ds.test_labels.push_back(ds.data.labels[r]);
        ds.categorical = stability::categorical_mask(ds.data.schema);
        ds.outer_seed = derive_seed(cfg.seed, {kRunTag, i, 2});

        std::map<std::string, std::size_t> group_of;
        for (const auto& spec : families) {
            std::string key = spec.selector + "|" + spec.sampler + "|" + learners::to_string(spec.algo);
            auto it = group_of.find(key);
            if (it == group_of.end()) {
                it = group_of.emplace(key, tasks.size()).first;
                GroupTask t;
                t.ds = i;
                t.probe = spec;
                t.seed = derive_seed(cfg.seed, {kRunTag, i, 1, group_of.size() - 1});
                tasks.push_back(std::move(t));
            }
            FamilyState f;
            f.spec = spec;
            f.group = it->second;
            ds.families.push_back(std::move(f));
        }
    }

    // Inner hyperparameter search: one pass per (dataset, selector, sampler,
    // classifier) group scores both learning metrics at once.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        GroupTask& task = tasks[t];
        DsState& ds = states[task.ds];
        try {
            task.cells = evaluation::evaluate_inner_cells(task.probe, ds.train, ds.train_labels,
                                                          ds.categorical, task.seed, cfg.inner_reps, 0.30,
                                                          cfg.inner_mode);
        } catch (const std::exception& e) {
            task.error = e.what();
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> outer_jobs;  // (ds, family)
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t fi = 0; fi < states[i].families.size(); ++fi) {
            FamilyState& f = states[i].families[fi];
            const GroupTask& task = tasks[f.group];
            if (!task.error.empty()) {
                f.failures.emplace_back("inner", task.error);
                continue;
            }
            std::size_t best = evaluation::pick_best_cell(task.cells, f.spec.learning_metric);
            f.best = pipeline::expand_family(f.spec)[best];
            f.has_best = true;
            if (task.cells[best].failed_reps > 0)
                f.failures.emplace_back("inner", task.cells[best].failure);
            outer_jobs.emplace_back(i, fi);
        }
    }

    // Outer 10-fold CV of each family's selected assignment; folds are shared
    // within a dataset because the seed is.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t j = 0; j < outer_jobs.size(); ++j) {
        auto [i, fi] = outer_jobs[j];
        DsState& ds = states[i];
        FamilyState& f = ds.families[fi];
        try {
            f.cv = evaluation::outer_evaluate(f.spec, f.best, ds.train, ds.train_labels, ds.categorical,
                                              ds.outer_seed, cfg.k);
        } catch (const std::exception& e) {
            f.failures.emplace_back("outer", e.what());
        }
        try {
            auto fitted = std::make_unique<pipeline::FittedPipeline>(
                pipeline::fit_pipeline(f.spec, f.best, ds.train, ds.train_labels, ds.categorical,
                                       derive_seed(cfg.seed, {kRunTag, i, 3, fi})));
            f.test = evaluation::test_evaluate(*fitted, ds.test, ds.test_labels);
            f.fitted = std::move(fitted);
            f.test_ok = true;
        } catch (const std::exception& e) {
            f.failures.emplace_back("test", e.what());
        }
    }

    std::size_t total_failures = 0;
    json manifest_datasets = json::array();
    for (std::size_t i = 0; i < states.size(); ++i) {
        DsState& ds = states[i];
        for (auto& f : ds.families)
            for (const auto& msg : f.cv.failures) f.failures.emplace_back("outer", msg);
        std::vector<evaluation::CvResult> cvs;
        for (const auto& f : ds.families) cvs.push_back(f.cv);
        ds.rank = evaluation::rank_pipelines(cvs);
        write_pipeline_report(cfg, ds);
        total_failures += write_failures(cfg, ds);

        const FamilyState& best = ds.families[ds.rank.front()];
        if (best.fitted) {
            pipeline::save_pipeline(*best.fitted, cfg.out + "/best_pipeline_" + ds.name + ".cpap");
            try {
                auto curve = evaluation::roc_curve(ds.test_labels, pipeline::pipeline_scores(*best.fitted, ds.test));
                auto out = open_out(cfg.out + "/roc_" + ds.name + ".csv");
                out << "fpr,tpr\n";
                for (const auto& p : curve) out << io::num(p.fpr) << "," << io::num(p.tpr) << "\n";
            } catch (const std::exception& e) {
                std::cerr << ds.name << ": roc skipped: " << e.what() << "\n";
            }
            auto lc = evaluation::learning_curve(best.spec, best.best, ds.train, ds.train_labels,
                                                 ds.categorical, evaluation::kDefaultFractions,
                                                 derive_seed(cfg.seed, {kRunTag, i, 4}), cfg.k);
            auto out = open_out(cfg.out + "/curve_" + ds.name + ".csv");
            out << "fraction,train_mean,train_sd,validation_mean,validation_sd\n";
            for (const auto& p : lc)
                out << io::num(p.fraction) << "," << io::num(p.train_mean) << "," << io::num(p.train_sd)
                    << "," << io::num(p.validation_mean) << "," << io::num(p.validation_sd) << "\n";
        }
        std::cout << ds.name << ": best " << best.spec.family_id() << " cv_f1 " << fmt2(best.cv.mean)
                  << "+/-" << fmt2(best.cv.sd) << " test_f1 " << fmt2(best.test.f1_weighted) << "\n";
        manifest_datasets.push_back({{"name", ds.name},
                                     {"rows", ds.data.n_rows()},
                                     {"features", ds.data.n_features()},
                                     {"families", ds.families.size()},
                                     {"best_family", best.spec.family_id()},
                                     {"best_cv_f1", best.cv.mean},
                                     {"best_test_f1", best.test.f1_weighted}});
    }

    // Table-3-style comparisons: dataset bests against each other, and each
    // dataset's best against its best descriptive pipeline.
    {
        auto out = open_out(cfg.out + "/comparisons.csv");
        out << "pipelines,difference,statistic,p_value\n";
        auto emit = [&](const std::string& label, const evaluation::CvResult& a,
                        const evaluation::CvResult& b) {
            auto c = evaluation::compare_pipelines(a.fold_scores, b.fold_scores);
            out << csv_field(label) << "," << io::num(c.mean_difference) << "," << io::num(c.test.statistic)
                << "," << io::num(c.test.p_value) << "\n";
        };
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j)
                emit(states[i].name + " best vs " + states[j].name + " best",
                     states[i].families[states[i].rank.front()].cv,
                     states[j].families[states[j].rank.front()].cv);
        for (const auto& ds : states) {
            const FamilyState& best = ds.families[ds.rank.front()];
            for (std::size_t r : ds.rank) {
                const FamilyState& cand = ds.families[r];
                if (!descriptive(cand.spec.algo)) continue;
                if (cand.spec.family_id() != best.spec.family_id())
                    emit(ds.name + " best vs " + ds.name + " best_descriptive", best.cv, cand.cv);
                break;
            }
        }
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    json manifest = {{"tool", "cpap"},
                     {"version", "1.0.0"},
                     {"config_hash", config::config_hash(cfg.raw_text)},
                     {"seed", cfg.seed},
                     {"jobs", cfg.jobs},
                     {"families", families.size()},
                     {"failures", total_failures},
                     {"wall_time_seconds", wall},
                     {"datasets", manifest_datasets}};
    open_out(cfg.out + "/manifest.json") << manifest.dump(2) << "\n";

    return total_failures > 0 ? 3 : 0;
}

int cmd_stability(const config::ExperimentConfig& cfg, const std::string& pipeline_id) {
    config::validate_config(cfg);
    fs::create_directories(cfg.out);
    bool matched = false;
    for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
        const auto& entry = cfg.datasets[i];
        if (!pipeline_id.empty() && entry.name != pipeline_id) continue;
        matched = true;
        std::string path = cfg.out + "/best_pipeline_" + entry.name + ".cpap";
        if (!std::ifstream(path))
            throw DataError(entry.name + ": no saved pipeline at " + path + " (run `cpap run` first)");
        pipeline::FittedPipeline p = pipeline::load_pipeline(path);
        if (!descriptive(p.spec.algo)) {
            std::cerr << "stability: pipeline " << entry.name << " (" << p.spec.family_id()
                      << ") is not descriptive; stability needs logistic regression or random forest\n";
            return 1;
        }
        LoadedDataset ds = load_labeled(entry, cfg.label_column);
        stability::StabilityConfig scfg;
        scfg.seed = derive_seed(cfg.seed, {kStabTag, i});
        auto report = stability::stability_run(p.spec, p.assignment, ds.data, scfg);
        auto top = stability::render_feature_ranking(report, cfg.top_k);
        auto out = open_out(cfg.out + "/stability_" + entry.name + ".csv");
        out << "feature,stability,mean_weight\n";
        for (const auto& e : top)
            out << csv_field(e.feature) << "," << io::num(e.stability) << "," << io::num(e.mean_weight)
                << "\n";
        std::cout << entry.name << ": stability over " << report.n_runs << " runs, top feature "
                  << (top.empty() ? std::string("<none>") : top.front().feature) << "\n";
    }
    if (!matched) throw config::ConfigError("stability: no dataset named '" + pipeline_id + "'");
    return 0;
}

int cmd_synth(const synth::SyntheticSpec& spec, const std::string& out_dir) {
    fs::create_directories(out_dir);
    synth::SyntheticResult r = synth::generate(spec);
    synth::write_synthetic(r, out_dir + "/synthetic.csv", out_dir + "/synthetic.schema",
                           out_dir + "/informative.txt");
    std::cout << "wrote " << r.dataset.n_rows() << "x" << (r.dataset.n_features() - 1)
              << " dataset (+" << synth::kHoursColumn << ") to " << out_dir << "\n";
    return 0;
}

}  // namespace cpapml::runner
