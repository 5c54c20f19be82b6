#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cpapml/config.hpp"
#include "cpapml/runner.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Reports must be byte-identical at any worker count; the manifest records
// wall time and is the only file allowed to differ.
bool reports_match(const fs::path& a, const fs::path& b) {
    bool ok = true;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().filename() == "manifest.json") continue;
        fs::path other = b / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
            std::cerr << "mismatch: " << entry.path().filename().string() << "\n";
            ok = false;
        }
    }
    return ok;
}

double timed_run(cpapml::config::ExperimentConfig cfg, const std::string& out, int jobs) {
    cfg.out = out;
    cfg.jobs = jobs;
    auto t0 = std::chrono::steady_clock::now();
    cpapml::runner::cmd_run(cfg);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cpap run benchmark: serial reference vs parallel kernels"};
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    std::size_t rows = 42;
    std::uint64_t seed = 7;
    std::string work = "bench_out";
    std::string grid =
        "none+none+f1_weighted+lr,none+combine_fs+f1_weighted+knn,smote+lasso_fs+f1_weighted+rf,"
        "none+combine_fs+precision_weighted+svm,smote+none+f1_weighted+nn";
    app.add_option("--jobs", jobs, "parallel worker count (compared against 1)");
    app.add_option("--rows", rows, "synthetic dataset rows");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", work, "work directory");
    app.add_option("--grid", grid, "family-id restriction for the benchmark run");
    CLI11_PARSE(app, argc, argv);
    if (jobs < 1) jobs = 2;

    try {
        fs::create_directories(work);
        cpapml::synth::SyntheticSpec spec;
        spec.n_rows = rows;
        spec.n_informative = 3;
        spec.noise = 0.5;
        spec.seed = seed;
        cpapml::runner::cmd_synth(spec, work + "/data");

        cpapml::config::ExperimentConfig cfg;
        cfg.datasets.push_back({"bench", work + "/data/synthetic.csv", work + "/data/synthetic.schema"});
        cfg.seed = seed;
        cfg.seed_set = true;
        std::string id;
        std::stringstream ss(grid);
        while (std::getline(ss, id, ','))
            if (!id.empty()) cfg.grid.push_back(id);

        double serial = timed_run(cfg, work + "/serial", 1);
        double parallel = timed_run(cfg, work + "/parallel", jobs);
        bool same = reports_match(work + "/serial", work + "/parallel");

        std::printf("serial   (1 job):  %.2fs\n", serial);
        std::printf("parallel (%d jobs): %.2fs\n", jobs, parallel);
        std::printf("speedup: %.2fx, reports %s\n", serial / parallel,
                    same ? "byte-identical" : "DIFFER");
        return same ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "bench error: " << e.what() << "\n";
        return 2;
    }
}
