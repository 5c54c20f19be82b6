#include <random>

#include "doctest.h"

#include "cpapml/stability.hpp"

using namespace cpapml;
using namespace cpapml::stability;

namespace {

// Numeric dataset with `informative` label-shifted signals at the front.
Dataset make_data(std::size_t n, std::size_t p, std::size_t informative, std::uint64_t seed,
                  double shift = 2.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Dataset d;
    for (std::size_t j = 0; j < p; ++j) {
        FeatureSchema f;
        f.name = "f" + std::to_string(j);
        d.schema.features.push_back(f);
    }
    d.values = Matrix(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        int label = static_cast<int>(i % 2);
        d.labels.push_back(label);
        d.row_ids.push_back("r" + std::to_string(i));
        for (std::size_t j = 0; j < p; ++j)
            d.values.at(i, j) = g(rng) + (j < informative && label ? shift : 0.0);
    }
    return d;
}

pipeline::PipelineSpec lasso_lr() {
    pipeline::PipelineSpec f;
    f.selector = "lasso_fs";
    f.algo = learners::Algo::lr;
    return f;
}

}  // namespace

TEST_CASE("stability separates signal from noise") {
    auto d = make_data(60, 12, 1, 1);
    StabilityConfig cfg;
    cfg.n_runs = 50;
    cfg.seed = 7;
    // selector C = 5; classifier LR C = 1, l2
    auto a = pipeline::expand_family(lasso_lr())[37];
    CHECK(a.learner.lr_C == 1.0);
    CHECK(a.learner.penalty == "l2");
    auto rep = stability_run(lasso_lr(), a, d, cfg);
    REQUIRE(rep.entries.size() == 12);
    CHECK(rep.failed_runs == 0);
    CHECK(rep.entries.front().feature == "f0");
    CHECK(rep.entries.front().stability >= 0.9);
    for (const auto& e : rep.entries)
        if (e.feature != "f0") CHECK(e.stability <= 0.3);
}

TEST_CASE("report invariants") {
    auto d = make_data(40, 6, 2, 3);
    StabilityConfig cfg;
    cfg.n_runs = 20;
    cfg.seed = 11;
    auto a = pipeline::expand_family(lasso_lr())[2];
    auto rep = stability_run(lasso_lr(), a, d, cfg);
    std::size_t total = 0;
    for (const auto& e : rep.entries) {
        CHECK(e.stability >= 0.0);
        CHECK(e.stability <= 1.0);
        CHECK(e.mean_weight >= 0.0);
        CHECK(e.mean_weight <= 1.0);
        total += e.selection_count;
    }
    CHECK(total <= 20 * 6);
    // sorted descending by stability, ties by weight
    for (std::size_t i = 1; i < rep.entries.size(); ++i) {
        const auto& a1 = rep.entries[i - 1];
        const auto& b1 = rep.entries[i];
        CHECK((a1.stability > b1.stability ||
               (a1.stability == b1.stability && a1.mean_weight >= b1.mean_weight)));
    }
}

TEST_CASE("deterministic given seed") {
    auto d = make_data(40, 8, 1, 5);
    StabilityConfig cfg;
    cfg.n_runs = 15;
    cfg.seed = 13;
    auto a = pipeline::expand_family(lasso_lr())[0];
    auto r1 = stability_run(lasso_lr(), a, d, cfg);
    auto r2 = stability_run(lasso_lr(), a, d, cfg);
    REQUIRE(r1.entries.size() == r2.entries.size());
    for (std::size_t i = 0; i < r1.entries.size(); ++i) {
        CHECK(r1.entries[i].feature == r2.entries[i].feature);
        CHECK(r1.entries[i].selection_count == r2.entries[i].selection_count);
        CHECK(r1.entries[i].mean_weight == r2.entries[i].mean_weight);
    }
}

TEST_CASE("random forest weights work too") {
    auto d = make_data(50, 8, 1, 9, 3.0);
    StabilityConfig cfg;
    cfg.n_runs = 15;
    cfg.seed = 17;
    pipeline::PipelineSpec f;
    f.algo = learners::Algo::rf;
    auto a = pipeline::expand_family(f)[0];
    auto rep = stability_run(f, a, d, cfg);
    CHECK(rep.entries.front().feature == "f0");
    CHECK(rep.entries.front().stability > 0.8);
}

TEST_CASE("refuses non-descriptive learners") {
    auto d = make_data(30, 4, 1, 21);
    StabilityConfig cfg;
    cfg.n_runs = 2;
    pipeline::PipelineSpec f;
    f.algo = learners::Algo::svm;
    auto a = pipeline::expand_family(f)[0];
    CHECK_THROWS_WITH(stability_run(f, a, d, cfg), doctest::Contains("non-descriptive"));
}

TEST_CASE("render_feature_ranking") {
    auto d = make_data(40, 9, 1, 23);
    StabilityConfig cfg;
    cfg.n_runs = 10;
    cfg.seed = 3;
    auto a = pipeline::expand_family(lasso_lr())[0];
    auto rep = stability_run(lasso_lr(), a, d, cfg);
    CHECK(render_feature_ranking(rep, 5).size() == 5);
    CHECK(render_feature_ranking(rep, 50).size() == 9);
    StabilityReport empty;
    CHECK(render_feature_ranking(empty, 10).empty());
}
