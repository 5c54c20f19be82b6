#include <cmath>
#include <random>

#include "doctest.h"

#include "cpapml/preprocess.hpp"

using namespace cpapml;
using namespace cpapml::preprocess;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[0].size(); ++c) m.at(r, c) = rows[r][c];
    return m;
}

constexpr double NA = std::numeric_limits<double>::quiet_NaN();

Dataset make_dataset(const std::vector<FeatureSchema>& feats, const std::vector<std::vector<double>>& rows,
                     std::vector<int> labels = {}) {
    Dataset d;
    d.schema.features = feats;
    d.values = from_rows(rows);
    for (std::size_t r = 0; r < rows.size(); ++r) d.row_ids.push_back("r" + std::to_string(r));
    d.labels = std::move(labels);
    return d;
}

FeatureSchema num(const std::string& name) { return {name, FeatureKind::numeric, {}, TimePoint::t0}; }
FeatureSchema bin(const std::string& name) { return {name, FeatureKind::binary, {"no", "yes"}, TimePoint::t0}; }
FeatureSchema cat3(const std::string& name) {
    return {name, FeatureKind::ordered_categorical, {"a", "b", "c"}, TimePoint::t0};
}

}  // namespace

TEST_CASE("imputation") {
    SUBCASE("numeric mean") {
        auto t = fit_impute(from_rows({{2}, {NA}, {4}}), {0});
        CHECK(t.fill[0] == doctest::Approx(3.0));
    }
    SUBCASE("categorical mode") {
        auto t = fit_impute(from_rows({{0}, {0}, {1}, {NA}}), {1});
        CHECK(t.fill[0] == 0.0);
    }
    SUBCASE("mode tie goes to smallest code") {
        auto t = fit_impute(from_rows({{0}, {0}, {1}, {1}, {NA}}), {1});
        CHECK(t.fill[0] == 0.0);
    }
    SUBCASE("entirely missing feature") {
        CHECK_THROWS(fit_impute(from_rows({{NA}, {NA}}), {0}));
    }
    SUBCASE("apply fills all and is identity on observed data") {
        Matrix m = from_rows({{1, NA}, {NA, 5}, {3, 7}});
        auto t = fit_impute(m, {0, 0});
        Matrix filled = apply_transform(t, m);
        CHECK(filled.at(0, 1) == doctest::Approx(6.0));
        CHECK(filled.at(1, 0) == doctest::Approx(2.0));
        Matrix again = apply_transform(t, filled);
        CHECK(again.data() == filled.data());
    }
}

TEST_CASE("variance filter") {
    SUBCASE("constant dropped, near-constant kept") {
        auto t = fit_variance_filter(from_rows({{7, 7, 1}, {7, 7.0001, 2}}));
        CHECK(t.keep == std::vector<std::uint8_t>{0, 1, 1});
    }
    SUBCASE("all constant errors") {
        CHECK_THROWS_WITH(fit_variance_filter(from_rows({{1, 2}, {1, 2}})),
                          doctest::Contains("no features remain"));
    }
}

TEST_CASE("standardization") {
    Matrix m = from_rows({{1}, {2}, {3}});
    auto t = fit_standardize(m);
    Matrix z = apply_transform(t, m);
    double mean = (z.at(0, 0) + z.at(1, 0) + z.at(2, 0)) / 3.0;
    double var = 0.0;
    for (int r = 0; r < 3; ++r) var += z.at(r, 0) * z.at(r, 0) / 3.0;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0));
    SUBCASE("population sd") { CHECK(t.sd[0] == doctest::Approx(std::sqrt(2.0 / 3.0))); }
    SUBCASE("held-out rows keep their own statistics") {
        Matrix held = from_rows({{10}, {20}});
        Matrix zh = apply_transform(t, held);
        CHECK(std::abs(zh.at(0, 0) + zh.at(1, 0)) > 1.0);  // mean far from 0
    }
    SUBCASE("sd=0 maps to 0") {
        auto tc = fit_standardize(from_rows({{5}, {5}}));
        CHECK(apply_transform(tc, from_rows({{5}, {9}})).at(1, 0) == 0.0);
    }
    SUBCASE("width mismatch") { CHECK_THROWS(apply_transform(t, from_rows({{1, 2}}))); }
}

TEST_CASE("rare category filter") {
    // 42 rows: one binary feature with a 4-row category (<= ceil(0.1*42)=5),
    // one balanced 21/21 binary.
    std::vector<std::vector<double>> rows(42, std::vector<double>(3, 0.0));
    for (int r = 0; r < 42; ++r) {
        rows[r][0] = r < 4 ? 1.0 : 0.0;
        rows[r][1] = r < 21 ? 1.0 : 0.0;
        rows[r][2] = 1.5 * r;  // numeric, untouched
    }
    Dataset d = make_dataset({bin("rare"), bin("balanced"), num("x")}, rows);
    PreprocessConfig cfg;
    auto res = rare_category_filter(d, cfg);
    REQUIRE(res.removals.size() == 1);
    CHECK(res.removals[0].feature == "rare");
    CHECK(res.dataset.n_features() == 2);

    SUBCASE("threshold 0 removes nothing") {
        cfg.rare_category_ratio = 0.0;
        CHECK(rare_category_filter(d, cfg).removals.empty());
    }
    SUBCASE("idempotent") {
        auto again = rare_category_filter(res.dataset, cfg);
        CHECK(again.removals.empty());
    }
}

TEST_CASE("nmi redundancy filter") {
    std::mt19937_64 rng(4);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int r = 0; r < 40; ++r) {
        double a = static_cast<double>(rng() % 3);
        double indep = static_cast<double>(rng() % 3);
        int label = static_cast<int>(rng() % 2);
        // "dup" copies a; "assoc" tracks the label so it survives its pair.
        rows.push_back({a, a, indep, static_cast<double>(label)});
        labels.push_back(label);
    }
    Dataset d = make_dataset({cat3("a"), cat3("dup"), cat3("indep"), bin("assoc")}, rows, labels);
    PreprocessConfig cfg;
    auto res = nmi_redundancy_filter(d, cfg);
    REQUIRE(res.removals.size() == 1);
    CHECK(res.removals[0].filter == "nmi_redundancy");
    CHECK(res.removals[0].score == doctest::Approx(1.0));
    CHECK((res.removals[0].feature == "a" || res.removals[0].feature == "dup"));
    CHECK(res.dataset.n_features() == 3);

    SUBCASE("below-threshold pairs untouched") {
        auto again = nmi_redundancy_filter(res.dataset, cfg);
        CHECK(again.removals.empty());
    }
}

TEST_CASE("correlation redundancy filter") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int r = 0; r < 40; ++r) {
        int label = static_cast<int>(rng() % 2);
        double x = g(rng) + label;  // associated with the label
        double noise = g(rng);
        rows.push_back({x, 2.0 * x, noise});
        labels.push_back(label);
    }
    Dataset d = make_dataset({num("x"), num("x2"), num("noise")}, rows, labels);
    PreprocessConfig cfg;
    auto res = correlation_redundancy_filter(d, cfg);
    REQUIRE(res.removals.size() == 1);
    CHECK(res.removals[0].score == doctest::Approx(1.0));
    CHECK(res.dataset.n_features() == 2);
    SUBCASE("uncorrelated columns are identity") {
        auto again = correlation_redundancy_filter(res.dataset, cfg);
        CHECK(again.removals.empty());
    }
}

TEST_CASE("describe dataset") {
    std::mt19937_64 rng(21);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int r = 0; r < 60; ++r) {
        int label = static_cast<int>(rng() % 2);
        rows.push_back({static_cast<double>(label), static_cast<double>(rng() % 2),
                        static_cast<double>(rng() % 1000) / 100.0});
        if (r % 5 == 0) rows.back()[2] = NA;
        labels.push_back(label);
    }
    Dataset d = make_dataset({bin("label_copy"), bin("coin"), num("noise")}, rows, labels);
    auto desc = describe_dataset(d, {});
    REQUIRE(desc.size() == 3);
    CHECK(desc[0].method == "chi-square");
    CHECK(desc[0].p_value < 1e-6);
    CHECK(desc[0].significant);
    CHECK(desc[2].method == "mann-whitney-u-normal");
    CHECK(desc[2].missing_count == 12);
    CHECK(desc[2].missing_ratio == doctest::Approx(0.2));
}
