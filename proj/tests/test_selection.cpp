#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "cpapml/selection.hpp"

using namespace cpapml;
using namespace cpapml::selection;

namespace {

// p noise features plus a label-shifted signal column at `signal`.
Matrix noise_with_signal(std::size_t n, std::size_t p, std::size_t signal, const std::vector<int>& y,
                         std::uint64_t seed, double shift = 3.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix x(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            x.at(i, j) = g(rng) + (j == signal && y[i] ? shift : 0.0);
    return x;
}

std::vector<int> alternating(std::size_t n) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
    return y;
}

std::size_t popcount(const std::vector<std::uint8_t>& mask) {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

}  // namespace

TEST_CASE("combine_fs") {
    SUBCASE("percentile 50 keeps 5 of 10") {
        auto y = alternating(40);
        auto x = noise_with_signal(40, 10, 0, y, 1);
        std::vector<std::uint8_t> cat(10, 0);
        auto r = combine_fs(x, y, cat, 50);
        CHECK(popcount(r.mask) == 5);
        CHECK(r.mask[0] == 1);  // the signal survives
        CHECK_FALSE(r.warning);
    }
    SUBCASE("percentile 5 of 54 keeps 3 by ceil") {
        auto y = alternating(30);
        auto x = noise_with_signal(30, 54, 7, y, 2);
        std::vector<std::uint8_t> cat(54, 0);
        CHECK(popcount(combine_fs(x, y, cat, 5).mask) == 3);
    }
    SUBCASE("at least one feature survives") {
        auto y = alternating(20);
        auto x = noise_with_signal(20, 4, 1, y, 3);
        std::vector<std::uint8_t> cat(4, 0);
        auto r = combine_fs(x, y, cat, 1);  // ceil(0.01*4) = 1
        CHECK(popcount(r.mask) == 1);
        CHECK(r.mask[1] == 1);
    }
    SUBCASE("label copy ranks first") {
        auto y = alternating(30);
        Matrix x(30, 6);
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g;
        for (std::size_t i = 0; i < 30; ++i) {
            x.at(i, 0) = g(rng);
            x.at(i, 1) = y[i];
            for (std::size_t j = 2; j < 6; ++j) x.at(i, j) = g(rng);
        }
        std::vector<std::uint8_t> cat(6, 0);
        auto r = combine_fs(x, y, cat, 20);  // keeps ceil(1.2)=2
        CHECK(r.mask[1] == 1);
    }
    SUBCASE("categorical scoring shifts negatives and uses chi-square") {
        auto y = alternating(40);
        Matrix x(40, 3);
        std::mt19937_64 rng(5);
        for (std::size_t i = 0; i < 40; ++i) {
            x.at(i, 0) = y[i] ? 1.0 : -1.0;                       // perfectly associated, negative codes
            x.at(i, 1) = static_cast<double>(rng() % 3) - 1.0;    // noise codes
            x.at(i, 2) = static_cast<double>(rng() % 3) - 1.0;
        }
        std::vector<std::uint8_t> cat = {1, 1, 1};
        auto r = combine_fs(x, y, cat, 34);  // keeps ceil(1.02)=2; slot 0 must be in
        CHECK(r.mask[0] == 1);
    }
    SUBCASE("duplicating a feature never changes which originals pass") {
        auto y = alternating(36);
        auto x = noise_with_signal(36, 8, 2, y, 6);
        std::vector<std::uint8_t> cat(8, 0);
        auto base = combine_fs(x, y, cat, 50);
        Matrix wide(36, 9);
        for (std::size_t i = 0; i < 36; ++i) {
            for (std::size_t j = 0; j < 8; ++j) wide.at(i, j) = x.at(i, j);
            wide.at(i, 8) = x.at(i, 2);
        }
        std::vector<std::uint8_t> cat9(9, 0);
        auto dup = combine_fs(wide, y, cat9, 50);  // keeps ceil(4.5)=5
        for (std::size_t j = 0; j < 8; ++j)
            if (base.mask[j]) CHECK(dup.mask[j] == 1);
    }
    SUBCASE("constant feature ranks last, not an error") {
        auto y = alternating(20);
        Matrix x(20, 2);
        for (std::size_t i = 0; i < 20; ++i) {
            x.at(i, 0) = 7.0;
            x.at(i, 1) = y[i] + 0.1 * static_cast<double>(i);
        }
        auto r = combine_fs(x, y, {0, 0}, 50);
        CHECK(r.mask[0] == 0);
        CHECK(r.mask[1] == 1);
    }
}

TEST_CASE("lasso_fs") {
    auto y = alternating(60);
    SUBCASE("tiny C shrinks noise to a near-empty mask") {
        auto x = noise_with_signal(60, 10, 3, y, 7, 0.0);  // pure noise
        auto r = lasso_fs(x, y, 1e-3);
        CHECK(popcount(r.mask) == 1);  // floor enforced by the non-empty invariant
    }
    SUBCASE("single informative feature survives the whole C grid") {
        auto x = noise_with_signal(60, 10, 3, y, 8);
        for (double C : {5.0, 10.0, 20.0, 30.0, 40.0, 50.0}) {
            auto r = lasso_fs(x, y, C);
            INFO("C=", C);
            CHECK(r.mask[3] == 1);
            CHECK_FALSE(r.warning);
        }
    }
    SUBCASE("regularization path tends to grow with C") {
        auto x = noise_with_signal(60, 12, 5, y, 9, 1.5);
        auto tight = lasso_fs(x, y, 0.01);
        auto loose = lasso_fs(x, y, 50.0);
        CHECK(popcount(loose.mask) >= popcount(tight.mask));
    }
}

TEST_CASE("rfe_rf_fs") {
    SUBCASE("target 0.4 of 70 keeps 28") {
        auto y = alternating(40);
        auto x = noise_with_signal(40, 70, 0, y, 10);
        auto r = rfe_rf_fs(x, y, 0.1, 0.4, 99);
        CHECK(popcount(r.mask) == 28);
    }
    SUBCASE("mask size is exact for every grid target") {
        auto y = alternating(30);
        auto x = noise_with_signal(30, 23, 0, y, 11);
        CHECK(popcount(rfe_rf_fs(x, y, 0.1, 0.4, 1).mask) == 10);  // ceil(9.2)
        CHECK(popcount(rfe_rf_fs(x, y, 0.1, 0.6, 1).mask) == 14);  // ceil(13.8)
        CHECK(popcount(rfe_rf_fs(x, y, 0.1, 0.8, 1).mask) == 19);  // ceil(18.4)
    }
    SUBCASE("label copy is never eliminated") {
        auto y = alternating(40);
        Matrix x(40, 20);
        std::mt19937_64 rng(12);
        std::normal_distribution<double> g;
        for (std::size_t i = 0; i < 40; ++i) {
            for (std::size_t j = 0; j < 20; ++j) x.at(i, j) = g(rng);
            x.at(i, 13) = y[i];
        }
        auto r = rfe_rf_fs(x, y, 0.1, 0.4, 31);
        CHECK(r.mask[13] == 1);
    }
    SUBCASE("deterministic given seed") {
        auto y = alternating(30);
        auto x = noise_with_signal(30, 15, 4, y, 13);
        CHECK(rfe_rf_fs(x, y, 0.1, 0.6, 5).mask == rfe_rf_fs(x, y, 0.1, 0.6, 5).mask);
    }
}

TEST_CASE("smote") {
    SUBCASE("18 minority / 24 majority becomes 24/24") {
        std::mt19937_64 rng(14);
        std::normal_distribution<double> g;
        Matrix x(42, 3);
        std::vector<int> y;
        for (std::size_t i = 0; i < 42; ++i) {
            for (std::size_t j = 0; j < 3; ++j) x.at(i, j) = g(rng);
            y.push_back(i < 18 ? 0 : 1);
        }
        auto r = smote(x, y, 5, 77);
        CHECK(r.rows.rows() == 48);
        CHECK(std::count(r.labels.begin(), r.labels.end(), 0) == 24);
        CHECK(std::count(r.labels.begin(), r.labels.end(), 1) == 24);
        CHECK_FALSE(r.warning);
        // originals untouched, in place
        for (std::size_t i = 0; i < 42; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(r.rows.at(i, j) == x.at(i, j));
    }
    SUBCASE("k=1 synthetics lie on the connecting segment") {
        Matrix x(5, 2);
        std::vector<int> y = {1, 1, 0, 0, 0};
        x.at(0, 0) = 0;
        x.at(0, 1) = 0;
        x.at(1, 0) = 1;
        x.at(1, 1) = 1;
        for (std::size_t i = 2; i < 5; ++i) {
            x.at(i, 0) = 10.0 + static_cast<double>(i);
            x.at(i, 1) = -5.0;
        }
        auto r = smote(x, y, 1, 3);
        REQUIRE(r.rows.rows() == 6);
        double a = r.rows.at(5, 0), b = r.rows.at(5, 1);
        CHECK(a == doctest::Approx(b));  // on y = x
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
    SUBCASE("synthetics stay inside the minority bounding box") {
        std::mt19937_64 rng(15);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Matrix x(30, 4);
        std::vector<int> y;
        for (std::size_t i = 0; i < 30; ++i) {
            for (std::size_t j = 0; j < 4; ++j) x.at(i, j) = u(rng);
            y.push_back(i < 10 ? 1 : 0);
        }
        auto r = smote(x, y, 3, 21);
        for (std::size_t j = 0; j < 4; ++j) {
            double lo = 1e9, hi = -1e9;
            for (std::size_t i = 0; i < 10; ++i) {
                lo = std::min(lo, x.at(i, j));
                hi = std::max(hi, x.at(i, j));
            }
            for (std::size_t i = 30; i < r.rows.rows(); ++i) {
                CHECK(r.rows.at(i, j) >= lo - 1e-12);
                CHECK(r.rows.at(i, j) <= hi + 1e-12);
            }
        }
    }
    SUBCASE("balanced input is returned unchanged") {
        Matrix x(6, 2, 1.0);
        std::vector<int> y = {0, 1, 0, 1, 0, 1};
        auto r = smote(x, y, 3, 5);
        CHECK(r.rows == x);
        CHECK(r.labels == y);
        CHECK_FALSE(r.warning);
    }
    SUBCASE("minority no larger than k degrades to a warning no-op") {
        Matrix x(10, 2, 0.5);
        std::vector<int> y = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
        auto r = smote(x, y, 3, 5);
        CHECK(r.rows == x);
        CHECK(r.labels == y);
        CHECK(r.warning);
    }
    SUBCASE("deterministic given seed") {
        std::mt19937_64 rng(16);
        std::normal_distribution<double> g;
        Matrix x(20, 2);
        std::vector<int> y;
        for (std::size_t i = 0; i < 20; ++i) {
            x.at(i, 0) = g(rng);
            x.at(i, 1) = g(rng);
            y.push_back(i < 7 ? 1 : 0);
        }
        auto a = smote(x, y, 4, 9);
        auto b = smote(x, y, 4, 9);
        CHECK(a.rows == b.rows);
        CHECK(a.labels == b.labels);
    }
}

TEST_CASE("dispatchers") {
    auto y = alternating(20);
    auto x = noise_with_signal(20, 6, 1, y, 17);
    std::vector<std::uint8_t> cat(6, 0);
    SelectorSpec none;
    CHECK(popcount(run_selector(none, x, x, y, cat, 1).mask) == 6);
    SelectorSpec bad;
    bad.method = "pca";
    CHECK_THROWS(run_selector(bad, x, x, y, cat, 1));
    SamplerSpec sm;
    sm.method = "smote";
    sm.n_neighbors = 3;
    CHECK(run_sampler(sm, x, y, 2).rows.rows() == 20);  // balanced already
    CHECK(mask_indices({1, 0, 1}) == std::vector<std::size_t>{0, 2});
}
