#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "cpapml/learners.hpp"
#include "cpapml/rng.hpp"
#include "cpapml/selection.hpp"
#include "cpapml/stats.hpp"

namespace cpapml::selection {

namespace {

constexpr double kCoefEps = 1e-8;

// sklearn-style chi2 on one nonnegative feature vs a binary label: observed
// per-class value sums against class-prior expectations, df = 1.
stats::TestResult chi2_feature(const std::vector<double>& x, const std::vector<int>& labels) {
    double obs[2] = {0.0, 0.0};
    double cnt[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        obs[labels[i]] += x[i];
        cnt[labels[i]] += 1.0;
    }
    double total = obs[0] + obs[1];
    stats::TestResult res;
    res.method = "chi2";
    if (total <= 0.0) {
        res.statistic = 0.0;
        res.p_value = 1.0;
        return res;
    }
    double n = cnt[0] + cnt[1];
    double stat = 0.0;
    for (int c = 0; c < 2; ++c) {
        double exp = total * cnt[c] / n;
        if (exp > 0.0) stat += (obs[c] - exp) * (obs[c] - exp) / exp;
    }
    res.statistic = stat;
    boost::math::chi_squared_distribution<double> dist(1.0);
    res.p_value = std::min(1.0, boost::math::cdf(boost::math::complement(dist, stat)));
    return res;
}

std::vector<double> column(const Matrix& rows, std::size_t j) {
    std::vector<double> v(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) v[i] = rows.at(i, j);
    return v;
}

}  // namespace

std::string SelectorSpec::params_text() const {
    std::ostringstream out;
    if (method == "none")
        out << "[]";
    else if (method == "combine_fs")
        out << "[" << percentile << "]";
    else if (method == "lasso_fs")
        out << "[" << C << "]";
    else if (method == "rfe_rf_fs")
        out << "[" << step_fraction << ", " << target_fraction << "]";
    else
        throw std::invalid_argument("unknown selector: " + method);
    return out.str();
}

std::string SamplerSpec::params_text() const {
    if (method == "none") return "[]";
    if (method == "smote") return "[" + std::to_string(n_neighbors) + "]";
    throw std::invalid_argument("unknown sampler: " + method);
}

SelectionResult combine_fs(const Matrix& rows, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& categorical, int percentile) {
    if (rows.cols() != categorical.size()) throw std::invalid_argument("combine_fs: kind mask width mismatch");
    if (percentile < 1 || percentile > 100) throw std::invalid_argument("combine_fs: percentile out of range");
    const std::size_t p = rows.cols();
    std::vector<double> pvals(p, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
        auto x = column(rows, j);
        if (categorical[j]) {
            double lo = *std::min_element(x.begin(), x.end());
            if (lo < 0.0)
                for (double& v : x) v -= lo;
            pvals[j] = chi2_feature(x, labels).p_value;
        } else {
            try {
                pvals[j] = stats::anova_f(x, labels).p_value;
            } catch (const std::invalid_argument&) {
                pvals[j] = 1.0;  // constant feature
            }
        }
    }
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    auto keep = static_cast<std::size_t>(
        std::ceil(static_cast<double>(percentile) / 100.0 * static_cast<double>(p)));
    keep = std::max<std::size_t>(keep, 1);
    SelectionResult res;
    res.mask.assign(p, 0);
    for (std::size_t r = 0; r < keep && r < p; ++r) res.mask[order[r]] = 1;
    return res;
}

SelectionResult lasso_fs(const Matrix& rows, const std::vector<int>& labels, double C) {
    auto fit = learners::fit_logistic(rows, labels, {}, C, "l1");
    SelectionResult res;
    if (!fit.converged) {
        res.mask.assign(rows.cols(), 1);
        res.warning = true;
        res.warning_text = "lasso_fs: optimizer did not converge; keeping all features";
        return res;
    }
    res.mask.assign(rows.cols(), 0);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < rows.cols(); ++j)
        if (std::abs(fit.coef[j]) > kCoefEps) {
            res.mask[j] = 1;
            ++kept;
        }
    if (kept == 0) {
        // Non-empty-mask invariant: keep the strongest coefficient.
        std::size_t best = 0;
        for (std::size_t j = 1; j < rows.cols(); ++j)
            if (std::abs(fit.coef[j]) > std::abs(fit.coef[best])) best = j;
        res.mask[best] = 1;
    }
    return res;
}

SelectionResult rfe_rf_fs(const Matrix& rows, const std::vector<int>& labels, double step_fraction,
                          double target_fraction, std::uint64_t seed) {
    const std::size_t p = rows.cols();
    if (p == 0) throw std::invalid_argument("rfe_rf_fs: no features");
    if (step_fraction <= 0.0 || step_fraction >= 1.0)
        throw std::invalid_argument("rfe_rf_fs: step_fraction must be in (0,1)");
    auto target = static_cast<std::size_t>(std::ceil(target_fraction * static_cast<double>(p)));
    if (target < 1 || target > p) throw std::invalid_argument("rfe_rf_fs: target out of range");

    std::vector<std::size_t> current(p);
    std::iota(current.begin(), current.end(), 0);
    learners::LearnerSpec rf;
    rf.algo = learners::Algo::rf;
    rf.n_estimators = 100;
    rf.balanced = true;
    std::uint64_t round = 0;
    while (current.size() > target) {
        rf.seed = derive_seed(seed, {0x524645ULL, round++});
        auto model = learners::train(rf, rows.select_cols(current), labels);
        auto imp = learners::extract_weights(*model);
        auto drop = std::min(
            static_cast<std::size_t>(std::ceil(step_fraction * static_cast<double>(current.size()))),
            current.size() - target);
        std::vector<std::size_t> order(current.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return imp[a] < imp[b]; });
        std::vector<std::uint8_t> dead(current.size(), 0);
        for (std::size_t r = 0; r < drop; ++r) dead[order[r]] = 1;
        std::vector<std::size_t> next;
        for (std::size_t k = 0; k < current.size(); ++k)
            if (!dead[k]) next.push_back(current[k]);
        current = std::move(next);
    }
    SelectionResult res;
    res.mask.assign(p, 0);
    for (std::size_t j : current) res.mask[j] = 1;
    return res;
}

SelectionResult run_selector(const SelectorSpec& spec, const Matrix& std_rows, const Matrix& raw_rows,
                             const std::vector<int>& labels, const std::vector<std::uint8_t>& categorical,
                             std::uint64_t seed) {
    if (spec.method == "none") {
        SelectionResult res;
        res.mask.assign(std_rows.cols(), 1);
        return res;
    }
    if (spec.method == "combine_fs") return combine_fs(raw_rows, labels, categorical, spec.percentile);
    if (spec.method == "lasso_fs") return lasso_fs(std_rows, labels, spec.C);
    if (spec.method == "rfe_rf_fs")
        return rfe_rf_fs(std_rows, labels, spec.step_fraction, spec.target_fraction, seed);
    throw std::invalid_argument("unknown selector: " + spec.method);
}

std::vector<std::size_t> mask_indices(const std::vector<std::uint8_t>& mask) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) out.push_back(j);
    return out;
}

SampleResult smote(const Matrix& rows, const std::vector<int>& labels, int n_neighbors,
                   std::uint64_t seed) {
    if (rows.rows() != labels.size()) throw std::invalid_argument("smote: label length mismatch");
    if (n_neighbors < 1) throw std::invalid_argument("smote: n_neighbors must be >= 1");
    std::size_t cnt[2] = {0, 0};
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("smote: labels must be 0/1");
        ++cnt[y];
    }
    SampleResult res;
    res.rows = rows;
    res.labels = labels;
    if (cnt[0] == cnt[1]) return res;  // already balanced
    int minority = cnt[1] < cnt[0] ? 1 : 0;
    std::vector<std::size_t> minor;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == minority) minor.push_back(i);
    if (minor.size() <= static_cast<std::size_t>(n_neighbors)) {
        res.warning = true;
        res.warning_text = "smote: minority class too small for n_neighbors; sampling skipped";
        return res;
    }

    // k nearest minority neighbors of each minority row (self excluded).
    const std::size_t k = static_cast<std::size_t>(n_neighbors);
    const std::size_t p = rows.cols();
    std::vector<std::vector<std::size_t>> nn(minor.size());
    for (std::size_t a = 0; a < minor.size(); ++a) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t b = 0; b < minor.size(); ++b) {
            if (b == a) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                double diff = rows.at(minor[a], j) - rows.at(minor[b], j);
                s += diff * diff;
            }
            d.emplace_back(s, b);
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        for (std::size_t r = 0; r < k; ++r) nn[a].push_back(d[r].second);
    }

    auto rng = make_rng(seed, {0x534d4f5445ULL});
    std::uniform_int_distribution<std::size_t> pick_row(0, minor.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_nn(0, k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t need = std::max(cnt[0], cnt[1]) - minor.size();
    Matrix out(rows.rows() + need, p);
    std::copy(rows.data().begin(), rows.data().end(), out.data().begin());
    for (std::size_t t = 0; t < need; ++t) {
        std::size_t a = pick_row(rng);
        std::size_t b = nn[a][pick_nn(rng)];
        double u = unit(rng);
        for (std::size_t j = 0; j < p; ++j) {
            double xa = rows.at(minor[a], j);
            double xb = rows.at(minor[b], j);
            out.at(rows.rows() + t, j) = xa + u * (xb - xa);
        }
        res.labels.push_back(minority);
    }
    res.rows = std::move(out);
    return res;
}

SampleResult run_sampler(const SamplerSpec& spec, const Matrix& rows, const std::vector<int>& labels,
                         std::uint64_t seed) {
    if (spec.method == "none") {
        SampleResult res;
        res.rows = rows;
        res.labels = labels;
        return res;
    }
    if (spec.method == "smote") return smote(rows, labels, spec.n_neighbors, seed);
    throw std::invalid_argument("unknown sampler: " + spec.method);
}

}  // namespace cpapml::selection
