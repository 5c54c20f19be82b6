#include "cpapml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace cpapml::stats {

namespace {

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// U statistic of x vs y by direct pair counting (ties 1/2).
double u_statistic(const std::vector<double>& pooled, const std::vector<char>& in_x) {
    double u = 0.0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        if (!in_x[i]) continue;
        for (std::size_t j = 0; j < pooled.size(); ++j) {
            if (in_x[j]) continue;
            if (pooled[i] > pooled[j])
                u += 1.0;
            else if (pooled[i] == pooled[j])
                u += 0.5;
        }
    }
    return u;
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

TestResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
    const std::size_t n = x.size(), m = y.size(), total = n + m;

    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::vector<char> in_x(total, 0);
    std::fill(in_x.begin(), in_x.begin() + static_cast<long>(n), 1);
    const double u_obs = u_statistic(pooled, in_x);
    const double mean_u = static_cast<double>(n) * static_cast<double>(m) / 2.0;

    TestResult res;
    res.statistic = u_obs;
    if (total <= 20) {
        // Exact: enumerate every assignment of n pooled values to x.
        res.method = "mann-whitney-u-exact";
        std::vector<char> mask(total, 0);
        std::fill(mask.begin(), mask.begin() + static_cast<long>(n), 1);
        std::sort(mask.begin(), mask.end());
        long long count = 0, le = 0, ge = 0;
        const double eps = 1e-12;
        do {
            double u = u_statistic(pooled, mask);
            ++count;
            if (u <= u_obs + eps) ++le;
            if (u >= u_obs - eps) ++ge;
        } while (std::next_permutation(mask.begin(), mask.end()));
        double tail = static_cast<double>(std::min(le, ge)) / static_cast<double>(count);
        res.p_value = clamp01(2.0 * tail);
    } else {
        res.method = "mann-whitney-u-normal";
        // Tie correction over pooled value multiplicities.
        std::map<double, std::size_t> counts;
        for (double v : pooled) ++counts[v];
        double tie_sum = 0.0;
        for (auto& [_, c] : counts) {
            double t = static_cast<double>(c);
            tie_sum += t * t * t - t;
        }
        double nt = static_cast<double>(total);
        double var = (static_cast<double>(n) * static_cast<double>(m) / 12.0) *
                     ((nt * nt * nt - nt - tie_sum) / (nt * (nt - 1.0)));
        if (var <= 0.0) {
            res.p_value = 1.0;
        } else {
            double z = (u_obs - mean_u) / std::sqrt(var);
            boost::math::normal_distribution<double> nd;
            res.p_value = clamp01(2.0 * boost::math::cdf(nd, -std::abs(z)));
        }
    }
    return res;
}

TestResult chi_square(const std::vector<std::vector<double>>& table) {
    const std::size_t r = table.size();
    if (r < 2) throw std::invalid_argument("chi_square: need at least 2 rows");
    const std::size_t c = table[0].size();
    if (c < 2) throw std::invalid_argument("chi_square: need at least 2 columns");
    std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) throw std::invalid_argument("chi_square: ragged table");
        for (std::size_t j = 0; j < c; ++j) {
            if (table[i][j] < 0) throw std::invalid_argument("chi_square: negative count");
            row_sum[i] += table[i][j];
            col_sum[j] += table[i][j];
            total += table[i][j];
        }
    }
    for (double s : row_sum)
        if (s == 0.0) throw std::invalid_argument("chi_square: zero row marginal");
    for (double s : col_sum)
        if (s == 0.0) throw std::invalid_argument("chi_square: zero column marginal");

    double stat = 0.0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double expected = row_sum[i] * col_sum[j] / total;
            double d = table[i][j] - expected;
            stat += d * d / expected;
        }
    double df = static_cast<double>((r - 1) * (c - 1));
    boost::math::chi_squared_distribution<double> dist(df);
    TestResult res;
    res.statistic = stat;
    res.p_value = clamp01(boost::math::cdf(boost::math::complement(dist, stat)));
    res.method = "chi-square";
    return res;
}

TestResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("spearman: need n >= 3");
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
        throw std::invalid_argument("spearman: constant input");

    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    double mx = mean_of(rx), my = mean_of(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    double rho = sxy / std::sqrt(sxx * syy);
    rho = std::min(1.0, std::max(-1.0, rho));

    TestResult res;
    res.statistic = rho;
    res.method = "spearman";
    double df = static_cast<double>(n) - 2.0;
    if (std::abs(rho) >= 1.0) {
        res.p_value = 0.0;
    } else {
        double t = rho * std::sqrt(df / (1.0 - rho * rho));
        boost::math::students_t_distribution<double> dist(df);
        res.p_value = clamp01(2.0 * boost::math::cdf(dist, -std::abs(t)));
    }
    return res;
}

TestResult anova_f(const std::vector<double>& x, const std::vector<int>& labels) {
    if (x.size() != labels.size()) throw std::invalid_argument("anova_f: length mismatch");
    std::vector<double> sum(2, 0.0);
    std::vector<std::size_t> cnt(2, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        int g = labels[i];
        if (g != 0 && g != 1) throw std::invalid_argument("anova_f: labels must be 0/1");
        sum[static_cast<std::size_t>(g)] += x[i];
        ++cnt[static_cast<std::size_t>(g)];
    }
    if (cnt[0] == 0 || cnt[1] == 0) throw std::invalid_argument("anova_f: empty group");

    double grand = (sum[0] + sum[1]) / static_cast<double>(x.size());
    double gm0 = sum[0] / static_cast<double>(cnt[0]);
    double gm1 = sum[1] / static_cast<double>(cnt[1]);
    double ssb = static_cast<double>(cnt[0]) * (gm0 - grand) * (gm0 - grand) +
                 static_cast<double>(cnt[1]) * (gm1 - grand) * (gm1 - grand);
    double ssw = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double gm = labels[i] == 0 ? gm0 : gm1;
        ssw += (x[i] - gm) * (x[i] - gm);
    }
    double dfb = 1.0;
    double dfw = static_cast<double>(x.size()) - 2.0;
    TestResult res;
    res.method = "anova-f";
    if (ssw <= 0.0) {
        if (ssb <= 0.0) throw std::invalid_argument("anova_f: zero variance within and between groups");
        res.statistic = kInfStatistic;
        res.p_value = 0.0;
        return res;
    }
    if (dfw <= 0.0) throw std::invalid_argument("anova_f: not enough observations");
    double f = (ssb / dfb) / (ssw / dfw);
    res.statistic = f;
    boost::math::fisher_f_distribution<double> dist(dfb, dfw);
    res.p_value = clamp01(boost::math::cdf(boost::math::complement(dist, f)));
    return res;
}

double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("nmi: length mismatch");
    if (a.empty()) throw std::invalid_argument("nmi: empty input");
    const double n = static_cast<double>(a.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
        pab[{a[i], b[i]}] += 1.0;
    }
    double ha = 0.0, hb = 0.0, mi = 0.0;
    for (auto& [_, c] : pa) {
        double p = c / n;
        ha -= p * std::log(p);
    }
    for (auto& [_, c] : pb) {
        double p = c / n;
        hb -= p * std::log(p);
    }
    if (ha <= 0.0 || hb <= 0.0) return 0.0;  // constant variable
    for (auto& [key, c] : pab) {
        double pxy = c / n;
        double px = pa[key.first] / n;
        double py = pb[key.second] / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    double nmi = mi / std::sqrt(ha * hb);
    return std::min(1.0, std::max(0.0, nmi));
}

TestResult paired_ttest_cv(const std::vector<double>& scores_a, const std::vector<double>& scores_b) {
    if (scores_a.size() != scores_b.size()) throw std::invalid_argument("paired_ttest_cv: length mismatch");
    const std::size_t k = scores_a.size();
    if (k < 2) throw std::invalid_argument("paired_ttest_cv: need k >= 2");
    std::vector<double> d(k);
    for (std::size_t i = 0; i < k; ++i) d[i] = scores_a[i] - scores_b[i];
    double md = mean_of(d);
    double ss = 0.0;
    for (double v : d) ss += (v - md) * (v - md);
    double sd = std::sqrt(ss / (static_cast<double>(k) - 1.0));

    TestResult res;
    res.method = "paired-t-cv";
    if (sd == 0.0) {
        if (md == 0.0) {
            res.statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.statistic = md > 0 ? kInfStatistic : -kInfStatistic;
            res.p_value = 0.0;
        }
        return res;
    }
    double t = md / (sd / std::sqrt(static_cast<double>(k)));
    res.statistic = t;
    boost::math::students_t_distribution<double> dist(static_cast<double>(k) - 1.0);
    res.p_value = std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(t)));
    return res;
}

}  // namespace cpapml::stats
