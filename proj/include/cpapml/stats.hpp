#pragma once

#include <string>
#include <vector>

namespace cpapml::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string method;
};

// Statistic clamp for degenerate limits (perfect separation, zero-variance
// differences): statistic stays finite, p goes to 0.
inline constexpr double kInfStatistic = 1e15;

// Average ranks of v (ties share their mean rank, 1-based).
std::vector<double> average_ranks(const std::vector<double>& v);

// Two-sided Mann-Whitney U test. Exact enumeration for n+m <= 20, normal
// approximation with tie correction above. Statistic is U of x (#pairs with
// x > y, ties counted 1/2).
TestResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y);

// Pearson chi-square without continuity correction on an r x c count table.
TestResult chi_square(const std::vector<std::vector<double>>& table);

// Spearman rank correlation; two-sided p via t approximation, df = n-2.
TestResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// One-way ANOVA F between the two label groups.
TestResult anova_f(const std::vector<double>& x, const std::vector<int>& labels);

// I(A;B) / sqrt(H(A) H(B)) with plug-in entropies; 0 when either variable is
// constant.
double normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

// Paired t-test on fold-aligned score vectors; df = k-1.
TestResult paired_ttest_cv(const std::vector<double>& scores_a, const std::vector<double>& scores_b);

}  // namespace cpapml::stats
