#include "cpapml/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cpapml::preprocess {

namespace {

// Non-missing values of a column, optionally split by label.
std::vector<double> column_values(const Matrix& m, std::size_t c) {
    std::vector<double> out;
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (!Matrix::is_missing(m.at(r, c))) out.push_back(m.at(r, c));
    return out;
}

std::vector<int> int_column(const Matrix& m, std::size_t c) {
    std::vector<int> out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double v = m.at(r, c);
        if (!Matrix::is_missing(v)) out.push_back(static_cast<int>(std::llround(v)));
    }
    return out;
}

// Label-vs-feature association for one encoded categorical column.
stats::TestResult feature_label_chi_square(const Dataset& d, std::size_t c) {
    std::map<int, std::size_t> codes;
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        double v = d.values.at(r, c);
        if (!Matrix::is_missing(v)) codes.emplace(static_cast<int>(std::llround(v)), codes.size());
    }
    if (codes.size() < 2) return {0.0, 1.0, "chi-square"};
    std::size_t idx = 0;
    for (auto& [code, slot] : codes) slot = idx++;
    std::vector<std::vector<double>> table(codes.size(), std::vector<double>(2, 0.0));
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        double v = d.values.at(r, c);
        if (Matrix::is_missing(v)) continue;
        table[codes[static_cast<int>(std::llround(v))]][static_cast<std::size_t>(d.labels[r])] += 1.0;
    }
    try {
        return stats::chi_square(table);
    } catch (const std::invalid_argument&) {
        return {0.0, 1.0, "chi-square"};  // degenerate marginal
    }
}

stats::TestResult feature_label_mann_whitney(const Dataset& d, std::size_t c) {
    std::vector<double> pos, neg;
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        double v = d.values.at(r, c);
        if (Matrix::is_missing(v)) continue;
        (d.labels[r] == 1 ? pos : neg).push_back(v);
    }
    if (pos.empty() || neg.empty()) return {0.0, 1.0, "mann-whitney-u"};
    return stats::mann_whitney_u(pos, neg);
}

Dataset drop_features(const Dataset& d, const std::vector<std::uint8_t>& removed) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < d.n_features(); ++c)
        if (!removed[c]) keep.push_back(c);
    return d.select_features(keep);
}

}  // namespace

FittedTransform fit_impute(const Matrix& rows, const std::vector<std::uint8_t>& categorical) {
    if (categorical.size() != rows.cols()) throw std::invalid_argument("fit_impute: kind mask width mismatch");
    FittedTransform t;
    t.kind = TransformKind::impute;
    t.width = rows.cols();
    t.fill.resize(rows.cols());
    for (std::size_t c = 0; c < rows.cols(); ++c) {
        auto vals = column_values(rows, c);
        if (vals.empty()) throw std::invalid_argument("fit_impute: feature " + std::to_string(c) + " entirely missing");
        if (categorical[c]) {
            std::map<double, std::size_t> counts;
            for (double v : vals) ++counts[v];
            double best = vals[0];
            std::size_t best_n = 0;
            for (auto& [v, n] : counts)  // map order: ties resolve to smallest value
                if (n > best_n) {
                    best = v;
                    best_n = n;
                }
            t.fill[c] = best;
        } else {
            double s = 0.0;
            for (double v : vals) s += v;
            t.fill[c] = s / static_cast<double>(vals.size());
        }
    }
    return t;
}

FittedTransform fit_variance_filter(const Matrix& rows) {
    FittedTransform t;
    t.kind = TransformKind::variance_filter;
    t.width = rows.cols();
    t.keep.assign(rows.cols(), 0);
    std::size_t kept = 0;
    for (std::size_t c = 0; c < rows.cols(); ++c) {
        auto vals = column_values(rows, c);
        bool constant = true;
        for (double v : vals)
            if (v != vals.front()) {
                constant = false;
                break;
            }
        if (!vals.empty() && !constant) {
            t.keep[c] = 1;
            ++kept;
        }
    }
    if (kept == 0) throw std::invalid_argument("fit_variance_filter: no features remain");
    return t;
}

FittedTransform fit_standardize(const Matrix& rows) {
    FittedTransform t;
    t.kind = TransformKind::standardize;
    t.width = rows.cols();
    t.mean.assign(rows.cols(), 0.0);
    t.sd.assign(rows.cols(), 0.0);
    const double n = static_cast<double>(rows.rows());
    for (std::size_t c = 0; c < rows.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows.rows(); ++r) s += rows.at(r, c);
        double mean = s / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < rows.rows(); ++r) {
            double d = rows.at(r, c) - mean;
            ss += d * d;
        }
        t.mean[c] = mean;
        t.sd[c] = std::sqrt(ss / n);  // population sd
    }
    return t;
}

Matrix apply_transform(const FittedTransform& t, const Matrix& rows) {
    if (rows.cols() != t.width) throw std::invalid_argument("apply_transform: width mismatch");
    switch (t.kind) {
        case TransformKind::impute: {
            Matrix out = rows;
            for (std::size_t r = 0; r < out.rows(); ++r)
                for (std::size_t c = 0; c < out.cols(); ++c)
                    if (Matrix::is_missing(out.at(r, c))) out.at(r, c) = t.fill[c];
            return out;
        }
        case TransformKind::variance_filter:
            return rows.select_cols(kept_indices(t));
        case TransformKind::standardize: {
            Matrix out = rows;
            for (std::size_t r = 0; r < out.rows(); ++r)
                for (std::size_t c = 0; c < out.cols(); ++c) {
                    double v = out.at(r, c);
                    out.at(r, c) = t.sd[c] == 0.0 ? 0.0 : (v - t.mean[c]) / t.sd[c];
                }
            return out;
        }
    }
    throw std::logic_error("apply_transform: bad kind");
}

std::vector<std::size_t> kept_indices(const FittedTransform& t) {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < t.keep.size(); ++c)
        if (t.keep[c]) idx.push_back(c);
    return idx;
}

FilterResult rare_category_filter(const Dataset& d, const PreprocessConfig& cfg) {
    const double n = static_cast<double>(d.n_rows());
    const double threshold = std::ceil(cfg.rare_category_ratio * n);
    std::vector<std::uint8_t> removed(d.n_features(), 0);
    FilterResult res;
    for (std::size_t c = 0; c < d.n_features(); ++c) {
        if (!d.schema.features[c].is_categorical()) continue;
        std::map<int, std::size_t> counts;
        for (int v : int_column(d.values, c)) ++counts[v];
        for (auto& [code, cnt] : counts) {
            if (static_cast<double>(cnt) <= threshold) {
                removed[c] = 1;
                res.removals.push_back({d.schema.features[c].name, "rare_category",
                                        static_cast<double>(cnt) / n, 0.0, ""});
                break;
            }
        }
    }
    res.dataset = drop_features(d, removed);
    return res;
}

FilterResult nmi_redundancy_filter(const Dataset& d, const PreprocessConfig& cfg) {
    if (!d.has_labels()) throw std::invalid_argument("nmi_redundancy_filter: labels required");
    std::vector<std::size_t> cats;
    for (std::size_t c = 0; c < d.n_features(); ++c)
        if (d.schema.features[c].is_categorical()) cats.push_back(c);

    struct Pair {
        std::size_t a, b;
        double nmi;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < cats.size(); ++i)
        for (std::size_t j = i + 1; j < cats.size(); ++j) {
            // Pairwise-complete rows only.
            std::vector<int> a, b;
            for (std::size_t r = 0; r < d.n_rows(); ++r) {
                double va = d.values.at(r, cats[i]), vb = d.values.at(r, cats[j]);
                if (Matrix::is_missing(va) || Matrix::is_missing(vb)) continue;
                a.push_back(static_cast<int>(std::llround(va)));
                b.push_back(static_cast<int>(std::llround(vb)));
            }
            if (a.empty()) continue;
            double nmi = stats::normalized_mutual_information(a, b);
            if (nmi > cfg.nmi_threshold) pairs.push_back({cats[i], cats[j], nmi});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.nmi > y.nmi; });

    std::vector<std::uint8_t> removed(d.n_features(), 0);
    FilterResult res;
    for (const auto& p : pairs) {
        if (removed[p.a] || removed[p.b]) continue;
        auto ta = feature_label_chi_square(d, p.a);
        auto tb = feature_label_chi_square(d, p.b);
        std::size_t drop = ta.p_value > tb.p_value ? p.a : p.b;
        std::size_t keep = drop == p.a ? p.b : p.a;
        removed[drop] = 1;
        res.removals.push_back({d.schema.features[drop].name, "nmi_redundancy", p.nmi,
                                drop == p.a ? ta.p_value : tb.p_value, d.schema.features[keep].name});
    }
    res.dataset = drop_features(d, removed);
    return res;
}

FilterResult correlation_redundancy_filter(const Dataset& d, const PreprocessConfig& cfg) {
    if (!d.has_labels()) throw std::invalid_argument("correlation_redundancy_filter: labels required");
    if (d.n_rows() < 3) throw std::invalid_argument("correlation_redundancy_filter: need >= 3 rows");
    std::vector<std::size_t> nums;
    for (std::size_t c = 0; c < d.n_features(); ++c)
        if (!d.schema.features[c].is_categorical()) nums.push_back(c);

    struct Pair {
        std::size_t a, b;
        double rho;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < nums.size(); ++i)
        for (std::size_t j = i + 1; j < nums.size(); ++j) {
            std::vector<double> a, b;
            for (std::size_t r = 0; r < d.n_rows(); ++r) {
                double va = d.values.at(r, nums[i]), vb = d.values.at(r, nums[j]);
                if (Matrix::is_missing(va) || Matrix::is_missing(vb)) continue;
                a.push_back(va);
                b.push_back(vb);
            }
            if (a.size() < 3) continue;
            double rho;
            try {
                rho = stats::spearman(a, b).statistic;
            } catch (const std::invalid_argument&) {
                continue;  // constant column; variance filtering handles it
            }
            if (std::abs(rho) > cfg.correlation_threshold) pairs.push_back({nums[i], nums[j], std::abs(rho)});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.rho > y.rho; });

    std::vector<std::uint8_t> removed(d.n_features(), 0);
    FilterResult res;
    for (const auto& p : pairs) {
        if (removed[p.a] || removed[p.b]) continue;
        auto ta = feature_label_mann_whitney(d, p.a);
        auto tb = feature_label_mann_whitney(d, p.b);
        std::size_t drop = ta.p_value > tb.p_value ? p.a : p.b;
        std::size_t keep = drop == p.a ? p.b : p.a;
        removed[drop] = 1;
        res.removals.push_back({d.schema.features[drop].name, "correlation_redundancy", p.rho,
                                drop == p.a ? ta.p_value : tb.p_value, d.schema.features[keep].name});
    }
    res.dataset = drop_features(d, removed);
    return res;
}

std::vector<FeatureDescription> describe_dataset(const Dataset& d, const PreprocessConfig& cfg) {
    if (!d.has_labels()) throw std::invalid_argument("describe_dataset: labels required");
    std::vector<FeatureDescription> out;
    for (std::size_t c = 0; c < d.n_features(); ++c) {
        FeatureDescription fd;
        fd.feature = d.schema.features[c].name;
        stats::TestResult t = d.schema.features[c].is_categorical() ? feature_label_chi_square(d, c)
                                                                    : feature_label_mann_whitney(d, c);
        fd.method = t.method;
        fd.statistic = t.statistic;
        fd.p_value = t.p_value;
        fd.significant = t.p_value < cfg.alpha;
        for (std::size_t r = 0; r < d.n_rows(); ++r)
            if (Matrix::is_missing(d.values.at(r, c))) ++fd.missing_count;
        fd.missing_ratio = static_cast<double>(fd.missing_count) / static_cast<double>(d.n_rows());
        out.push_back(std::move(fd));
    }
    return out;
}

}  // namespace cpapml::preprocess
