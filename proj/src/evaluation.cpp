#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cpapml/dataset.hpp"
#include "cpapml/evaluation.hpp"
#include "cpapml/rng.hpp"

namespace cpapml::evaluation {

namespace {

constexpr std::uint64_t kInnerTag = 0x696e6e65ULL;
constexpr std::uint64_t kOuterTag = 0x6f757465ULL;
constexpr std::uint64_t kCurveTag = 0x6c63ULL;

double population_sd(const std::vector<double>& v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

std::vector<int> subset(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& folds, std::size_t skip) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != skip) out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

double MetricSet::metric(const std::string& name) const {
    if (name == "f1_weighted") return f1_weighted;
    if (name == "precision_weighted") return precision_weighted;
    if (name == "recall_weighted") return recall_weighted;
    if (name == "auc") return auc;
    throw std::invalid_argument("unknown learning metric: " + name);
}

MetricSet weighted_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                           const std::vector<double>& scores) {
    if (y_true.empty() || y_true.size() != y_pred.size() || y_true.size() != scores.size())
        throw std::invalid_argument("weighted_metrics: length mismatch");
    MetricSet m;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1))
            throw std::invalid_argument("weighted_metrics: labels must be 0/1");
        ++m.confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
    }
    const double n = static_cast<double>(y_true.size());
    for (int l = 0; l < 2; ++l) {
        auto lu = static_cast<std::size_t>(l);
        double support = static_cast<double>(m.confusion[lu][0] + m.confusion[lu][1]);
        if (support == 0.0) continue;
        double tp = static_cast<double>(m.confusion[lu][lu]);
        double predicted = static_cast<double>(m.confusion[0][lu] + m.confusion[1][lu]);
        double precision = 0.0, recall = tp / support;
        if (predicted > 0.0)
            precision = tp / predicted;
        else
            m.zero_division = true;
        double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        double w = support / n;
        m.precision_weighted += w * precision;
        m.recall_weighted += w * recall;
        m.f1_weighted += w * f1;
    }
    // Pairwise AUC, ties 1/2.
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] != 1) continue;
        for (std::size_t j = 0; j < y_true.size(); ++j) {
            if (y_true[j] != 0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    m.auc = pairs > 0.0 ? wins / pairs : 0.5;
    return m;
}

std::vector<std::vector<std::size_t>> stratified_kfold(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("stratified_kfold: k must be >= 1");
    if (k > labels.size()) throw std::invalid_argument("stratified_kfold: k exceeds row count");
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t assigned = 0;
    for (int lbl : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != 0 && labels[i] != 1)
                throw std::invalid_argument("stratified_kfold: labels must be 0/1");
            if (labels[i] == lbl) idx.push_back(i);
        }
        auto rng = make_rng(seed, {0x6b66ULL, static_cast<std::uint64_t>(lbl)});
        std::shuffle(idx.begin(), idx.end(), rng);
        // Deal round-robin, starting where the previous label left off so
        // total fold sizes stay within one of each other.
        for (std::size_t t = 0; t < idx.size(); ++t) folds[(assigned + t) % k].push_back(idx[t]);
        assigned += idx.size();
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

double CellScore::mean(const std::string& metric) const {
    if (metric == "f1_weighted") return mean_f1;
    if (metric == "precision_weighted") return mean_prec;
    throw std::invalid_argument("unknown learning metric: " + metric);
}

double CellScore::sd(const std::string& metric) const {
    if (metric == "f1_weighted") return sd_f1;
    if (metric == "precision_weighted") return sd_prec;
    throw std::invalid_argument("unknown learning metric: " + metric);
}

std::vector<CellScore> evaluate_inner_cells(const pipeline::PipelineSpec& family, const Matrix& rows,
                                            const std::vector<int>& labels,
                                            const std::vector<std::uint8_t>& categorical,
                                            std::uint64_t seed, int n_reps, double validation_ratio,
                                            InnerMode mode) {
    if (n_reps < 1) throw std::invalid_argument("evaluate_inner_cells: n_reps must be >= 1");
    const auto sel_grid = pipeline::selector_grid(family.selector);
    const auto smp_grid = pipeline::sampler_grid(family.sampler);
    const auto lrn_grid = pipeline::learner_grid(family.algo);
    const std::size_t n_cells = sel_grid.size() * smp_grid.size() * lrn_grid.size();
    const auto reps = static_cast<std::size_t>(n_reps);

    std::vector<std::vector<double>> f1(n_cells, std::vector<double>(reps, 0.0));
    std::vector<std::vector<double>> prec(n_cells, std::vector<double>(reps, 0.0));
    std::vector<CellScore> cells(n_cells);

    auto fail_range = [&](std::size_t lo, std::size_t hi, const std::string& msg) {
        for (std::size_t c = lo; c < hi; ++c) {
            ++cells[c].failed_reps;
            if (cells[c].failure.empty()) cells[c].failure = msg;
        }
    };

    std::vector<std::vector<std::size_t>> kfolds;
    if (mode == InnerMode::kfold) kfolds = stratified_kfold(labels, reps, derive_seed(seed, {kInnerTag}));

    for (std::size_t r = 0; r < reps; ++r) {
        std::uint64_t rep_seed = derive_seed(seed, {kInnerTag, r});
        std::vector<std::size_t> train_idx, val_idx;
        if (mode == InnerMode::repeated_resample) {
            auto split = stratified_split(labels, validation_ratio, rep_seed);
            train_idx = split.train_rows;
            val_idx = split.test_rows;
        } else {
            val_idx = kfolds[r];
            train_idx = complement(kfolds, r);
        }
        Matrix tr_rows = rows.select_rows(train_idx);
        Matrix vl_rows = rows.select_rows(val_idx);
        std::vector<int> tr_labels = subset(labels, train_idx);
        std::vector<int> vl_labels = subset(labels, val_idx);

        preprocess::FittedTransform impute, variance, standardize;
        Matrix filtered_tr, std_tr, std_vl;
        std::vector<std::uint8_t> cat_kept;
        try {
            impute = preprocess::fit_impute(tr_rows, categorical);
            Matrix imp_tr = preprocess::apply_transform(impute, tr_rows);
            variance = preprocess::fit_variance_filter(imp_tr);
            filtered_tr = preprocess::apply_transform(variance, imp_tr);
            standardize = preprocess::fit_standardize(filtered_tr);
            std_tr = preprocess::apply_transform(standardize, filtered_tr);
            Matrix imp_vl = preprocess::apply_transform(impute, vl_rows);
            std_vl = preprocess::apply_transform(standardize,
                                                 preprocess::apply_transform(variance, imp_vl));
            for (std::size_t j : preprocess::kept_indices(variance)) cat_kept.push_back(categorical[j]);
        } catch (const std::exception& e) {
            fail_range(0, n_cells, std::string("preprocess: ") + e.what());
            continue;
        }

        for (std::size_t si = 0; si < sel_grid.size(); ++si) {
            const std::size_t sel_lo = si * smp_grid.size() * lrn_grid.size();
            const std::size_t sel_hi = sel_lo + smp_grid.size() * lrn_grid.size();
            selection::SelectionResult sel;
            try {
                sel = selection::run_selector(sel_grid[si], std_tr, filtered_tr, tr_labels, cat_kept,
                                              derive_seed(rep_seed, {1}));
            } catch (const std::exception& e) {
                fail_range(sel_lo, sel_hi, std::string("select: ") + e.what());
                continue;
            }
            auto kept = selection::mask_indices(sel.mask);
            Matrix sel_tr = std_tr.select_cols(kept);
            Matrix sel_vl = std_vl.select_cols(kept);

            for (std::size_t mi = 0; mi < smp_grid.size(); ++mi) {
                const std::size_t smp_lo = sel_lo + mi * lrn_grid.size();
                selection::SampleResult sampled;
                try {
                    sampled = selection::run_sampler(smp_grid[mi], sel_tr, tr_labels,
                                                     derive_seed(rep_seed, {2}));
                } catch (const std::exception& e) {
                    fail_range(smp_lo, smp_lo + lrn_grid.size(), std::string("sample: ") + e.what());
                    continue;
                }
                for (std::size_t li = 0; li < lrn_grid.size(); ++li) {
                    const std::size_t cell = smp_lo + li;
                    try {
                        auto learner = lrn_grid[li];
                        learner.seed = derive_seed(rep_seed, {3});
                        auto model = learners::train(learner, sampled.rows, sampled.labels);
                        auto scores = model->predict_scores(sel_vl);
                        auto pred = model->predict(sel_vl);
                        auto m = weighted_metrics(vl_labels, pred, scores);
                        f1[cell][r] = m.f1_weighted;
                        prec[cell][r] = m.precision_weighted;
                    } catch (const std::exception& e) {
                        fail_range(cell, cell + 1, std::string("train: ") + e.what());
                    }
                }
            }
        }
    }

    for (std::size_t c = 0; c < n_cells; ++c) {
        double nf = static_cast<double>(reps);
        cells[c].mean_f1 = std::accumulate(f1[c].begin(), f1[c].end(), 0.0) / nf;
        cells[c].sd_f1 = population_sd(f1[c], cells[c].mean_f1);
        cells[c].mean_prec = std::accumulate(prec[c].begin(), prec[c].end(), 0.0) / nf;
        cells[c].sd_prec = population_sd(prec[c], cells[c].mean_prec);
    }
    return cells;
}

std::size_t pick_best_cell(const std::vector<CellScore>& cells, const std::string& metric) {
    if (cells.empty()) throw std::invalid_argument("pick_best_cell: no cells");
    std::size_t best = 0;
    for (std::size_t c = 1; c < cells.size(); ++c) {
        double m = cells[c].mean(metric), bm = cells[best].mean(metric);
        if (m > bm || (m == bm && cells[c].sd(metric) < cells[best].sd(metric))) best = c;
    }
    return best;
}

InnerResult inner_select(const pipeline::PipelineSpec& family, const Matrix& rows,
                         const std::vector<int>& labels, const std::vector<std::uint8_t>& categorical,
                         std::uint64_t seed) {
    InnerResult res;
    res.cells = evaluate_inner_cells(family, rows, labels, categorical, seed);
    res.best_index = pick_best_cell(res.cells, family.learning_metric);
    res.best = pipeline::expand_family(family)[res.best_index];
    return res;
}

CvResult outer_evaluate(const pipeline::PipelineSpec& family, const pipeline::HyperAssignment& assignment,
                        const Matrix& rows, const std::vector<int>& labels,
                        const std::vector<std::uint8_t>& categorical, std::uint64_t seed,
                        std::size_t k) {
    auto folds = stratified_kfold(labels, k, derive_seed(seed, {kOuterTag}));
    CvResult res;
    for (std::size_t f = 0; f < k; ++f) {
        auto train_idx = complement(folds, f);
        MetricSet m;
        try {
            auto fitted = pipeline::fit_pipeline(family, assignment, rows.select_rows(train_idx),
                                                 subset(labels, train_idx), categorical,
                                                 derive_seed(seed, {kOuterTag, f}));
            Matrix vl = rows.select_rows(folds[f]);
            m = weighted_metrics(subset(labels, folds[f]), pipeline::pipeline_predict(fitted, vl),
                                 pipeline::pipeline_scores(fitted, vl));
        } catch (const std::exception& e) {
            res.failures.push_back("fold " + std::to_string(f) + ": " + e.what());
        }
        res.folds.push_back(m);
        res.fold_scores.push_back(m.f1_weighted);
    }
    res.mean = std::accumulate(res.fold_scores.begin(), res.fold_scores.end(), 0.0) /
               static_cast<double>(k);
    res.sd = population_sd(res.fold_scores, res.mean);
    return res;
}

std::vector<std::size_t> rank_pipelines(const std::vector<CvResult>& results) {
    if (results.empty()) throw std::invalid_argument("rank_pipelines: no results");
    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (results[a].mean != results[b].mean) return results[a].mean > results[b].mean;
        return results[a].sd < results[b].sd;
    });
    return order;
}

Comparison compare_pipelines(const std::vector<double>& fold_scores_a,
                             const std::vector<double>& fold_scores_b) {
    if (fold_scores_a.size() != fold_scores_b.size() || fold_scores_a.empty())
        throw std::invalid_argument("compare_pipelines: fold mismatch");
    Comparison c;
    std::vector<double> diff(fold_scores_a.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = fold_scores_a[i] - fold_scores_b[i];
    c.mean_difference = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(diff.size());
    c.sd_difference = population_sd(diff, c.mean_difference);
    c.test = stats::paired_ttest_cv(fold_scores_a, fold_scores_b);
    return c;
}

MetricSet test_evaluate(const pipeline::FittedPipeline& p, const Matrix& test_rows,
                        const std::vector<int>& test_labels) {
    return weighted_metrics(test_labels, pipeline::pipeline_predict(p, test_rows),
                            pipeline::pipeline_scores(p, test_rows));
}

std::vector<RocPoint> roc_curve(const std::vector<int>& y_true, const std::vector<double>& scores) {
    if (y_true.size() != scores.size() || y_true.empty())
        throw std::invalid_argument("roc_curve: length mismatch");
    double pos = 0.0, neg = 0.0;
    for (int y : y_true) (y == 1 ? pos : neg) += 1.0;
    if (pos == 0.0 || neg == 0.0) throw std::invalid_argument("roc_curve: single-label input");

    std::vector<std::size_t> order(y_true.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<RocPoint> curve = {{0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (y_true[order[i]] == 1 ? tp : fp) += 1.0;
            ++i;
        }
        curve.push_back({fp / neg, tp / pos});
    }
    return curve;
}

double trapezoid_auc(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += 0.5 * (curve[i].tpr + curve[i - 1].tpr) * (curve[i].fpr - curve[i - 1].fpr);
    return area;
}

std::vector<CurvePoint> learning_curve(const pipeline::PipelineSpec& family,
                                       const pipeline::HyperAssignment& assignment, const Matrix& rows,
                                       const std::vector<int>& labels,
                                       const std::vector<std::uint8_t>& categorical,
                                       const std::vector<double>& fractions, std::uint64_t seed,
                                       std::size_t k) {
    std::vector<CurvePoint> out;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        double frac = fractions[fi];
        if (frac <= 0.0 || frac > 1.0)
            throw std::invalid_argument("learning_curve: fractions must lie in (0, 1]");
        std::vector<std::size_t> sub;
        if (frac == 1.0) {
            sub.resize(labels.size());
            std::iota(sub.begin(), sub.end(), 0);
        } else {
            sub = stratified_split(labels, 1.0 - frac, derive_seed(seed, {kCurveTag, fi})).train_rows;
        }
        std::vector<int> sub_labels = subset(labels, sub);
        if (std::count(sub_labels.begin(), sub_labels.end(), 1) == 0 ||
            std::count(sub_labels.begin(), sub_labels.end(), 0) == 0)
            throw std::invalid_argument("learning_curve: fraction too small to keep both labels");
        Matrix sub_rows = rows.select_rows(sub);
        std::size_t k_eff = std::min(k, sub.size());
        auto folds = stratified_kfold(sub_labels, k_eff, derive_seed(seed, {kCurveTag, fi, 1}));

        std::vector<double> train_scores, val_scores;
        for (std::size_t f = 0; f < k_eff; ++f) {
            auto train_idx = complement(folds, f);
            double ts = 0.0, vs = 0.0;
            try {
                Matrix tr = sub_rows.select_rows(train_idx);
                auto trl = subset(sub_labels, train_idx);
                auto fitted = pipeline::fit_pipeline(family, assignment, tr, trl, categorical,
                                                     derive_seed(seed, {kCurveTag, fi, 2, f}));
                ts = weighted_metrics(trl, pipeline::pipeline_predict(fitted, tr),
                                      pipeline::pipeline_scores(fitted, tr))
                         .f1_weighted;
                Matrix vl = sub_rows.select_rows(folds[f]);
                vs = weighted_metrics(subset(sub_labels, folds[f]),
                                      pipeline::pipeline_predict(fitted, vl),
                                      pipeline::pipeline_scores(fitted, vl))
                         .f1_weighted;
            } catch (const std::exception&) {
                // failed fold scores as zero, mirroring the inner engine
            }
            train_scores.push_back(ts);
            val_scores.push_back(vs);
        }
        CurvePoint pt;
        pt.fraction = frac;
        pt.train_mean = std::accumulate(train_scores.begin(), train_scores.end(), 0.0) /
                        static_cast<double>(k_eff);
        pt.train_sd = population_sd(train_scores, pt.train_mean);
        pt.validation_mean = std::accumulate(val_scores.begin(), val_scores.end(), 0.0) /
                             static_cast<double>(k_eff);
        pt.validation_sd = population_sd(val_scores, pt.validation_mean);
        out.push_back(pt);
    }
    return out;
}

}  // namespace cpapml::evaluation
