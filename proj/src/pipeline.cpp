#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cpapml/model_io.hpp"
#include "cpapml/pipeline.hpp"
#include "cpapml/rng.hpp"

namespace cpapml::pipeline {

namespace io = learners::io;

namespace {

const std::vector<std::string> kSelectors = {"none", "combine_fs", "lasso_fs", "rfe_rf_fs"};
const std::vector<learners::Algo> kAlgos = {learners::Algo::knn, learners::Algo::lr, learners::Algo::rf,
                                            learners::Algo::svm, learners::Algo::nn};
const std::vector<std::string> kSamplers = {"none", "smote"};
const std::vector<std::string> kMetrics = {"f1_weighted", "precision_weighted"};

}  // namespace

std::vector<selection::SelectorSpec> selector_grid(const std::string& method) {
    std::vector<selection::SelectorSpec> out;
    selection::SelectorSpec s;
    s.method = method;
    if (method == "none") {
        out.push_back(s);
    } else if (method == "combine_fs") {
        for (int pct : {5, 10, 20, 30, 40, 50}) {
            s.percentile = pct;
            out.push_back(s);
        }
    } else if (method == "lasso_fs") {
        for (double C : {5.0, 10.0, 20.0, 30.0, 40.0, 50.0}) {
            s.C = C;
            out.push_back(s);
        }
    } else if (method == "rfe_rf_fs") {
        s.step_fraction = 0.1;
        for (double t : {0.4, 0.6, 0.8}) {
            s.target_fraction = t;
            out.push_back(s);
        }
    } else {
        throw std::invalid_argument("unknown selector: " + method);
    }
    return out;
}

std::vector<selection::SamplerSpec> sampler_grid(const std::string& method) {
    std::vector<selection::SamplerSpec> out;
    selection::SamplerSpec s;
    s.method = method;
    if (method == "none") {
        out.push_back(s);
    } else if (method == "smote") {
        for (int k : {3, 4, 5}) {
            s.n_neighbors = k;
            out.push_back(s);
        }
    } else {
        throw std::invalid_argument("unknown sampler: " + method);
    }
    return out;
}

std::vector<learners::LearnerSpec> learner_grid(learners::Algo algo) {
    std::vector<learners::LearnerSpec> out;
    learners::LearnerSpec s;
    s.algo = algo;
    switch (algo) {
        case learners::Algo::knn:
            for (int k : {1, 3, 5, 7, 9, 11})
                for (const char* w : {"uniform", "distance"}) {
                    s.n_neighbors = k;
                    s.knn_weights = w;
                    out.push_back(s);
                }
            break;
        case learners::Algo::lr:
            for (double C : {0.00001, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0,
                             10.0, 15.0, 30.0})
                for (bool bal : {false, true})
                    for (const char* pen : {"l1", "l2"}) {
                        s.lr_C = C;
                        s.balanced = bal;
                        s.penalty = pen;
                        out.push_back(s);
                    }
            break;
        case learners::Algo::rf:
            for (int n : {100, 150, 200, 250, 500})
                for (const char* c : {"entropy", "gini"})
                    for (int d : {0, 4, 6})
                        for (bool bal : {false, true}) {
                            s.n_estimators = n;
                            s.criterion = c;
                            s.max_depth = d;
                            s.balanced = bal;
                            out.push_back(s);
                        }
            break;
        case learners::Algo::svm:
            for (double C : {0.01, 0.1, 0.5, 1.0, 5.0, 10.0, 15.0, 30.0, 50.0})
                for (double g : {0.0001, 0.001, 0.01, 0.1, 1.0, 5.0})
                    for (bool bal : {false, true}) {
                        s.svm_C = C;
                        s.gamma = g;
                        s.balanced = bal;
                        out.push_back(s);
                    }
            break;
        case learners::Algo::nn:
            for (double a : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 3.0, 5.0, 10.0})
                for (const std::vector<int>& h :
                     std::vector<std::vector<int>>{{30}, {50}, {70}, {100}, {150},
                                                   {30, 30}, {50, 50}, {70, 70}, {100, 100},
                                                   {30, 30, 30}, {50, 50, 50}, {70, 70, 70}}) {
                    s.alpha = a;
                    s.hidden_layers = h;
                    out.push_back(s);
                }
            break;
    }
    return out;
}

namespace {

template <typename Fn>
auto run_step(const char* step, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("step ") + step + ": " + e.what());
    }
}

}  // namespace

std::string PipelineSpec::family_id() const {
    return sampler + "+" + selector + "+" + learning_metric + "+" + learners::to_string(algo);
}

std::vector<PipelineSpec> enumerate_grid() {
    std::vector<PipelineSpec> out;
    for (const auto& sel : kSelectors)
        for (auto algo : kAlgos)
            for (const auto& sm : kSamplers)
                for (const auto& metric : kMetrics) {
                    PipelineSpec f;
                    f.selector = sel;
                    f.algo = algo;
                    f.sampler = sm;
                    f.learning_metric = metric;
                    out.push_back(f);
                }
    return out;
}

std::vector<PipelineSpec> apply_exclusion(const std::vector<PipelineSpec>& families) {
    std::vector<PipelineSpec> out;
    for (const auto& f : families)
        if (!(f.selector == "rfe_rf_fs" && f.algo == learners::Algo::rf)) out.push_back(f);
    return out;
}

std::vector<HyperAssignment> expand_family(const PipelineSpec& family) {
    std::vector<HyperAssignment> out;
    for (const auto& sel : selector_grid(family.selector))
        for (const auto& sm : sampler_grid(family.sampler))
            for (const auto& l : learner_grid(family.algo)) {
                HyperAssignment a;
                a.selector = sel;
                a.sampler = sm;
                a.learner = l;
                out.push_back(a);
            }
    return out;
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const HyperAssignment& assignment,
                            const Matrix& rows, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& categorical, std::uint64_t seed) {
    if (rows.rows() != labels.size()) throw std::invalid_argument("fit_pipeline: label count mismatch");
    if (rows.cols() != categorical.size())
        throw std::invalid_argument("fit_pipeline: categorical mask width mismatch");

    FittedPipeline p;
    p.spec = spec;
    p.assignment = assignment;

    p.impute = run_step("impute", [&] { return preprocess::fit_impute(rows, categorical); });
    Matrix imputed = preprocess::apply_transform(p.impute, rows);
    p.variance = run_step("variance_filter", [&] { return preprocess::fit_variance_filter(imputed); });
    Matrix filtered = preprocess::apply_transform(p.variance, imputed);
    p.standardize = run_step("standardize", [&] { return preprocess::fit_standardize(filtered); });
    Matrix standardized = preprocess::apply_transform(p.standardize, filtered);

    std::vector<std::uint8_t> cat_kept;
    for (std::size_t j : preprocess::kept_indices(p.variance)) cat_kept.push_back(categorical[j]);

    auto sel = run_step("select", [&] {
        return selection::run_selector(assignment.selector, standardized, filtered, labels, cat_kept,
                                       derive_seed(seed, {1}));
    });
    p.selector_mask = sel.mask;
    p.selector_warning = sel.warning;
    Matrix selected = standardized.select_cols(selection::mask_indices(sel.mask));

    auto sampled = run_step("sample", [&] {
        return selection::run_sampler(assignment.sampler, selected, labels, derive_seed(seed, {2}));
    });
    p.sampler_warning = sampled.warning;

    auto learner = assignment.learner;
    learner.algo = spec.algo;
    learner.seed = derive_seed(seed, {3});
    p.model = run_step("train", [&] { return learners::train(learner, sampled.rows, sampled.labels); });
    p.assignment.learner = learner;
    return p;
}

std::vector<double> pipeline_scores(const FittedPipeline& p, const Matrix& rows) {
    Matrix m = preprocess::apply_transform(p.impute, rows);
    m = preprocess::apply_transform(p.variance, m);
    m = preprocess::apply_transform(p.standardize, m);
    m = m.select_cols(selection::mask_indices(p.selector_mask));
    return p.model->predict_scores(m);
}

std::vector<int> pipeline_predict(const FittedPipeline& p, const Matrix& rows) {
    Matrix m = preprocess::apply_transform(p.impute, rows);
    m = preprocess::apply_transform(p.variance, m);
    m = preprocess::apply_transform(p.standardize, m);
    m = m.select_cols(selection::mask_indices(p.selector_mask));
    return p.model->predict(m);
}

namespace {

std::vector<double> to_doubles(const std::vector<std::uint8_t>& v) {
    return std::vector<double>(v.begin(), v.end());
}

std::vector<std::uint8_t> to_bytes(const std::vector<double>& v) {
    std::vector<std::uint8_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] != 0.0 ? 1 : 0;
    return out;
}

}  // namespace

void serialize_pipeline(const FittedPipeline& p, std::ostream& out) {
    out << "cpapml-pipeline v1\n";
    out << "sampler " << p.spec.sampler << "\nselector " << p.spec.selector << "\nmetric "
        << p.spec.learning_metric << "\nalgo " << learners::to_string(p.spec.algo) << "\n";
    out << "sel_percentile " << p.assignment.selector.percentile << "\nsel_C "
        << io::num(p.assignment.selector.C) << "\nsel_step " << io::num(p.assignment.selector.step_fraction)
        << "\nsel_target " << io::num(p.assignment.selector.target_fraction) << "\nsmp_k "
        << p.assignment.sampler.n_neighbors << "\n";
    const learners::LearnerSpec& l = p.assignment.learner;
    out << "lrn_balanced " << (l.balanced ? 1 : 0) << "\nlrn_C " << io::num(l.lr_C) << "\nlrn_penalty "
        << l.penalty << "\nlrn_k " << l.n_neighbors << "\nlrn_weights " << l.knn_weights << "\nlrn_trees "
        << l.n_estimators << "\nlrn_criterion " << l.criterion << "\nlrn_depth " << l.max_depth
        << "\nlrn_svm_C " << io::num(l.svm_C) << "\nlrn_gamma " << io::num(l.gamma) << "\nlrn_alpha "
        << io::num(l.alpha) << "\n";
    io::write_vec(out, "lrn_layers", std::vector<double>(l.hidden_layers.begin(), l.hidden_layers.end()));
    out << "selector_warning " << (p.selector_warning ? 1 : 0) << "\nsampler_warning "
        << (p.sampler_warning ? 1 : 0) << "\n";
    io::write_vec(out, "impute_fill", p.impute.fill);
    out << "impute_width " << p.impute.width << "\n";
    io::write_vec(out, "variance_keep", to_doubles(p.variance.keep));
    io::write_vec(out, "std_mean", p.standardize.mean);
    io::write_vec(out, "std_sd", p.standardize.sd);
    io::write_vec(out, "mask", to_doubles(p.selector_mask));
    out << "cpapml-model v1\n";
    p.model->serialize(out);
}

void save_pipeline(const FittedPipeline& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write pipeline: " + path);
    serialize_pipeline(p, out);
}

FittedPipeline load_pipeline(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open pipeline: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "cpapml-pipeline" || version != "v1")
        throw std::runtime_error("not a cpapml pipeline file");
    FittedPipeline p;
    p.spec.sampler = io::read_word(in, "sampler");
    p.spec.selector = io::read_word(in, "selector");
    p.spec.learning_metric = io::read_word(in, "metric");
    p.spec.algo = learners::algo_from_string(io::read_word(in, "algo"));
    p.assignment.selector.method = p.spec.selector;
    p.assignment.sampler.method = p.spec.sampler;
    p.assignment.selector.percentile = static_cast<int>(io::read_num(in, "sel_percentile"));
    p.assignment.selector.C = io::read_num(in, "sel_C");
    p.assignment.selector.step_fraction = io::read_num(in, "sel_step");
    p.assignment.selector.target_fraction = io::read_num(in, "sel_target");
    p.assignment.sampler.n_neighbors = static_cast<int>(io::read_num(in, "smp_k"));
    learners::LearnerSpec& l = p.assignment.learner;
    l.algo = p.spec.algo;
    l.balanced = io::read_num(in, "lrn_balanced") != 0;
    l.lr_C = io::read_num(in, "lrn_C");
    l.penalty = io::read_word(in, "lrn_penalty");
    l.n_neighbors = static_cast<int>(io::read_num(in, "lrn_k"));
    l.knn_weights = io::read_word(in, "lrn_weights");
    l.n_estimators = static_cast<int>(io::read_num(in, "lrn_trees"));
    l.criterion = io::read_word(in, "lrn_criterion");
    l.max_depth = static_cast<int>(io::read_num(in, "lrn_depth"));
    l.svm_C = io::read_num(in, "lrn_svm_C");
    l.gamma = io::read_num(in, "lrn_gamma");
    l.alpha = io::read_num(in, "lrn_alpha");
    l.hidden_layers.clear();
    for (double h : io::read_vec(in, "lrn_layers")) l.hidden_layers.push_back(static_cast<int>(h));
    p.selector_warning = io::read_num(in, "selector_warning") != 0;
    p.sampler_warning = io::read_num(in, "sampler_warning") != 0;
    p.impute.kind = preprocess::TransformKind::impute;
    p.impute.fill = io::read_vec(in, "impute_fill");
    p.impute.width = static_cast<std::size_t>(io::read_num(in, "impute_width"));
    p.variance.kind = preprocess::TransformKind::variance_filter;
    p.variance.keep = to_bytes(io::read_vec(in, "variance_keep"));
    p.variance.width = p.variance.keep.size();
    p.standardize.kind = preprocess::TransformKind::standardize;
    p.standardize.mean = io::read_vec(in, "std_mean");
    p.standardize.sd = io::read_vec(in, "std_sd");
    p.standardize.width = p.standardize.mean.size();
    p.selector_mask = to_bytes(io::read_vec(in, "mask"));
    p.model = learners::deserialize_model(in);
    return p;
}

}  // namespace cpapml::pipeline
