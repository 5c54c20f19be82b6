#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cpapml/learners.hpp"
#include "cpapml/model_io.hpp"
#include "cpapml/rng.hpp"

namespace cpapml::learners {

namespace {

struct TreeNode {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double pos_weight = 0.0, neg_weight = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double score(const double* row) const {
        int idx = 0;
        while (nodes[idx].feature >= 0)
            idx = row[nodes[idx].feature] <= nodes[idx].threshold ? nodes[idx].left : nodes[idx].right;
        double total = nodes[idx].pos_weight + nodes[idx].neg_weight;
        return total > 0 ? nodes[idx].pos_weight / total : 0.5;
    }
};

double impurity(double pos, double neg, bool entropy) {
    double total = pos + neg;
    if (total <= 0) return 0.0;
    double p1 = pos / total, p0 = neg / total;
    if (!entropy) return 1.0 - p1 * p1 - p0 * p0;
    double h = 0.0;
    if (p1 > 0) h -= p1 * std::log2(p1);
    if (p0 > 0) h -= p0 * std::log2(p0);
    return h;
}

struct TreeBuilder {
    const Matrix& x;
    const std::vector<int>& y;
    const std::vector<double>& w;
    bool entropy;
    int max_depth;  // 0 = unbounded
    std::size_t n_split_features;
    std::mt19937_64& rng;
    Tree tree;
    std::vector<double>& importance;  // accumulated weighted impurity decrease
    std::vector<std::size_t> feat_pool;

    int build(std::vector<std::size_t>& samples, int depth) {
        double pos = 0.0, neg = 0.0;
        for (auto i : samples) (y[i] == 1 ? pos : neg) += w[i];
        int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[id].pos_weight = pos;
        tree.nodes[id].neg_weight = neg;
        double imp = impurity(pos, neg, entropy);
        if (imp <= 0.0 || samples.size() < 2 || (max_depth > 0 && depth >= max_depth)) return id;

        // Random feature subset of size sqrt(p).
        for (std::size_t i = 0; i < n_split_features; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, feat_pool.size() - 1);
            std::swap(feat_pool[i], feat_pool[pick(rng)]);
        }

        int best_feature = -1;
        double best_gain = 1e-12, best_threshold = 0.0;
        std::vector<std::size_t> order(samples.size());
        for (std::size_t fi = 0; fi < n_split_features; ++fi) {
            std::size_t f = feat_pool[fi];
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return x.at(samples[a], f) < x.at(samples[b], f);
            });
            double lpos = 0.0, lneg = 0.0;
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                std::size_t i = samples[order[k]];
                (y[i] == 1 ? lpos : lneg) += w[i];
                double v = x.at(i, f), vn = x.at(samples[order[k + 1]], f);
                if (v == vn) continue;
                double rpos = pos - lpos, rneg = neg - lneg;
                double wl = lpos + lneg, wr = rpos + rneg, wt = pos + neg;
                double gain = imp - (wl / wt) * impurity(lpos, lneg, entropy)
                                  - (wr / wt) * impurity(rpos, rneg, entropy);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = (v + vn) / 2.0;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto i : samples)
            (x.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(i);
        if (left.empty() || right.empty()) return id;

        importance[static_cast<std::size_t>(best_feature)] += (pos + neg) * best_gain;
        tree.nodes[id].feature = best_feature;
        tree.nodes[id].threshold = best_threshold;
        int l = build(left, depth + 1);
        tree.nodes[id].left = l;
        int r = build(right, depth + 1);
        tree.nodes[id].right = r;
        return id;
    }
};

class ForestModel final : public TrainedModel {
public:
    ForestModel(std::vector<Tree> trees, std::vector<double> importances, std::size_t n_features,
                LearnerSpec spec)
        : trees_(std::move(trees)), importances_(std::move(importances)), n_features_(n_features),
          spec_(std::move(spec)) {}

    Algo algo() const override { return Algo::rf; }
    std::size_t n_features() const override { return n_features_; }

    std::vector<double> predict_scores(const Matrix& rows) const override {
        if (rows.cols() != n_features_) throw std::invalid_argument("RF predict: width mismatch");
        std::vector<double> out(rows.rows(), 0.0);
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            double votes = 0.0;
            for (const auto& t : trees_)
                if (t.score(rows.row(i)) >= 0.5) votes += 1.0;
            out[i] = votes / static_cast<double>(trees_.size());
        }
        return out;
    }

    bool has_weights() const override { return true; }
    std::vector<double> raw_weights() const override { return importances_; }

    void serialize(std::ostream& out) const override {
        out << "algo rf\n";
        out << "n_estimators " << spec_.n_estimators << "\ncriterion " << spec_.criterion
            << "\nmax_depth " << spec_.max_depth << "\nbalanced " << (spec_.balanced ? 1 : 0)
            << "\nn_features " << n_features_ << "\n";
        io::write_vec(out, "importances", importances_);
        out << "trees " << trees_.size() << "\n";
        for (const auto& t : trees_) {
            out << "nodes " << t.nodes.size() << "\n";
            for (const auto& n : t.nodes)
                out << n.feature << " " << io::num(n.threshold) << " " << n.left << " " << n.right
                    << " " << io::num(n.pos_weight) << " " << io::num(n.neg_weight) << "\n";
        }
    }

private:
    std::vector<Tree> trees_;
    std::vector<double> importances_;
    std::size_t n_features_;
    LearnerSpec spec_;
};

}  // namespace

std::unique_ptr<TrainedModel> train_rf(const LearnerSpec& spec, const Matrix& rows,
                                       const std::vector<int>& labels,
                                       const std::vector<double>& sample_weights) {
    const std::size_t n = rows.rows(), p = rows.cols();
    if (spec.n_estimators < 1) throw std::invalid_argument("RF: n_estimators must be >= 1");
    if (spec.criterion != "gini" && spec.criterion != "entropy")
        throw std::invalid_argument("RF: criterion must be gini|entropy");
    std::vector<double> w = sample_weights;
    if (w.empty()) w.assign(n, 1.0);

    auto n_split = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(p)))));
    std::vector<Tree> trees;
    trees.reserve(static_cast<std::size_t>(spec.n_estimators));
    std::vector<double> total_importance(p, 0.0);

    for (int t = 0; t < spec.n_estimators; ++t) {
        auto rng = make_rng(spec.seed, {0x7265ULL, static_cast<std::uint64_t>(t)});
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> samples(n);
        for (auto& s : samples) s = pick(rng);

        std::vector<double> imp(p, 0.0);
        TreeBuilder builder{rows, labels, w, spec.criterion == "entropy", spec.max_depth,
                            n_split, rng, {}, imp, {}};
        builder.feat_pool.resize(p);
        std::iota(builder.feat_pool.begin(), builder.feat_pool.end(), std::size_t{0});
        builder.build(samples, 0);
        trees.push_back(std::move(builder.tree));

        double s = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (s > 0)
            for (std::size_t j = 0; j < p; ++j) total_importance[j] += imp[j] / s;
    }
    double s = std::accumulate(total_importance.begin(), total_importance.end(), 0.0);
    if (s > 0)
        for (auto& v : total_importance) v /= s;

    return std::make_unique<ForestModel>(std::move(trees), std::move(total_importance), p, spec);
}

std::unique_ptr<TrainedModel> deserialize_rf(std::istream& in) {
    LearnerSpec spec;
    spec.algo = Algo::rf;
    spec.n_estimators = static_cast<int>(io::read_num(in, "n_estimators"));
    spec.criterion = io::read_word(in, "criterion");
    spec.max_depth = static_cast<int>(io::read_num(in, "max_depth"));
    spec.balanced = io::read_num(in, "balanced") != 0;
    auto p = static_cast<std::size_t>(io::read_num(in, "n_features"));
    auto importances = io::read_vec(in, "importances");
    auto n_trees = static_cast<std::size_t>(io::read_num(in, "trees"));
    std::vector<Tree> trees(n_trees);
    for (auto& t : trees) {
        auto n_nodes = static_cast<std::size_t>(io::read_num(in, "nodes"));
        t.nodes.resize(n_nodes);
        for (auto& n : t.nodes) in >> n.feature >> n.threshold >> n.left >> n.right >> n.pos_weight >> n.neg_weight;
        if (!in) throw std::runtime_error("model file: truncated tree");
    }
    return std::make_unique<ForestModel>(std::move(trees), std::move(importances), p, spec);
}

}  // namespace cpapml::learners
