#include "cpapml/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cpapml/model_io.hpp"

namespace cpapml::learners {

std::unique_ptr<TrainedModel> train_lr(const LearnerSpec&, const Matrix&, const std::vector<int>&,
                                       const std::vector<double>&);
std::unique_ptr<TrainedModel> train_rf(const LearnerSpec&, const Matrix&, const std::vector<int>&,
                                       const std::vector<double>&);
std::unique_ptr<TrainedModel> train_svm(const LearnerSpec&, const Matrix&, const std::vector<int>&,
                                        const std::vector<double>&);
std::unique_ptr<TrainedModel> train_nn(const LearnerSpec&, const Matrix&, const std::vector<int>&,
                                       const std::vector<double>&);
std::unique_ptr<TrainedModel> deserialize_lr(std::istream&);
std::unique_ptr<TrainedModel> deserialize_rf(std::istream&);
std::unique_ptr<TrainedModel> deserialize_svm(std::istream&);
std::unique_ptr<TrainedModel> deserialize_nn(std::istream&);

std::string to_string(Algo a) {
    switch (a) {
        case Algo::lr: return "LR";
        case Algo::knn: return "KNN";
        case Algo::rf: return "RF";
        case Algo::svm: return "SVM";
        case Algo::nn: return "NN";
    }
    return "?";
}

Algo algo_from_string(const std::string& s) {
    if (s == "LR" || s == "lr") return Algo::lr;
    if (s == "KNN" || s == "knn") return Algo::knn;
    if (s == "RF" || s == "rf") return Algo::rf;
    if (s == "SVM" || s == "svm") return Algo::svm;
    if (s == "NN" || s == "nn") return Algo::nn;
    throw std::invalid_argument("unknown algorithm: '" + s + "'");
}

namespace {
std::string short_num(double v) {
    std::ostringstream ss;
    ss.precision(10);
    ss << v;
    return ss.str();
}
}  // namespace

std::string LearnerSpec::params_text() const {
    std::ostringstream ss;
    ss << "[";
    switch (algo) {
        case Algo::lr:
            ss << short_num(lr_C) << ", " << (balanced ? "balanced" : "None") << ", " << penalty;
            break;
        case Algo::knn:
            ss << n_neighbors << ", " << knn_weights;
            break;
        case Algo::rf:
            ss << n_estimators << ", " << criterion << ", " << (max_depth > 0 ? std::to_string(max_depth) : "None")
               << ", " << (balanced ? "balanced" : "None");
            break;
        case Algo::svm:
            ss << short_num(gamma) << ", " << (balanced ? "balanced" : "None") << ", " << short_num(svm_C);
            break;
        case Algo::nn:
            ss << short_num(alpha) << ", (";
            for (std::size_t i = 0; i < hidden_layers.size(); ++i) ss << (i ? "," : "") << hidden_layers[i];
            ss << ")";
            break;
    }
    ss << "]";
    return ss.str();
}

std::vector<int> TrainedModel::predict(const Matrix& rows) const {
    auto scores = predict_scores(rows);
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= 0.5 ? 1 : 0;
    return out;
}

std::vector<double> TrainedModel::raw_weights() const {
    throw std::invalid_argument("non-descriptive model: " + to_string(algo()) + " exposes no weights");
}

std::vector<double> balanced_weights(const std::vector<int>& labels) {
    double n1 = 0.0;
    for (int y : labels) n1 += y == 1 ? 1.0 : 0.0;
    double n0 = static_cast<double>(labels.size()) - n1;
    double n = static_cast<double>(labels.size());
    std::vector<double> w(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] == 1 ? n / (2.0 * n1) : n / (2.0 * n0);
    return w;
}

namespace {

class KnnModel final : public TrainedModel {
public:
    KnnModel(Matrix train, std::vector<int> labels, LearnerSpec spec)
        : train_(std::move(train)), labels_(std::move(labels)), spec_(std::move(spec)) {}

    Algo algo() const override { return Algo::knn; }
    std::size_t n_features() const override { return train_.cols(); }

    std::vector<double> predict_scores(const Matrix& rows) const override {
        if (rows.cols() != train_.cols()) throw std::invalid_argument("KNN predict: width mismatch");
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(spec_.n_neighbors), train_.rows());
        const bool by_distance = spec_.knn_weights == "distance";
        std::vector<double> out(rows.rows());
        std::vector<std::pair<double, std::size_t>> dist(train_.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            for (std::size_t t = 0; t < train_.rows(); ++t) {
                double s = 0.0;
                for (std::size_t j = 0; j < rows.cols(); ++j) {
                    double d = rows.at(i, j) - train_.at(t, j);
                    s += d * d;
                }
                dist[t] = {std::sqrt(s), t};
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
            double wsum = 0.0, pos = 0.0;
            for (std::size_t t = 0; t < k; ++t) {
                double w = by_distance ? 1.0 / std::max(dist[t].first, 1e-12) : 1.0;
                wsum += w;
                if (labels_[dist[t].second] == 1) pos += w;
            }
            out[i] = wsum > 0 ? pos / wsum : 0.5;
        }
        return out;
    }

    void serialize(std::ostream& out) const override {
        out << "algo knn\n";
        out << "n_neighbors " << spec_.n_neighbors << "\nweights " << spec_.knn_weights
            << "\nn_features " << train_.cols() << "\nn_train " << train_.rows() << "\n";
        io::write_vec(out, "x", train_.data());
        std::vector<double> y(labels_.begin(), labels_.end());
        io::write_vec(out, "y", y);
    }

private:
    Matrix train_;
    std::vector<int> labels_;
    LearnerSpec spec_;
};

std::unique_ptr<TrainedModel> deserialize_knn(std::istream& in) {
    LearnerSpec spec;
    spec.algo = Algo::knn;
    spec.n_neighbors = static_cast<int>(io::read_num(in, "n_neighbors"));
    spec.knn_weights = io::read_word(in, "weights");
    auto p = static_cast<std::size_t>(io::read_num(in, "n_features"));
    auto n = static_cast<std::size_t>(io::read_num(in, "n_train"));
    auto flat = io::read_vec(in, "x");
    auto y = io::read_vec(in, "y");
    Matrix train(n, p);
    train.data() = flat;
    std::vector<int> labels(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) labels[i] = static_cast<int>(y[i]);
    return std::make_unique<KnnModel>(std::move(train), std::move(labels), spec);
}

}  // namespace

std::unique_ptr<TrainedModel> train(const LearnerSpec& spec, const Matrix& rows,
                                    const std::vector<int>& labels,
                                    const std::vector<double>& sample_weights) {
    if (rows.rows() != labels.size()) throw std::invalid_argument("train: label count mismatch");
    if (rows.rows() == 0) throw std::invalid_argument("train: empty training set");
    if (!sample_weights.empty() && sample_weights.size() != labels.size())
        throw std::invalid_argument("train: sample weight count mismatch");
    bool has0 = false, has1 = false;
    for (int y : labels) {
        if (y == 0) has0 = true;
        else if (y == 1) has1 = true;
        else throw std::invalid_argument("train: labels must be 0/1");
    }
    if (!has0 || !has1) throw std::invalid_argument("train: single-label training set");

    // class_weight='balanced' folds into per-sample weights.
    std::vector<double> w = sample_weights;
    if (spec.balanced) {
        auto bw = balanced_weights(labels);
        if (w.empty())
            w = bw;
        else
            for (std::size_t i = 0; i < w.size(); ++i) w[i] *= bw[i];
    }

    switch (spec.algo) {
        case Algo::lr: return train_lr(spec, rows, labels, w);
        case Algo::knn: {
            if (spec.n_neighbors < 1) throw std::invalid_argument("KNN: n_neighbors must be >= 1");
            if (spec.knn_weights != "uniform" && spec.knn_weights != "distance")
                throw std::invalid_argument("KNN: weights must be uniform|distance");
            return std::make_unique<KnnModel>(rows, labels, spec);
        }
        case Algo::rf: return train_rf(spec, rows, labels, w);
        case Algo::svm: return train_svm(spec, rows, labels, w);
        case Algo::nn: return train_nn(spec, rows, labels, w);
    }
    throw std::logic_error("train: bad algo");
}

std::vector<double> extract_weights(const TrainedModel& m) {
    auto w = m.raw_weights();
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (s > 0)
        for (auto& v : w) v /= s;
    return w;
}

void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model: " + path);
    out << "cpapml-model v1\n";
    m.serialize(out);
}

std::unique_ptr<TrainedModel> deserialize_model(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != "cpapml-model" || version != "v1")
        throw std::runtime_error("not a cpapml model file");
    std::string algo = io::read_word(in, "algo");
    if (algo == "lr") return deserialize_lr(in);
    if (algo == "knn") return deserialize_knn(in);
    if (algo == "rf") return deserialize_rf(in);
    if (algo == "svm") return deserialize_svm(in);
    if (algo == "nn") return deserialize_nn(in);
    throw std::runtime_error("model file: unknown algorithm '" + algo + "'");
}

std::unique_ptr<TrainedModel> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model: " + path);
    return deserialize_model(in);
}

}  // namespace cpapml::learners
