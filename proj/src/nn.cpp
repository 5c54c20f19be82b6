#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cpapml/learners.hpp"
#include "cpapml/model_io.hpp"
#include "cpapml/rng.hpp"

namespace cpapml::learners {

namespace {

constexpr int kMaxEpochs = 500;
constexpr double kLearningRate = 0.01;
constexpr double kLossTol = 1e-5;
constexpr int kPatience = 20;

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Fully connected net: ReLU hidden layers, sigmoid output, cross-entropy
// loss with L2 penalty alpha/(2n) * ||W||^2, full-batch Adam.
struct Net {
    std::vector<std::size_t> sizes;            // input, hidden..., 1
    std::vector<std::vector<double>> weights;  // [layer][out * in]
    std::vector<std::vector<double>> biases;   // [layer][out]

    void init(std::mt19937_64& rng) {
        weights.clear();
        biases.clear();
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            double bound = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
            std::uniform_real_distribution<double> u(-bound, bound);
            std::vector<double> w(sizes[l] * sizes[l + 1]);
            for (auto& v : w) v = u(rng);
            weights.push_back(std::move(w));
            biases.emplace_back(sizes[l + 1], 0.0);
        }
    }

    std::size_t n_layers() const { return weights.size(); }

    // Forward pass for one sample; activations[l] has sizes[l] entries.
    void forward(const double* row, std::vector<std::vector<double>>& acts) const {
        acts.resize(sizes.size());
        acts[0].assign(row, row + sizes[0]);
        for (std::size_t l = 0; l < n_layers(); ++l) {
            acts[l + 1].assign(sizes[l + 1], 0.0);
            const auto& w = weights[l];
            for (std::size_t o = 0; o < sizes[l + 1]; ++o) {
                double z = biases[l][o];
                const double* wrow = w.data() + o * sizes[l];
                for (std::size_t i = 0; i < sizes[l]; ++i) z += wrow[i] * acts[l][i];
                acts[l + 1][o] = l + 1 == sizes.size() - 1 ? sigmoid(z) : std::max(0.0, z);
            }
        }
    }

    double score(const double* row) const {
        thread_local std::vector<std::vector<double>> acts;
        forward(row, acts);
        return acts.back()[0];
    }
};

struct Gradients {
    std::vector<std::vector<double>> dw, db;
    void zero(const Net& net) {
        dw.resize(net.n_layers());
        db.resize(net.n_layers());
        for (std::size_t l = 0; l < net.n_layers(); ++l) {
            dw[l].assign(net.weights[l].size(), 0.0);
            db[l].assign(net.biases[l].size(), 0.0);
        }
    }
};

// Weighted loss and full-batch gradient.
double loss_and_grad(const Net& net, const Matrix& x, const std::vector<int>& y,
                     const std::vector<double>& w, double alpha, Gradients* grads) {
    const double n = static_cast<double>(x.rows());
    double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    if (grads) grads->zero(net);
    double loss = 0.0;
    std::vector<std::vector<double>> acts;
    std::vector<double> delta, next_delta;
    for (std::size_t s = 0; s < x.rows(); ++s) {
        net.forward(x.row(s), acts);
        double p = acts.back()[0];
        double t = y[s] == 1 ? 1.0 : 0.0;
        double pc = std::min(1.0 - 1e-12, std::max(1e-12, p));
        loss += -w[s] * (t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
        if (!grads) continue;
        // Output delta for sigmoid + CE: p - t.
        delta.assign(1, w[s] * (p - t) / wsum);
        for (std::size_t l = net.n_layers(); l-- > 0;) {
            const auto& a_in = acts[l];
            for (std::size_t o = 0; o < net.sizes[l + 1]; ++o) {
                grads->db[l][o] += delta[o];
                double* dwrow = grads->dw[l].data() + o * net.sizes[l];
                for (std::size_t i = 0; i < net.sizes[l]; ++i) dwrow[i] += delta[o] * a_in[i];
            }
            if (l == 0) break;
            next_delta.assign(net.sizes[l], 0.0);
            for (std::size_t o = 0; o < net.sizes[l + 1]; ++o) {
                const double* wrow = net.weights[l].data() + o * net.sizes[l];
                for (std::size_t i = 0; i < net.sizes[l]; ++i)
                    if (acts[l][i] > 0.0) next_delta[i] += wrow[i] * delta[o];
            }
            delta = next_delta;
        }
    }
    loss /= wsum;
    double ss = 0.0;
    for (std::size_t l = 0; l < net.n_layers(); ++l)
        for (double v : net.weights[l]) ss += v * v;
    loss += alpha * ss / (2.0 * n);
    if (grads)
        for (std::size_t l = 0; l < net.n_layers(); ++l)
            for (std::size_t i = 0; i < net.weights[l].size(); ++i)
                grads->dw[l][i] += alpha * net.weights[l][i] / n;
    return loss;
}

void fit_net(Net& net, const Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
             double alpha) {
    Gradients g, m, v;
    m.zero(net);
    v.zero(net);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
        double loss = loss_and_grad(net, x, y, w, alpha, &g);
        if (loss < best - kLossTol) {
            best = loss;
            stale = 0;
        } else if (++stale >= kPatience) {
            break;
        }
        b1t *= b1;
        b2t *= b2;
        for (std::size_t l = 0; l < net.n_layers(); ++l) {
            auto step = [&](std::vector<double>& param, std::vector<double>& grad,
                            std::vector<double>& m1, std::vector<double>& m2) {
                for (std::size_t i = 0; i < param.size(); ++i) {
                    m1[i] = b1 * m1[i] + (1 - b1) * grad[i];
                    m2[i] = b2 * m2[i] + (1 - b2) * grad[i] * grad[i];
                    double mh = m1[i] / (1 - b1t), vh = m2[i] / (1 - b2t);
                    param[i] -= kLearningRate * mh / (std::sqrt(vh) + eps);
                }
            };
            step(net.weights[l], g.dw[l], m.dw[l], v.dw[l]);
            step(net.biases[l], g.db[l], m.db[l], v.db[l]);
        }
    }
}

class NnModel final : public TrainedModel {
public:
    NnModel(Net net, LearnerSpec spec) : net_(std::move(net)), spec_(std::move(spec)) {}

    Algo algo() const override { return Algo::nn; }
    std::size_t n_features() const override { return net_.sizes.front(); }

    std::vector<double> predict_scores(const Matrix& rows) const override {
        if (rows.cols() != net_.sizes.front()) throw std::invalid_argument("NN predict: width mismatch");
        std::vector<double> out(rows.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = net_.score(rows.row(i));
        return out;
    }

    void serialize(std::ostream& out) const override {
        out << "algo nn\n";
        out << "alpha " << io::num(spec_.alpha) << "\nlayers " << net_.sizes.size();
        for (auto s : net_.sizes) out << " " << s;
        out << "\n";
        for (std::size_t l = 0; l < net_.n_layers(); ++l) {
            io::write_vec(out, "w" + std::to_string(l), net_.weights[l]);
            io::write_vec(out, "b" + std::to_string(l), net_.biases[l]);
        }
    }

private:
    Net net_;
    LearnerSpec spec_;
};

Net make_net(const LearnerSpec& spec, std::size_t n_inputs) {
    Net net;
    net.sizes.push_back(n_inputs);
    for (int h : spec.hidden_layers) {
        if (h < 1) throw std::invalid_argument("NN: hidden layer size must be >= 1");
        net.sizes.push_back(static_cast<std::size_t>(h));
    }
    net.sizes.push_back(1);
    auto rng = make_rng(spec.seed, {0x6e6eULL});
    net.init(rng);
    return net;
}

}  // namespace

std::unique_ptr<TrainedModel> train_nn(const LearnerSpec& spec, const Matrix& rows,
                                       const std::vector<int>& labels,
                                       const std::vector<double>& sample_weights) {
    if (spec.alpha < 0) throw std::invalid_argument("NN: alpha must be >= 0");
    Net net = make_net(spec, rows.cols());
    std::vector<double> w = sample_weights;
    if (w.empty()) w.assign(rows.rows(), 1.0);
    fit_net(net, rows, labels, w, spec.alpha);
    return std::make_unique<NnModel>(std::move(net), spec);
}

double nn_gradient_check(const LearnerSpec& spec, const Matrix& rows, const std::vector<int>& labels) {
    Net net = make_net(spec, rows.cols());
    std::vector<double> w(rows.rows(), 1.0);
    Gradients g;
    loss_and_grad(net, rows, labels, w, spec.alpha, &g);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
            double saved = net.weights[l][i];
            net.weights[l][i] = saved + h;
            double fp = loss_and_grad(net, rows, labels, w, spec.alpha, nullptr);
            net.weights[l][i] = saved - h;
            double fm = loss_and_grad(net, rows, labels, w, spec.alpha, nullptr);
            net.weights[l][i] = saved;
            double fd = (fp - fm) / (2 * h);
            double denom = std::max({std::abs(fd), std::abs(g.dw[l][i]), 1e-8});
            worst = std::max(worst, std::abs(fd - g.dw[l][i]) / denom);
        }
        for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
            double saved = net.biases[l][i];
            net.biases[l][i] = saved + h;
            double fp = loss_and_grad(net, rows, labels, w, spec.alpha, nullptr);
            net.biases[l][i] = saved - h;
            double fm = loss_and_grad(net, rows, labels, w, spec.alpha, nullptr);
            net.biases[l][i] = saved;
            double fd = (fp - fm) / (2 * h);
            double denom = std::max({std::abs(fd), std::abs(g.db[l][i]), 1e-8});
            worst = std::max(worst, std::abs(fd - g.db[l][i]) / denom);
        }
    }
    return worst;
}

std::unique_ptr<TrainedModel> deserialize_nn(std::istream& in) {
    LearnerSpec spec;
    spec.algo = Algo::nn;
    spec.alpha = io::read_num(in, "alpha");
    auto n_sizes = static_cast<std::size_t>(io::read_num(in, "layers"));
    Net net;
    net.sizes.resize(n_sizes);
    for (auto& s : net.sizes) in >> s;
    spec.hidden_layers.clear();
    for (std::size_t i = 1; i + 1 < n_sizes; ++i) spec.hidden_layers.push_back(static_cast<int>(net.sizes[i]));
    for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
        net.weights.push_back(io::read_vec(in, "w" + std::to_string(l)));
        net.biases.push_back(io::read_vec(in, "b" + std::to_string(l)));
    }
    return std::make_unique<NnModel>(std::move(net), spec);
}

}  // namespace cpapml::learners
