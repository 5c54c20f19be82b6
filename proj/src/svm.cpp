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

constexpr double kTol = 1e-3;   // KKT tolerance
constexpr double kEps = 1e-8;   // minimal alpha step

double rbf(const double* a, const double* b, std::size_t p, double gamma) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j] - b[j];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

// Platt-style SMO with per-sample box constraints (class weighting).
struct Smo {
    const Matrix& x;
    std::vector<double> y;   // +-1
    std::vector<double> cap; // per-sample C
    double gamma;
    std::mt19937_64 rng;

    std::vector<double> alpha, error, kernel;  // kernel: full n x n row cache
    double b = 0.0;
    std::size_t n = 0;

    double k(std::size_t i, std::size_t j) const { return kernel[i * n + j]; }

    double decision(std::size_t i) const {
        double s = -b;
        for (std::size_t j = 0; j < n; ++j)
            if (alpha[j] > 0) s += alpha[j] * y[j] * k(j, i);
        return s;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        double a1 = alpha[i1], a2 = alpha[i2];
        double y1 = y[i1], y2 = y[i2];
        double e1 = error[i1], e2 = error[i2];
        double s = y1 * y2;
        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(cap[i2], cap[i1] + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - cap[i1]);
            hi = std::min(cap[i2], a1 + a2);
        }
        if (lo >= hi) return false;
        double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
        double eta = k11 + k22 - 2.0 * k12;
        double a2_new;
        if (eta > 0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::min(hi, std::max(lo, a2_new));
        } else {
            // Flat direction: move to the better end of the segment.
            double f1 = y1 * e1 - a1 * k11 - s * a2 * k12;
            double f2 = y2 * e2 - a2 * k22 - s * a1 * k12;
            double l1 = a1 + s * (a2 - lo), h1 = a1 + s * (a2 - hi);
            double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if (obj_lo < obj_hi - kEps)
                a2_new = lo;
            else if (obj_lo > obj_hi + kEps)
                a2_new = hi;
            else
                a2_new = a2;
        }
        if (std::abs(a2_new - a2) < kEps * (a2_new + a2 + kEps)) return false;
        double a1_new = a1 + s * (a2 - a2_new);

        double b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 + b;
        double b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 + b;
        double b_new;
        if (a1_new > 0 && a1_new < cap[i1])
            b_new = b1;
        else if (a2_new > 0 && a2_new < cap[i2])
            b_new = b2;
        else
            b_new = (b1 + b2) / 2.0;

        double db = b_new - b;
        b = b_new;
        alpha[i1] = a1_new;
        alpha[i2] = a2_new;
        for (std::size_t i = 0; i < n; ++i)
            error[i] += y1 * (a1_new - a1) * k(i1, i) + y2 * (a2_new - a2) * k(i2, i) - db;
        return true;
    }

    bool examine(std::size_t i2) {
        double y2 = y[i2], a2 = alpha[i2], e2 = error[i2];
        double r2 = e2 * y2;
        if ((r2 < -kTol && a2 < cap[i2]) || (r2 > kTol && a2 > 0)) {
            // Second-choice heuristic: maximize |E1 - E2| over non-bound points.
            std::size_t best = n;
            double best_gap = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (alpha[i] <= 0 || alpha[i] >= cap[i]) continue;
                double gap = std::abs(error[i] - e2);
                if (gap > best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
            if (best < n && take_step(best, i2)) return true;
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::size_t start = pick(rng);
            for (std::size_t off = 0; off < n; ++off) {
                std::size_t i = (start + off) % n;
                if (alpha[i] > 0 && alpha[i] < cap[i] && take_step(i, i2)) return true;
            }
            start = pick(rng);
            for (std::size_t off = 0; off < n; ++off)
                if (take_step((start + off) % n, i2)) return true;
        }
        return false;
    }

    void solve() {
        n = x.rows();
        alpha.assign(n, 0.0);
        error.resize(n);
        kernel.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                kernel[i * n + j] = kernel[j * n + i] = rbf(x.row(i), x.row(j), x.cols(), gamma);
        for (std::size_t i = 0; i < n; ++i) error[i] = -y[i];

        std::size_t changed = 0;
        bool examine_all = true;
        long guard = static_cast<long>(2000 * n);  // hard cap on sweeps
        while ((changed > 0 || examine_all) && guard-- > 0) {
            changed = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (examine_all || (alpha[i] > 0 && alpha[i] < cap[i]))
                    changed += examine(i) ? 1 : 0;
            examine_all = examine_all ? false : changed == 0;
        }
    }
};

class SvmModel final : public TrainedModel {
public:
    SvmModel(Matrix support, std::vector<double> coef, double b, double gamma, LearnerSpec spec)
        : support_(std::move(support)), coef_(std::move(coef)), b_(b), gamma_(gamma), spec_(std::move(spec)) {}

    Algo algo() const override { return Algo::svm; }
    std::size_t n_features() const override { return support_.cols(); }

    std::vector<double> predict_scores(const Matrix& rows) const override {
        if (rows.cols() != support_.cols()) throw std::invalid_argument("SVM predict: width mismatch");
        std::vector<double> out(rows.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            double s = -b_;
            for (std::size_t j = 0; j < support_.rows(); ++j)
                s += coef_[j] * rbf(support_.row(j), rows.row(i), rows.cols(), gamma_);
            out[i] = s;
        }
        return out;
    }

    std::vector<int> predict(const Matrix& rows) const override {
        auto scores = predict_scores(rows);
        std::vector<int> out(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= 0.0 ? 1 : 0;
        return out;
    }

    void serialize(std::ostream& out) const override {
        out << "algo svm\n";
        out << "C " << io::num(spec_.svm_C) << "\ngamma " << io::num(gamma_) << "\nbalanced "
            << (spec_.balanced ? 1 : 0) << "\nb " << io::num(b_) << "\nn_features " << support_.cols()
            << "\nn_support " << support_.rows() << "\n";
        io::write_vec(out, "coef", coef_);
        io::write_vec(out, "support", support_.data());
    }

private:
    Matrix support_;             // support vectors
    std::vector<double> coef_;   // alpha_i * y_i
    double b_;
    double gamma_;
    LearnerSpec spec_;
};

}  // namespace

std::unique_ptr<TrainedModel> train_svm(const LearnerSpec& spec, const Matrix& rows,
                                        const std::vector<int>& labels,
                                        const std::vector<double>& sample_weights) {
    if (spec.svm_C <= 0 || spec.gamma <= 0) throw std::invalid_argument("SVM: C and gamma must be positive");
    Smo smo{rows, {}, {}, spec.gamma, make_rng(spec.seed, {0x53564dULL})};
    smo.y.resize(rows.rows());
    smo.cap.resize(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        smo.y[i] = labels[i] == 1 ? 1.0 : -1.0;
        double w = sample_weights.empty() ? 1.0 : sample_weights[i];
        smo.cap[i] = spec.svm_C * w;
    }
    smo.solve();

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < rows.rows(); ++i)
        if (smo.alpha[i] > 0) sv.push_back(i);
    Matrix support = rows.select_rows(sv);
    std::vector<double> coef(sv.size());
    for (std::size_t j = 0; j < sv.size(); ++j) coef[j] = smo.alpha[sv[j]] * smo.y[sv[j]];
    return std::make_unique<SvmModel>(std::move(support), std::move(coef), smo.b, spec.gamma, spec);
}

double svm_train_kkt(const LearnerSpec& spec, const Matrix& rows, const std::vector<int>& labels,
                     const std::vector<double>& sample_weights) {
    Smo smo{rows, {}, {}, spec.gamma, make_rng(spec.seed, {0x53564dULL})};
    smo.y.resize(rows.rows());
    smo.cap.resize(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        smo.y[i] = labels[i] == 1 ? 1.0 : -1.0;
        double w = sample_weights.empty() ? 1.0 : sample_weights[i];
        smo.cap[i] = spec.svm_C * w;
    }
    smo.solve();
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        double margin = smo.y[i] * smo.decision(i);
        if (smo.alpha[i] <= kEps)
            worst = std::max(worst, 1.0 - margin);  // must be >= 1 - tol
        else if (smo.alpha[i] >= smo.cap[i] - kEps)
            worst = std::max(worst, margin - 1.0);  // must be <= 1 + tol
        else
            worst = std::max(worst, std::abs(margin - 1.0));
    }
    return worst;
}

std::unique_ptr<TrainedModel> deserialize_svm(std::istream& in) {
    LearnerSpec spec;
    spec.algo = Algo::svm;
    spec.svm_C = io::read_num(in, "C");
    spec.gamma = io::read_num(in, "gamma");
    spec.balanced = io::read_num(in, "balanced") != 0;
    double b = io::read_num(in, "b");
    auto p = static_cast<std::size_t>(io::read_num(in, "n_features"));
    auto nsv = static_cast<std::size_t>(io::read_num(in, "n_support"));
    auto coef = io::read_vec(in, "coef");
    auto flat = io::read_vec(in, "support");
    Matrix support(nsv, p);
    support.data() = flat;
    return std::make_unique<SvmModel>(std::move(support), std::move(coef), b, spec.gamma, spec);
}

}  // namespace cpapml::learners
