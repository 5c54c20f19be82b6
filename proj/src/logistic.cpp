#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cpapml/learners.hpp"
#include "cpapml/model_io.hpp"

namespace cpapml::learners {

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Objective {
    const Matrix& x;
    const std::vector<int>& y;
    const std::vector<double>& w;  // sample weights
    double l2 = 0.0;               // 1/(2C) for l2 penalty, else 0

    // Smooth part: weighted logistic loss + optional l2 ridge on coef.
    double value(const std::vector<double>& coef, double intercept) const {
        double loss = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double z = intercept;
            for (std::size_t j = 0; j < x.cols(); ++j) z += x.at(i, j) * coef[j];
            double yy = y[i] == 1 ? 1.0 : -1.0;
            loss += w[i] * log1pexp(-yy * z);
        }
        if (l2 > 0) {
            double ss = 0.0;
            for (double c : coef) ss += c * c;
            loss += l2 * ss;
        }
        return loss;
    }

    void gradient(const std::vector<double>& coef, double intercept,
                  std::vector<double>& gcoef, double& gintercept) const {
        gcoef.assign(coef.size(), 0.0);
        gintercept = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double z = intercept;
            for (std::size_t j = 0; j < x.cols(); ++j) z += x.at(i, j) * coef[j];
            double yy = y[i] == 1 ? 1.0 : -1.0;
            double g = -w[i] * yy * sigmoid(-yy * z);
            for (std::size_t j = 0; j < x.cols(); ++j) gcoef[j] += g * x.at(i, j);
            gintercept += g;
        }
        if (l2 > 0)
            for (std::size_t j = 0; j < coef.size(); ++j) gcoef[j] += 2.0 * l2 * coef[j];
    }
};

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

// IRLS outer loop with a soft-threshold coordinate-descent inner solve on the
// weighted quadratic approximation (glmnet-style); intercept unpenalized.
LogisticFit fit_logistic(const Matrix& rows, const std::vector<int>& labels,
                         const std::vector<double>& sample_weights, double C,
                         const std::string& penalty, double tol, int max_iter) {
    if (rows.rows() != labels.size()) throw std::invalid_argument("fit_logistic: label count mismatch");
    if (C <= 0) throw std::invalid_argument("fit_logistic: C must be positive");
    if (penalty != "l1" && penalty != "l2") throw std::invalid_argument("fit_logistic: penalty must be l1|l2");
    std::vector<double> sw = sample_weights;
    if (sw.empty()) sw.assign(rows.rows(), 1.0);

    const std::size_t n = rows.rows();
    const std::size_t p = rows.cols();
    const double l1 = penalty == "l1" ? 1.0 / C : 0.0;
    Objective obj{rows, labels, sw, penalty == "l2" ? 0.5 / C : 0.0};

    LogisticFit fit;
    fit.coef.assign(p, 0.0);
    std::vector<double> w(n), resid(n);
    double f_cur = obj.value(fit.coef, fit.intercept) + l1 * 0.0;

    for (int it = 0; it < max_iter; ++it) {
        // Quadratic approximation at the current point.
        for (std::size_t i = 0; i < n; ++i) {
            double zi = fit.intercept;
            for (std::size_t j = 0; j < p; ++j) zi += rows.at(i, j) * fit.coef[j];
            double prob = sigmoid(zi);
            double pq = std::max(prob * (1.0 - prob), 1e-9);
            w[i] = sw[i] * pq;
            double y01 = labels[i] == 1 ? 1.0 : 0.0;
            // residual of the working response u = z + (y - prob)/pq
            resid[i] = (y01 - prob) / pq;
        }
        std::vector<double> beta = fit.coef;
        double b0 = fit.intercept;
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) wsum += w[i];

        for (int pass = 0; pass < 200; ++pass) {
            double inner_delta = 0.0;
            {  // intercept
                double num = 0.0;
                for (std::size_t i = 0; i < n; ++i) num += w[i] * resid[i];
                double d = num / wsum;
                b0 += d;
                for (std::size_t i = 0; i < n; ++i) resid[i] -= d;
                inner_delta = std::abs(d);
            }
            for (std::size_t j = 0; j < p; ++j) {
                double num = 0.0, den = 2.0 * obj.l2;
                for (std::size_t i = 0; i < n; ++i) {
                    double x = rows.at(i, j);
                    num += w[i] * x * resid[i];
                    den += w[i] * x * x;
                }
                if (den <= 0.0) continue;
                double bj = soft_threshold(num + (den - 2.0 * obj.l2) * beta[j], l1) / den;
                double d = bj - beta[j];
                if (d != 0.0) {
                    beta[j] = bj;
                    for (std::size_t i = 0; i < n; ++i) resid[i] -= d * rows.at(i, j);
                    inner_delta = std::max(inner_delta, std::abs(d));
                }
            }
            if (inner_delta < 0.1 * tol) break;
        }

        // Halving line search keeps the true objective monotone.
        const std::vector<double> cand = beta;
        const double cand_b0 = b0;
        double abs_new = 0.0;
        for (double v : beta) abs_new += std::abs(v);
        double f_new = obj.value(beta, b0) + l1 * abs_new;
        double t = 1.0;
        while (f_new > f_cur + 1e-12 && t > 1e-10) {
            t *= 0.5;
            abs_new = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                beta[j] = fit.coef[j] + t * (cand[j] - fit.coef[j]);
                abs_new += std::abs(beta[j]);
            }
            b0 = fit.intercept + t * (cand_b0 - fit.intercept);
            f_new = obj.value(beta, b0) + l1 * abs_new;
        }

        double delta = std::abs(b0 - fit.intercept);
        for (std::size_t j = 0; j < p; ++j) delta = std::max(delta, std::abs(beta[j] - fit.coef[j]));
        fit.coef = std::move(beta);
        fit.intercept = b0;
        f_cur = f_new;
        if (delta < tol) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

namespace {

class LogisticModel final : public TrainedModel {
public:
    LogisticModel(LogisticFit fit, LearnerSpec spec) : fit_(std::move(fit)), spec_(std::move(spec)) {}

    Algo algo() const override { return Algo::lr; }
    std::size_t n_features() const override { return fit_.coef.size(); }

    std::vector<double> predict_scores(const Matrix& rows) const override {
        if (rows.cols() != fit_.coef.size()) throw std::invalid_argument("LR predict: width mismatch");
        std::vector<double> out(rows.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            double z = fit_.intercept;
            for (std::size_t j = 0; j < rows.cols(); ++j) z += rows.at(i, j) * fit_.coef[j];
            out[i] = sigmoid(z);
        }
        return out;
    }

    bool has_weights() const override { return true; }
    std::vector<double> raw_weights() const override {
        std::vector<double> w(fit_.coef.size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::abs(fit_.coef[j]);
        return w;
    }

    void serialize(std::ostream& out) const override {
        out << "algo lr\n";
        out << "C " << io::num(spec_.lr_C) << "\npenalty " << spec_.penalty
            << "\nbalanced " << (spec_.balanced ? 1 : 0) << "\n";
        out << "intercept " << io::num(fit_.intercept) << "\n";
        io::write_vec(out, "coef", fit_.coef);
    }

    const LogisticFit& fit() const { return fit_; }

private:
    LogisticFit fit_;
    LearnerSpec spec_;
};

}  // namespace

std::unique_ptr<TrainedModel> train_lr(const LearnerSpec& spec, const Matrix& rows,
                                       const std::vector<int>& labels,
                                       const std::vector<double>& sample_weights) {
    auto fit = fit_logistic(rows, labels, sample_weights, spec.lr_C, spec.penalty);
    return std::make_unique<LogisticModel>(std::move(fit), spec);
}

std::unique_ptr<TrainedModel> deserialize_lr(std::istream& in) {
    LearnerSpec spec;
    spec.algo = Algo::lr;
    LogisticFit fit;
    fit.converged = true;
    spec.lr_C = io::read_num(in, "C");
    spec.penalty = io::read_word(in, "penalty");
    spec.balanced = io::read_num(in, "balanced") != 0;
    fit.intercept = io::read_num(in, "intercept");
    fit.coef = io::read_vec(in, "coef");
    return std::make_unique<LogisticModel>(std::move(fit), spec);
}

}  // namespace cpapml::learners
