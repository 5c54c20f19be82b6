#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cpapml/matrix.hpp"

namespace cpapml::learners {

enum class Algo { lr, knn, rf, svm, nn };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& s);

// Hyperparameters for all five algorithms; which fields apply is determined
// by `algo`. Values come from the grid-search table.
struct LearnerSpec {
    Algo algo = Algo::lr;
    std::uint64_t seed = 0;
    bool balanced = false;  // class_weight='balanced' (LR, RF, SVM)

    // LR
    double lr_C = 1.0;
    std::string penalty = "l2";  // "l1" | "l2"

    // k-NN
    int n_neighbors = 5;
    std::string knn_weights = "uniform";  // "uniform" | "distance"

    // RF
    int n_estimators = 100;
    std::string criterion = "gini";  // "gini" | "entropy"
    int max_depth = 0;               // 0 = unbounded ("None")

    // SVM (RBF)
    double svm_C = 1.0;
    double gamma = 0.1;

    // NN
    double alpha = 1e-4;  // L2 penalty
    std::vector<int> hidden_layers = {100};

    // Hyperparameter values in a fixed per-algorithm order, e.g. "[0.001, balanced, 30]".
    std::string params_text() const;
};

class TrainedModel {
public:
    virtual ~TrainedModel() = default;
    virtual Algo algo() const = 0;
    virtual std::size_t n_features() const = 0;
    // Scores monotone in positive-class confidence: probabilities for LR/NN,
    // vote fractions for RF/k-NN, decision values for SVM.
    virtual std::vector<double> predict_scores(const Matrix& rows) const = 0;
    virtual std::vector<int> predict(const Matrix& rows) const;
    virtual bool has_weights() const { return false; }
    virtual std::vector<double> raw_weights() const;  // throws unless has_weights()
    virtual void serialize(std::ostream& out) const = 0;
};

// Balanced per-sample weights n / (2 * n_c).
std::vector<double> balanced_weights(const std::vector<int>& labels);

std::unique_ptr<TrainedModel> train(const LearnerSpec& spec, const Matrix& rows,
                                    const std::vector<int>& labels,
                                    const std::vector<double>& sample_weights = {});

// |LR coefficients| or RF impurity importances, normalized to sum 1 when
// nonzero. Throws for non-descriptive algorithms.
std::vector<double> extract_weights(const TrainedModel& m);

void save_model(const TrainedModel& m, const std::string& path);
std::unique_ptr<TrainedModel> load_model(const std::string& path);
std::unique_ptr<TrainedModel> deserialize_model(std::istream& in);

// --- algorithm internals reused elsewhere ---

struct LogisticFit {
    std::vector<double> coef;
    double intercept = 0.0;
    bool converged = false;
};

// L1/L2-penalized logistic regression by proximal gradient with backtracking
// and acceleration; C is the inverse regularization strength.
LogisticFit fit_logistic(const Matrix& rows, const std::vector<int>& labels,
                         const std::vector<double>& sample_weights, double C,
                         const std::string& penalty, double tol = 1e-6, int max_iter = 1000);

// Trains an SVM and returns the worst KKT violation over the training set;
// test hook for the optimizer.
double svm_train_kkt(const LearnerSpec& spec, const Matrix& rows, const std::vector<int>& labels,
                     const std::vector<double>& sample_weights = {});

// NN loss gradient at the current parameters vs a central finite difference;
// returns max relative error. Test hook.
double nn_gradient_check(const LearnerSpec& spec, const Matrix& rows, const std::vector<int>& labels);

}  // namespace cpapml::learners
