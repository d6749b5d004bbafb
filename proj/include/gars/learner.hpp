#ifndef GARS_LEARNER_HPP_
#define GARS_LEARNER_HPP_

#include <string>
#include <variant>
#include <vector>

#include "gars/types.hpp"

namespace gars {

struct MultinomialLogitSpec {
    double l2 = 1e-3;
    int max_iter = 500;
    double tol = 1e-8;
};

/// Child process exchanging JSONL on stdin/stdout; see external_fit_predict.
struct ExternalLearnerSpec {
    std::string command;
    double timeout_sec = 600.0;
};

struct LearnerSpec {
    std::variant<MultinomialLogitSpec, ExternalLearnerSpec> kind = MultinomialLogitSpec{};

    bool is_external() const { return std::holds_alternative<ExternalLearnerSpec>(kind); }
    const MultinomialLogitSpec& logit() const { return std::get<MultinomialLogitSpec>(kind); }
    const ExternalLearnerSpec& external() const { return std::get<ExternalLearnerSpec>(kind); }
};

/// L2-regularized multinomial logistic regression fit by damped Newton.
/// Degenerate single-class training data falls back to a constant predictor at
/// smoothed empirical frequencies (count + 1/2) / (m + C/2).
class MultinomialLogit {
public:
    /// `X` has no intercept column (one is appended internally); `w` are optional
    /// sample weights.
    static MultinomialLogit fit(const MatrixXd& X, const std::vector<int>& y, int C,
                                const MultinomialLogitSpec& spec,
                                const std::vector<double>* w = nullptr);

    /// m x C matrix of class probabilities.
    MatrixXd predict(const MatrixXd& X) const;
    VectorXd predict_one(const VectorXd& x) const;

    bool is_constant() const { return constant_; }
    const VectorXd& constant_probs() const { return const_probs_; }
    const MatrixXd& coefficients() const { return theta_; }

private:
    int C_ = 2;
    bool constant_ = false;
    VectorXd const_probs_;
    MatrixXd theta_;  // (C-1) x (q+1), last class is the reference
};

/// Run the external learner protocol: write train/predict rows as JSONL to the
/// child's stdin, read one {"probs": [...]} line per prediction row.
MatrixXd external_fit_predict(const ExternalLearnerSpec& spec, const MatrixXd& Xtrain,
                              const std::vector<int>& y, const std::vector<double>& w,
                              int C, const MatrixXd& Xpred, const std::string& task);

}  // namespace gars

#endif  // GARS_LEARNER_HPP_
