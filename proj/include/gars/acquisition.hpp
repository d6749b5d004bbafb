#ifndef GARS_ACQUISITION_HPP_
#define GARS_ACQUISITION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gars/functionals.hpp"
#include "gars/types.hpp"

namespace gars {

enum class AcquisitionMode { Independent, AtMostOne };

struct BudgetSpec {
    double beta = 1.0;        // expected per-context cost budget
    double alpha_floor = 0.0; // lower bound on labeling probabilities
    MatrixXd costs;           // K x K positive costs, zero diagonal
    AcquisitionMode mode = AcquisitionMode::Independent;

    static MatrixXd unit_costs(int K);
    void validate(int K) const;  // includes feasibility
};

struct AcquisitionSolution {
    std::vector<PiMatrix> pi_star;  // per-context labeling probabilities
    double lambda = 0.0;
    std::vector<double> nu;         // water levels (at-most-one mode)
    double achieved_cost = 0.0;     // empirical mean of sum c_jk pi_jk
    double objective = 0.0;         // mean sum W/pi (A-opt, water-filling); log det Sigma (D-opt)
    bool budget_binding = false;
    std::vector<std::string> warnings;
};

/// W_jk = tr(J_jk V_jk J_jk^T) with V = Diag(mu_jk) - mu_jk mu_jk^T.
MatrixXd pair_information(const MuTensor& mu, const GarsKind& kind,
                          const CategoryScheme& scheme, const MuTensor* judge = nullptr);

/// Clipped square-root rule with lambda chosen by bisection on the empirical cost.
AcquisitionSolution a_optimal(const std::vector<MuTensor>& mu_rows, const BudgetSpec& budget,
                              const GarsKind& kind, const CategoryScheme& scheme,
                              double tol = 1e-6);

/// At-most-one-pair-per-context variant: outer bisection on lambda, inner
/// per-context water level nu(x) so the unordered-pair probabilities fit the
/// sub-simplex. Probabilities live on the upper triangle (j < k).
AcquisitionSolution water_filling_one_pair(const std::vector<MuTensor>& mu_rows,
                                           const BudgetSpec& budget, const GarsKind& kind,
                                           const CategoryScheme& scheme, double tol = 1e-6);

/// Sigma(pi): empirical covariance of F plus the mean of sum_jk M_jk / pi_jk,
/// with cross-pair label covariances taken to be zero.
MatrixXd efficiency_bound(const std::vector<MuTensor>& mu_rows,
                          const std::vector<PiMatrix>& pi_rows, const GarsKind& kind,
                          const CategoryScheme& scheme);

AcquisitionSolution d_optimal(const std::vector<MuTensor>& mu_rows, const BudgetSpec& budget,
                              const GarsKind& kind, const CategoryScheme& scheme,
                              int max_iter = 50, double tol = 1e-6);

struct SelectionDraw {
    std::vector<std::vector<std::pair<int, int>>> selections;  // per context
};

/// Bernoulli per ordered pair (independent mode) or a single categorical draw over
/// pairs-or-none (at-most-one). `epsilon` mixes with the budget-matched uniform rate.
SelectionDraw sample_selection(const AcquisitionSolution& sol, const BudgetSpec& budget,
                               std::uint64_t seed, double epsilon = 0.0);

void save_policy(const AcquisitionSolution& sol, AcquisitionMode mode, const std::string& path);
AcquisitionSolution load_policy(const std::string& path, AcquisitionMode* mode = nullptr);

}  // namespace gars

#endif  // GARS_ACQUISITION_HPP_
