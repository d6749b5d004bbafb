#ifndef GARS_NUISANCE_HPP_
#define GARS_NUISANCE_HPP_

#include <cstdint>
#include <vector>

#include "gars/dataset.hpp"
#include "gars/learner.hpp"
#include "gars/types.hpp"

namespace gars {

struct CrossFitPlan {
    int V = 2;
    std::uint64_t seed = 0;
    std::vector<int> fold;  // row -> fold index

    int n() const { return static_cast<int>(fold.size()); }
};

/// Deterministic near-equal fold split (sizes differ by at most one).
CrossFitPlan make_plan(int n, int V, std::uint64_t seed);

/// Feature construction shared by the mu and pi models.
struct FeatureOptions {
    bool expand_features = false;   // x^2, sin/cos terms of x0 (and x1)
    bool item_interactions = false; // one-hot(j|k) x context blocks
    bool pair_intercepts = false;   // one-hot of the ordered pair
    int judge_dims = 0;             // leading judge probabilities appended (mu only)
};

/// Context transform phi(x); identity unless expand_features is set.
VectorXd context_features(const VectorXd& x, bool expand);
int context_feature_dim(int p, bool expand);

VectorXd pair_features(const VectorXd& x, int j, int k, int K, const FeatureOptions& opts,
                       const double* judge_probs = nullptr);
int pair_feature_dim(int p, int K, const FeatureOptions& opts);

struct NuisanceOptions {
    LearnerSpec learner;
    FeatureOptions features;
    bool use_judge = false;
    int neg_per_pos = 10;
    double pi_floor = 0.01;
    double mu_floor = 1e-6;  // post-prediction slice floor (clamp + renormalize)
};

struct CrossFittedNuisances {
    std::vector<MuTensor> mu_hat;
    std::vector<PiMatrix> pi_hat;
    CrossFitPlan plan;
    bool known_pi = false;
    /// fold of the model that produced row i's predictions (out-of-fold bookkeeping);
    /// -1 for known-pi rows.
    std::vector<int> trained_without_fold;
};

std::vector<MuTensor> crossfit_mu(const PreferenceDataset& ds, const CrossFitPlan& plan,
                                  const NuisanceOptions& opts);

std::vector<PiMatrix> crossfit_pi(const PreferenceDataset& ds, const CrossFitPlan& plan,
                                  const NuisanceOptions& opts);

/// Convenience wrapper fitting both nuisances (or taking pi as known).
CrossFittedNuisances crossfit(const PreferenceDataset& ds, int V, std::uint64_t seed,
                              const NuisanceOptions& opts,
                              const std::vector<PiMatrix>* known_pi = nullptr);

}  // namespace gars

#endif  // GARS_NUISANCE_HPP_
