#ifndef GARS_BTMODEL_HPP_
#define GARS_BTMODEL_HPP_

#include "gars/inference.hpp"
#include "gars/types.hpp"

namespace gars {

/// Constants of the restricted (BT-manifold) influence for one context: edge
/// probabilities after position-bias cancellation, the information Laplacian over
/// ordered pairs, and its zero-sum inverse.
struct BtRestrictedContext {
    VectorXd mu_bar;   // per unordered edge (j < k), sigma(edge logit)
    VectorXd w_edge;   // ordered-pair information per edge: 2 * mu_bar (1 - mu_bar)
    MatrixXd L_bt;     // K x K information Laplacian, L 1 = 0
    MatrixXd L_dagger; // H (H' L H)^{-1} H'

    static BtRestrictedContext build(const MuTensor& mu, const CategoryScheme& scheme,
                                     double eps = 1e-6);
};

/// Restricted Jacobian block [ +v, -v ] with v = L_dagger (e_j - e_k) / 2 (K x 2).
MatrixXd bt_restricted_jacobian(const BtRestrictedContext& ctx, int j, int k);

/// W_jk = mu_jk1 (1 - mu_jk1) * ||L_dagger b_jk||^2; drop-in information for
/// a_optimal under the restricted model.
MatrixXd bt_restricted_pair_information(const BtRestrictedContext& ctx, const MuTensor& mu);

/// Reduce a multi-category tensor to binary directional probabilities
/// (p, 1-p) with p = clamp(w1 . mu_jk).
MuTensor reduce_to_binary(const MuTensor& mu, const CategoryScheme& scheme, double eps = 1e-6);

/// One-step estimator with F = BT projection and the restricted Jacobian.
/// Requires C = 2 unless allow_reduce is set, in which case labels enter through
/// their first-item weight and mu through reduce_to_binary.
GarsEstimate bt_restricted_debiased(const PreferenceDataset& ds,
                                    const CrossFittedNuisances& nuisances,
                                    const CategoryScheme& scheme, bool allow_reduce = false);

}  // namespace gars

#endif  // GARS_BTMODEL_HPP_
