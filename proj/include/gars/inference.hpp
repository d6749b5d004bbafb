#ifndef GARS_INFERENCE_HPP_
#define GARS_INFERENCE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gars/dataset.hpp"
#include "gars/functionals.hpp"
#include "gars/nuisance.hpp"
#include "gars/types.hpp"

namespace gars {

enum class EstimatorTag { Plugin, Debiased, BtRestricted };

struct GarsEstimate {
    VectorXd theta_hat;
    MatrixXd sigma_hat;  // asymptotic covariance of sqrt(n) (theta_hat - theta)
    int n = 0;
    GarsKind kind;
    EstimatorTag tag = EstimatorTag::Plugin;
    std::vector<std::string> warnings;

    VectorXd standard_errors() const;
};

enum class CiMethod { GaussMax, Bonferroni };

struct CiSet {
    CiMethod method = CiMethod::GaussMax;
    double alpha = 0.05;
    double c_alpha = 0.0;
    VectorXd lower, upper;
    int mc_draws = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    bool covers(const VectorXd& theta) const {
        return (theta.array() >= lower.array()).all() &&
               (theta.array() <= upper.array()).all();
    }
    double mean_width() const { return (upper - lower).mean(); }
};

/// Plug-in estimate: mean of F(mu_hat(x_i)); sigma_hat is the empirical covariance
/// of the F values (ignores nuisance estimation error by construction).
GarsEstimate plugin_estimate(const std::vector<MuTensor>& mu_hat, const GarsKind& kind,
                             const CategoryScheme& scheme,
                             const std::vector<const MuTensor*>* judges = nullptr);

/// One row per context: F(mu_hat) - theta_ref + sum over selected pairs of
/// (1/pi) J (y - mu). Closed-form Jacobians where available.
MatrixXd influence_values(const PreferenceDataset& ds, const std::vector<MuTensor>& mu_hat,
                          const std::vector<PiMatrix>& pi_hat, const GarsKind& kind,
                          const CategoryScheme& scheme, const VectorXd& theta_ref,
                          double pi_floor = 1e-12);

/// One-step estimator; sigma_hat is the outer-product average of the influence
/// rows at theta_ref = theta_hat. `center_covariance` subtracts the row mean
/// first, which is exactly zero at theta_hat, so the default (off) coincides.
GarsEstimate debiased_estimate(const PreferenceDataset& ds,
                               const CrossFittedNuisances& nuisances, const GarsKind& kind,
                               const CategoryScheme& scheme, bool center_covariance = false);

struct CiOptions {
    CiMethod method = CiMethod::GaussMax;
    double alpha = 0.05;
    int mc_draws = 100000;
    std::uint64_t seed = 0;
};

CiSet simultaneous_cis(const GarsEstimate& est, const CiOptions& opts);

struct EllipsoidResult {
    double statistic = 0.0;
    double threshold = 0.0;
    bool inside = false;
};

EllipsoidResult ellipsoid_test(const GarsEstimate& est, const VectorXd& theta0, double alpha);

}  // namespace gars

#endif  // GARS_INFERENCE_HPP_
