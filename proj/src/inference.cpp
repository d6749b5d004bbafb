#include "gars/inference.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gars/rng.hpp"
#include "gars/stats.hpp"

namespace gars {

VectorXd GarsEstimate::standard_errors() const {
    return (sigma_hat.diagonal().array().max(0.0) / n).sqrt();
}

GarsEstimate plugin_estimate(const std::vector<MuTensor>& mu_hat, const GarsKind& kind,
                             const CategoryScheme& scheme,
                             const std::vector<const MuTensor*>* judges) {
    if (mu_hat.empty()) throw ValidationError("plugin_estimate: empty dataset");
    const int n = static_cast<int>(mu_hat.size());
    const int d = kind.dim(mu_hat[0].K());
    MatrixXd F(n, d);
    for (int i = 0; i < n; ++i) {
        const MuTensor* judge = judges ? (*judges)[i] : nullptr;
        F.row(i) = evaluate(kind, mu_hat[i], scheme, judge).transpose();
    }
    GarsEstimate est;
    est.kind = kind;
    est.tag = EstimatorTag::Plugin;
    est.n = n;
    est.theta_hat = F.colwise().mean().transpose();
    const MatrixXd centered = F.rowwise() - est.theta_hat.transpose();
    est.sigma_hat = centered.transpose() * centered / n;
    return est;
}

MatrixXd influence_values(const PreferenceDataset& ds, const std::vector<MuTensor>& mu_hat,
                          const std::vector<PiMatrix>& pi_hat, const GarsKind& kind,
                          const CategoryScheme& scheme, const VectorXd& theta_ref,
                          double pi_floor) {
    const int n = ds.n(), C = ds.C();
    if (static_cast<int>(mu_hat.size()) != n || static_cast<int>(pi_hat.size()) != n)
        throw ValidationError("influence_values: nuisance size mismatch");
    const int d = kind.dim(ds.K());
    if (theta_ref.size() != d) throw ValidationError("influence_values: theta_ref dim mismatch");

    MatrixXd phi(n, d);
    for (int i = 0; i < n; ++i) {
        MuTensor judge_tensor(1, 1);
        const MuTensor* judge_ptr = nullptr;
        if (kind.needs_judge()) {
            if (!ds.rows[i].judge || !ds.rows[i].judge->complete())
                throw ValidationError(
                    "influence_values: miscalibration functional needs complete judge tables");
            judge_tensor = MuTensor(ds.K(), C);
            for (int j = 0; j < ds.K(); ++j)
                for (int k = 0; k < ds.K(); ++k)
                    if (j != k)
                        judge_tensor.set_slice(j, k,
                                               ds.rows[i].judge->probs(j, k).transpose());
            judge_ptr = &judge_tensor;
        }
        VectorXd row = evaluate(kind, mu_hat[i], scheme, judge_ptr) - theta_ref;
        const PairJacobians jac(kind, mu_hat[i], scheme, judge_ptr);
        for (const auto& pl : ds.rows[i].pairs) {
            const double pi = pi_hat[i](pl.j, pl.k);
            if (!(pi >= pi_floor) || pi <= 0.0)
                throw NumericError("influence_values: propensity " + std::to_string(pi) +
                                   " below floor at row " + std::to_string(i) + " pair (" +
                                   std::to_string(pl.j) + "," + std::to_string(pl.k) +
                                   "): positivity violation");
            VectorXd resid = -mu_hat[i].slice(pl.j, pl.k).transpose();
            resid(pl.label) += 1.0;
            row += jac.block(pl.j, pl.k) * resid / pi;
        }
        phi.row(i) = row.transpose();
    }
    return phi;
}

GarsEstimate debiased_estimate(const PreferenceDataset& ds,
                               const CrossFittedNuisances& nuisances, const GarsKind& kind,
                               const CategoryScheme& scheme, bool center_covariance) {
    const int n = ds.n();
    if (n == 0) throw ValidationError("debiased_estimate: empty dataset");
    const int d = kind.dim(ds.K());
    const MatrixXd bracket = influence_values(ds, nuisances.mu_hat, nuisances.pi_hat, kind,
                                              scheme, VectorXd::Zero(d));
    GarsEstimate est;
    est.kind = kind;
    est.tag = EstimatorTag::Debiased;
    est.n = n;
    est.theta_hat = bracket.colwise().mean().transpose();
    MatrixXd phi = bracket.rowwise() - est.theta_hat.transpose();
    if (center_covariance) phi.rowwise() -= phi.colwise().mean();
    est.sigma_hat = phi.transpose() * phi / n;
    return est;
}

namespace {

MatrixXd symmetric_sqrt(const MatrixXd& R) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(R);
    if (es.info() != Eigen::Success)
        throw NumericError("simultaneous_cis: eigendecomposition failed");
    VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

CiSet simultaneous_cis(const GarsEstimate& est, const CiOptions& opts) {
    const int d = static_cast<int>(est.theta_hat.size());
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0))
        throw ValidationError("simultaneous_cis: alpha must be in (0,1)");
    CiSet ci;
    ci.method = opts.method;
    ci.alpha = opts.alpha;
    ci.seed = opts.seed;

    const VectorXd se = est.standard_errors();
    for (int j = 0; j < d; ++j)
        if (se(j) == 0.0)
            ci.warnings.push_back("coordinate " + std::to_string(j) +
                                  " has zero standard error; interval collapses to a point");

    if (opts.method == CiMethod::Bonferroni) {
        ci.c_alpha = normal_quantile(1.0 - opts.alpha / (2.0 * d));
    } else {
        if (opts.mc_draws < 1000)
            throw ValidationError("simultaneous_cis: gaussmax needs mc_draws >= 1000");
        ci.mc_draws = opts.mc_draws;
        VectorXd diag = est.sigma_hat.diagonal();
        VectorXd scale(d);
        for (int j = 0; j < d; ++j) scale(j) = diag(j) > 0 ? 1.0 / std::sqrt(diag(j)) : 0.0;
        MatrixXd R = scale.asDiagonal() * est.sigma_hat * scale.asDiagonal();
        R.diagonal().setOnes();
        R = 0.5 * (R + R.transpose());
        MatrixXd root;
        try {
            root = symmetric_sqrt(R);
        } catch (const NumericError&) {
            R.diagonal().array() += 1e-10;
            root = symmetric_sqrt(R);
        }
        Rng rng(derive_seed(opts.seed, 0xc1a));
        std::vector<double> tmax(opts.mc_draws);
        VectorXd z(d);
        for (int b = 0; b < opts.mc_draws; ++b) {
            for (int j = 0; j < d; ++j) z(j) = rng.normal();
            tmax[b] = (root * z).cwiseAbs().maxCoeff();
        }
        std::sort(tmax.begin(), tmax.end());
        const int idx = std::min<int>(opts.mc_draws - 1,
                                      static_cast<int>(std::ceil((1.0 - opts.alpha) *
                                                                 opts.mc_draws)) -
                                          1);
        ci.c_alpha = tmax[std::max(idx, 0)];
    }

    ci.lower = est.theta_hat - ci.c_alpha * se;
    ci.upper = est.theta_hat + ci.c_alpha * se;
    return ci;
}

EllipsoidResult ellipsoid_test(const GarsEstimate& est, const VectorXd& theta0, double alpha) {
    const int d = static_cast<int>(est.theta_hat.size());
    if (theta0.size() != d) throw ValidationError("ellipsoid_test: theta0 dim mismatch");
    MatrixXd S = est.sigma_hat;
    Eigen::LDLT<MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        S.diagonal().array() += 1e-10;
        ldlt.compute(S);
        if (ldlt.info() != Eigen::Success)
            throw NumericError("ellipsoid_test: singular covariance");
    }
    const VectorXd diff = est.theta_hat - theta0;
    const VectorXd sol = ldlt.solve(diff);
    if (!sol.allFinite()) throw NumericError("ellipsoid_test: singular covariance");
    EllipsoidResult res;
    res.statistic = est.n * diff.dot(sol);
    res.threshold = chisq_quantile(1.0 - alpha, d);
    res.inside = res.statistic <= res.threshold;
    return res;
}

}  // namespace gars
