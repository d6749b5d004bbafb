#include "gars/btmodel.hpp"

#include <cmath>

#include <Eigen/LU>

#include "gars/functionals.hpp"

namespace gars {

BtRestrictedContext BtRestrictedContext::build(const MuTensor& mu,
                                               const CategoryScheme& scheme, double eps) {
    const int K = mu.K();
    auto pc = ProjectionConstants::get(K);
    BtRestrictedContext ctx;
    ctx.mu_bar = edge_logits(mu, scheme, eps);
    for (int e = 0; e < ctx.mu_bar.size(); ++e)
        ctx.mu_bar(e) = 1.0 / (1.0 + std::exp(-ctx.mu_bar(e)));
    // Each unordered edge is displayed in both orders, so the information per edge
    // doubles relative to a single display.
    ctx.w_edge = 2.0 * ctx.mu_bar.array() * (1.0 - ctx.mu_bar.array());
    ctx.L_bt = pc->B.transpose() * ctx.w_edge.asDiagonal() * pc->B;
    const MatrixXd core = pc->H.transpose() * ctx.L_bt * pc->H;
    ctx.L_dagger = pc->H * core.partialPivLu().solve(pc->H.transpose());
    if (!ctx.L_dagger.allFinite())
        throw NumericError("bt restricted: singular information Laplacian");
    return ctx;
}

MatrixXd bt_restricted_jacobian(const BtRestrictedContext& ctx, int j, int k) {
    const int K = static_cast<int>(ctx.L_dagger.rows());
    VectorXd b = VectorXd::Zero(K);
    b(j) = 1.0;
    b(k) = -1.0;
    const VectorXd v = 0.5 * (ctx.L_dagger * b);
    MatrixXd J(K, 2);
    J.col(0) = v;
    J.col(1) = -v;
    return J;
}

MatrixXd bt_restricted_pair_information(const BtRestrictedContext& ctx, const MuTensor& mu) {
    if (mu.C() != 2)
        throw ValidationError("bt_restricted_pair_information: binary categories required");
    const int K = mu.K();
    MatrixXd W = MatrixXd::Zero(K, K);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            VectorXd b = VectorXd::Zero(K);
            b(j) = 1.0;
            b(k) = -1.0;
            const double p = mu(j, k, 0);
            W(j, k) = p * (1.0 - p) * (ctx.L_dagger * b).squaredNorm();
        }
    return W;
}

MuTensor reduce_to_binary(const MuTensor& mu, const CategoryScheme& scheme, double eps) {
    const int K = mu.K();
    MuTensor out(K, 2);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            double p = mu.slice(j, k).dot(scheme.w1);
            p = std::min(1.0 - eps, std::max(eps, p));
            out(j, k, 0) = p;
            out(j, k, 1) = 1.0 - p;
        }
    return out;
}

GarsEstimate bt_restricted_debiased(const PreferenceDataset& ds,
                                    const CrossFittedNuisances& nuisances,
                                    const CategoryScheme& scheme, bool allow_reduce) {
    const int n = ds.n(), K = ds.K();
    if (n == 0) throw ValidationError("bt_restricted_debiased: empty dataset");
    if (scheme.C != 2 && !allow_reduce)
        throw ValidationError(
            "bt_restricted_debiased: requires binary categories (C=2); pass allow_reduce to "
            "project through the scheme weights");
    if (static_cast<int>(nuisances.mu_hat.size()) != n)
        throw ValidationError("bt_restricted_debiased: nuisance size mismatch");

    const CategoryScheme binary = CategoryScheme::binary();
    MatrixXd bracket(n, K);
    for (int i = 0; i < n; ++i) {
        const MuTensor mu2 = scheme.C == 2 ? clamp_mu(nuisances.mu_hat[i], 1e-6)
                                           : reduce_to_binary(nuisances.mu_hat[i], scheme);
        const BtRestrictedContext ctx = BtRestrictedContext::build(mu2, binary);
        VectorXd row = evaluate(GarsKind::bt(), mu2, binary);
        for (const auto& pl : ds.rows[i].pairs) {
            const double pi = nuisances.pi_hat[i](pl.j, pl.k);
            if (!(pi > 0.0))
                throw NumericError("bt_restricted_debiased: zero propensity at row " +
                                   std::to_string(i));
            // Binary residual on the first-item score: y1 - mu1, with categorical
            // labels entering through their first-item weight.
            const double y1 = scheme.C == 2 ? (pl.label == 0 ? 1.0 : 0.0)
                                            : scheme.w1(pl.label);
            const double resid = y1 - mu2(pl.j, pl.k, 0);
            VectorXd b = VectorXd::Zero(K);
            b(pl.j) = 1.0;
            b(pl.k) = -1.0;
            row += (ctx.L_dagger * b) * (resid / pi);
        }
        bracket.row(i) = row.transpose();
    }

    GarsEstimate est;
    est.kind = GarsKind::bt();
    est.tag = EstimatorTag::BtRestricted;
    est.n = n;
    est.theta_hat = bracket.colwise().mean().transpose();
    const MatrixXd phi = bracket.rowwise() - est.theta_hat.transpose();
    est.sigma_hat = phi.transpose() * phi / n;
    return est;
}

}  // namespace gars
