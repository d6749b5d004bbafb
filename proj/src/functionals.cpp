#include "gars/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include <Eigen/LU>

namespace gars {

namespace {

constexpr double kRowSumFloor = 1e-12;

double logit(double p) { return std::log(p) - std::log1p(-p); }

double clamp_unit(double p, double eps) { return std::min(1.0 - eps, std::max(eps, p)); }

}  // namespace

GarsKind GarsKind::soft_copeland(double tau) {
    GarsKind k;
    k.family = GarsFamily::SoftCopeland;
    k.temperature = tau;
    return k;
}

GarsKind GarsKind::kemeny(std::vector<std::vector<int>> rankings) {
    GarsKind k;
    k.family = GarsFamily::Kemeny;
    k.rankings = std::move(rankings);
    return k;
}

GarsKind GarsKind::judge_miscalibration(MiscalLoss l) {
    GarsKind k;
    k.family = GarsFamily::JudgeMiscalibration;
    k.loss = l;
    return k;
}

int GarsKind::dim(int K) const {
    return family == GarsFamily::Kemeny ? static_cast<int>(rankings.size()) : K;
}

bool GarsKind::has_closed_jacobian() const {
    return family == GarsFamily::Borda || family == GarsFamily::BTProjection ||
           family == GarsFamily::RankCentrality;
}

void GarsKind::validate(int K) const {
    if (family == GarsFamily::SoftCopeland && !(temperature > 0.0))
        throw ValidationError("GarsKind: SoftCopeland temperature must be > 0");
    if (family == GarsFamily::Kemeny) {
        if (rankings.empty()) throw ValidationError("GarsKind: Kemeny needs >= 1 ranking");
        for (const auto& r : rankings) {
            if (static_cast<int>(r.size()) != K)
                throw ValidationError("GarsKind: Kemeny ranking length != K");
            std::vector<bool> seen(K, false);
            for (int v : r) {
                if (v < 0 || v >= K || seen[v])
                    throw ValidationError("GarsKind: Kemeny ranking is not a permutation");
                seen[v] = true;
            }
        }
    }
}

int ProjectionConstants::edge_index(int j, int k) const {
    const int a = std::min(j, k), b = std::max(j, k);
    return a * K - a * (a + 1) / 2 + (b - a - 1);
}

std::shared_ptr<const ProjectionConstants> ProjectionConstants::get(int K) {
    static std::mutex mu;
    static std::unordered_map<int, std::shared_ptr<const ProjectionConstants>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(K);
    if (it != cache.end()) return it->second;

    auto pc = std::make_shared<ProjectionConstants>();
    pc->K = K;
    const int E = K * (K - 1) / 2;
    pc->B = MatrixXd::Zero(E, K);
    int e = 0;
    for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b, ++e) {
            pc->B(e, a) = 1.0;
            pc->B(e, b) = -1.0;
        }
    pc->L0 = pc->B.transpose() * pc->B;
    pc->H = MatrixXd::Zero(K, K - 1);
    pc->H.topRows(K - 1).setIdentity();
    pc->H.row(K - 1).setConstant(-1.0);
    const MatrixXd core = pc->H.transpose() * pc->L0 * pc->H;
    pc->P = pc->H * core.partialPivLu().solve(pc->H.transpose() * pc->B.transpose());
    cache.emplace(K, pc);
    return cache[K];
}

VectorXd edge_logits(const MuTensor& mu, const CategoryScheme& scheme, double eps) {
    const int K = mu.K();
    VectorXd l(K * (K - 1) / 2);
    int e = 0;
    for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b, ++e) {
            const double p1 = clamp_unit(mu.slice(a, b).dot(scheme.w1), eps);
            const double p2 = clamp_unit(mu.slice(b, a).dot(scheme.w2), eps);
            l(e) = 0.5 * (logit(p1) + logit(p2));
        }
    return l;
}

MatrixXd transition_matrix(const MuTensor& mu, const CategoryScheme& scheme) {
    const int K = mu.K();
    const MatrixXd s = symmetrized_scores(mu, scheme);
    MatrixXd T = MatrixXd::Zero(K, K);
    for (int i = 0; i < K; ++i) {
        double d = 0.0;
        for (int l = 0; l < K; ++l)
            if (l != i) d += s(l, i);  // R_il = s_li
        if (d < kRowSumFloor) {
            for (int l = 0; l < K; ++l)
                if (l != i) T(i, l) = 1.0 / (K - 1);
        } else {
            for (int l = 0; l < K; ++l)
                if (l != i) T(i, l) = s(l, i) / d;
        }
    }
    return T;
}

namespace {

VectorXd rank_centrality_scores(const MuTensor& mu, const CategoryScheme& scheme) {
    const int K = mu.K();
    const MatrixXd T = transition_matrix(mu, scheme);
    const MatrixXd A =
        MatrixXd::Identity(K, K) - T.transpose() + MatrixXd::Ones(K, K);
    Eigen::PartialPivLU<MatrixXd> lu(A);
    const VectorXd f = lu.solve(VectorXd::Ones(K));
    if (!(A * f - VectorXd::Ones(K)).allFinite() ||
        (A * f - VectorXd::Ones(K)).cwiseAbs().maxCoeff() > 1e-6)
        throw NumericError("rank centrality: singular I - T' + 11'");
    return f;
}

VectorXd borda_scores(const MuTensor& mu, const CategoryScheme& scheme) {
    const int K = mu.K();
    const MatrixXd s = symmetrized_scores(mu, scheme);
    VectorXd f(K);
    for (int j = 0; j < K; ++j) f(j) = s.row(j).sum() / (K - 1);
    return f;
}

VectorXd bt_scores(const MuTensor& mu, const CategoryScheme& scheme) {
    auto pc = ProjectionConstants::get(mu.K());
    return pc->P * edge_logits(mu, scheme);
}

VectorXd softmax_scores(const MuTensor& mu, const CategoryScheme& scheme) {
    VectorXd phi = bt_scores(mu, scheme);
    phi.array() -= phi.maxCoeff();
    VectorXd e = phi.array().exp();
    return e / e.sum();
}

VectorXd soft_copeland_scores(const MuTensor& mu, const CategoryScheme& scheme, double tau) {
    const int K = mu.K();
    const MatrixXd s = symmetrized_scores(mu, scheme);
    VectorXd f = VectorXd::Zero(K);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            if (i == j) continue;
            const double z = (s(i, j) - 0.5) / tau;
            f(i) += 1.0 / (1.0 + std::exp(-z));
        }
        f(i) /= (K - 1);
    }
    return f;
}

VectorXd kemeny_scores(const GarsKind& kind, const MuTensor& mu, const CategoryScheme& scheme) {
    const int K = mu.K();
    const MatrixXd s = symmetrized_scores(mu, scheme);
    const int d = static_cast<int>(kind.rankings.size());
    VectorXd f = VectorXd::Zero(d);
    for (int m = 0; m < d; ++m) {
        // position[v] = rank of item v under the m-th ranking
        std::vector<int> pos(K);
        for (int r = 0; r < K; ++r) pos[kind.rankings[m][r]] = r;
        for (int i = 0; i < K; ++i)
            for (int j = i + 1; j < K; ++j) {
                const double delta = pos[i] < pos[j] ? 1.0 : 0.0;
                f(m) += (delta - 0.5) * 2.0 * s(i, j);
            }
    }
    return f;
}

VectorXd miscal_scores(const GarsKind& kind, const MuTensor& mu, const CategoryScheme& scheme,
                       const MuTensor* judge) {
    if (judge == nullptr)
        throw ValidationError("evaluate: JudgeMiscalibration requires judge probabilities");
    const int K = mu.K(), C = scheme.C;
    if (judge->K() != K || judge->C() != C)
        throw ValidationError("evaluate: judge tensor shape mismatch");
    VectorXd f = VectorXd::Zero(K);
    const double eps = 1e-12;
    auto pair_loss = [&](int a, int b) {
        double v = 0.0;
        for (int c = 0; c < C; ++c) {
            const double fc = (*judge)(a, b, c), mc = mu(a, b, c);
            if (kind.loss == MiscalLoss::Squared)
                v += (fc - mc) * (fc - mc);
            else
                v -= mc * std::log(std::max(fc, eps));
        }
        return v;
    };
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            if (i == j) continue;
            f(i) += pair_loss(i, j) + pair_loss(j, i);
        }
        f(i) /= 2.0 * (K - 1);
    }
    return f;
}

}  // namespace

VectorXd evaluate(const GarsKind& kind, const MuTensor& mu, const CategoryScheme& scheme,
                  const MuTensor* judge) {
    kind.validate(mu.K());
    switch (kind.family) {
        case GarsFamily::Borda:
            return borda_scores(mu, scheme);
        case GarsFamily::BTProjection:
            return bt_scores(mu, scheme);
        case GarsFamily::RankCentrality:
            return rank_centrality_scores(mu, scheme);
        case GarsFamily::Softmax:
            return softmax_scores(mu, scheme);
        case GarsFamily::SoftCopeland:
            return soft_copeland_scores(mu, scheme, kind.temperature);
        case GarsFamily::Kemeny:
            return kemeny_scores(kind, mu, scheme);
        case GarsFamily::JudgeMiscalibration:
            return miscal_scores(kind, mu, scheme, judge);
    }
    throw std::logic_error("evaluate: unknown family");
}

// ---------------------------------------------------------------------------
// Jacobians
// ---------------------------------------------------------------------------

namespace {

MatrixXd borda_block(int K, const CategoryScheme& scheme, int j, int k) {
    MatrixXd J = MatrixXd::Zero(K, scheme.C);
    const double s = 1.0 / (2.0 * (K - 1));
    J.row(j) = s * scheme.w1.transpose();
    J.row(k) += s * scheme.w2.transpose();
    return J;
}

MatrixXd bt_block(const ProjectionConstants& pc, const MuTensor& mu,
                  const CategoryScheme& scheme, int j, int k, double eps) {
    const VectorXd col = pc.P.col(pc.edge_index(j, k));
    if (j < k) {
        const double p = clamp_unit(mu.slice(j, k).dot(scheme.w1), eps);
        return col * (0.5 / (p * (1.0 - p)) * scheme.w1.transpose());
    }
    const double p = clamp_unit(mu.slice(j, k).dot(scheme.w2), eps);
    return col * (0.5 / (p * (1.0 - p)) * scheme.w2.transpose());
}

struct RcContext {
    MatrixXd R;        // R_il = s_li
    VectorXd dsum;     // row sums of R
    VectorXd F;        // stationary scores
    Eigen::PartialPivLU<MatrixXd> lu;  // factorization of A = I - T' + 11'
    std::vector<bool> degenerate;      // rows on the uniform fallback
};

RcContext make_rc_context(const MuTensor& mu, const CategoryScheme& scheme) {
    const int K = mu.K();
    RcContext ctx;
    const MatrixXd s = symmetrized_scores(mu, scheme);
    ctx.R = s.transpose();
    ctx.R.diagonal().setZero();
    ctx.dsum = ctx.R.rowwise().sum();
    ctx.degenerate.assign(K, false);
    MatrixXd T = MatrixXd::Zero(K, K);
    for (int i = 0; i < K; ++i) {
        if (ctx.dsum(i) < kRowSumFloor) {
            ctx.degenerate[i] = true;
            for (int l = 0; l < K; ++l)
                if (l != i) T(i, l) = 1.0 / (K - 1);
        } else {
            for (int l = 0; l < K; ++l)
                if (l != i) T(i, l) = ctx.R(i, l) / ctx.dsum(i);
        }
    }
    const MatrixXd A = MatrixXd::Identity(K, K) - T.transpose() + MatrixXd::Ones(K, K);
    ctx.lu.compute(A);
    ctx.F = ctx.lu.solve(VectorXd::Ones(K));
    if (!ctx.F.allFinite()) throw NumericError("rank centrality jacobian: singular system");
    return ctx;
}

// dT rows j and k for a unit perturbation of mu_{jkc}; dF solves A dF = dT' F.
MatrixXd rc_block(const RcContext& ctx, const CategoryScheme& scheme, int j, int k) {
    const int K = static_cast<int>(ctx.F.size()), C = scheme.C;
    MatrixXd J(K, C);
    for (int c = 0; c < C; ++c) {
        VectorXd rhs = VectorXd::Zero(K);  // rhs = (dT)' F
        if (!ctx.degenerate[j]) {
            const double dj = ctx.dsum(j), w = 0.5 * scheme.w2(c);
            // dT_{j,l}: l = k gets w (d_j - R_jk)/d_j^2, others -R_jl w / d_j^2
            for (int l = 0; l < K; ++l) {
                if (l == j) continue;
                const double dT =
                    (l == k) ? w * (dj - ctx.R(j, k)) / (dj * dj) : -ctx.R(j, l) * w / (dj * dj);
                rhs(l) += dT * ctx.F(j);
            }
        }
        if (!ctx.degenerate[k]) {
            const double dk = ctx.dsum(k), w = 0.5 * scheme.w1(c);
            for (int l = 0; l < K; ++l) {
                if (l == k) continue;
                const double dT =
                    (l == j) ? w * (dk - ctx.R(k, j)) / (dk * dk) : -ctx.R(k, l) * w / (dk * dk);
                rhs(l) += dT * ctx.F(k);
            }
        }
        J.col(c) = ctx.lu.solve(rhs);
    }
    return J;
}

}  // namespace

JacobianMap jacobian_closed(const GarsKind& kind, const MuTensor& mu,
                            const CategoryScheme& scheme) {
    if (!kind.has_closed_jacobian())
        throw ValidationError("jacobian_closed: no closed form for this functional");
    const int K = mu.K();
    JacobianMap out;
    if (kind.family == GarsFamily::Borda) {
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k)
                if (j != k) out[{j, k}] = borda_block(K, scheme, j, k);
        return out;
    }
    if (kind.family == GarsFamily::BTProjection) {
        auto pc = ProjectionConstants::get(K);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k)
                if (j != k) out[{j, k}] = bt_block(*pc, mu, scheme, j, k, 1e-6);
        return out;
    }
    const RcContext ctx = make_rc_context(mu, scheme);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) out[{j, k}] = rc_block(ctx, scheme, j, k);
    return out;
}

JacobianMap jacobian_numeric(const GarsKind& kind, const MuTensor& mu,
                             const CategoryScheme& scheme, double h, const MuTensor* judge) {
    if (!(h > 0)) throw ValidationError("jacobian_numeric: h must be > 0");
    const int K = mu.K(), C = mu.C();
    const int d = kind.dim(K);
    JacobianMap out;
    MuTensor work = mu;
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            MatrixXd J(d, C);
            for (int c = 0; c < C; ++c) {
                const double orig = work(j, k, c);
                work(j, k, c) = orig + h;
                const VectorXd fp = evaluate(kind, work, scheme, judge);
                work(j, k, c) = orig - h;
                const VectorXd fm = evaluate(kind, work, scheme, judge);
                work(j, k, c) = orig;
                J.col(c) = (fp - fm) / (2.0 * h);
            }
            out[{j, k}] = std::move(J);
        }
    return out;
}

// ---------------------------------------------------------------------------
// PairJacobians
// ---------------------------------------------------------------------------

struct PairJacobians::Impl {
    GarsKind kind;
    CategoryScheme scheme;
    MuTensor mu;
    const MuTensor* judge;
    double h;
    int d;
    std::shared_ptr<const ProjectionConstants> pc;  // BT
    std::unique_ptr<RcContext> rc;                  // RankCentrality

    Impl(const GarsKind& kd, const MuTensor& m, const CategoryScheme& sc, const MuTensor* jt,
         double step)
        : kind(kd), scheme(sc), mu(m), judge(jt), h(step), d(kd.dim(m.K())) {
        if (kind.family == GarsFamily::BTProjection)
            pc = ProjectionConstants::get(mu.K());
        else if (kind.family == GarsFamily::RankCentrality)
            rc = std::make_unique<RcContext>(make_rc_context(mu, scheme));
    }
};

PairJacobians::PairJacobians(const GarsKind& kind, const MuTensor& mu,
                             const CategoryScheme& scheme, const MuTensor* judge, double fd_step)
    : impl_(std::make_unique<Impl>(kind, mu, scheme, judge, fd_step)) {}

PairJacobians::~PairJacobians() = default;
PairJacobians::PairJacobians(PairJacobians&&) noexcept = default;
PairJacobians& PairJacobians::operator=(PairJacobians&&) noexcept = default;

int PairJacobians::dim() const { return impl_->d; }

MatrixXd PairJacobians::block(int j, int k) const {
    auto& im = *impl_;
    switch (im.kind.family) {
        case GarsFamily::Borda:
            return borda_block(im.mu.K(), im.scheme, j, k);
        case GarsFamily::BTProjection:
            return bt_block(*im.pc, im.mu, im.scheme, j, k, 1e-6);
        case GarsFamily::RankCentrality:
            return rc_block(*im.rc, im.scheme, j, k);
        default: {
            MatrixXd J(im.d, im.scheme.C);
            MuTensor& work = im.mu;
            for (int c = 0; c < im.scheme.C; ++c) {
                const double orig = work(j, k, c);
                work(j, k, c) = orig + im.h;
                const VectorXd fp = evaluate(im.kind, work, im.scheme, im.judge);
                work(j, k, c) = orig - im.h;
                const VectorXd fm = evaluate(im.kind, work, im.scheme, im.judge);
                work(j, k, c) = orig;
                J.col(c) = (fp - fm) / (2.0 * im.h);
            }
            return J;
        }
    }
}

}  // namespace gars
