#ifndef GARS_FUNCTIONALS_HPP_
#define GARS_FUNCTIONALS_HPP_

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "gars/types.hpp"

namespace gars {

enum class GarsFamily {
    Borda,
    BTProjection,
    RankCentrality,
    Softmax,
    SoftCopeland,
    Kemeny,
    JudgeMiscalibration,
};

enum class MiscalLoss { Squared, CrossEntropy };

struct GarsKind {
    GarsFamily family = GarsFamily::Borda;
    double temperature = 1.0;                 // SoftCopeland
    std::vector<std::vector<int>> rankings;   // Kemeny: each a permutation of 0..K-1
    MiscalLoss loss = MiscalLoss::Squared;    // JudgeMiscalibration

    static GarsKind borda() {
        GarsKind k;
        k.family = GarsFamily::Borda;
        return k;
    }
    static GarsKind bt() {
        GarsKind k;
        k.family = GarsFamily::BTProjection;
        return k;
    }
    static GarsKind rank_centrality() {
        GarsKind k;
        k.family = GarsFamily::RankCentrality;
        return k;
    }
    static GarsKind softmax() {
        GarsKind k;
        k.family = GarsFamily::Softmax;
        return k;
    }
    static GarsKind soft_copeland(double tau);
    static GarsKind kemeny(std::vector<std::vector<int>> rankings);
    static GarsKind judge_miscalibration(MiscalLoss l);

    /// Output dimension d of F.
    int dim(int K) const;
    /// True when the closed-form Jacobian is available (Borda, BT, RC).
    bool has_closed_jacobian() const;
    /// The functional needs a judge probability tensor alongside mu.
    bool needs_judge() const { return family == GarsFamily::JudgeMiscalibration; }

    void validate(int K) const;
};

/// Constants of the zero-sum least-squares projection for a given K:
/// incidence matrix B, Laplacian L0 = B^T B, zero-sum basis H and
/// P = H (H^T L0 H)^{-1} H^T B^T. Cached per K, safe for concurrent reads.
struct ProjectionConstants {
    int K;
    MatrixXd B;   // E x K, row e(j,k) = e_j - e_k for j < k
    MatrixXd L0;  // K x K
    MatrixXd H;   // K x (K-1)
    MatrixXd P;   // K x E

    int edges() const { return static_cast<int>(B.rows()); }
    /// Index of the unordered edge {j,k} (requires j != k).
    int edge_index(int j, int k) const;

    static std::shared_ptr<const ProjectionConstants> get(int K);
};

/// Edge logits l_jk = (logit(w1.mu[j,k]) + logit(w2.mu[k,j])) / 2 for j < k.
/// Directional scores are clamped into [eps, 1-eps] before the logit.
VectorXd edge_logits(const MuTensor& mu, const CategoryScheme& scheme, double eps = 1e-6);

/// Row-stochastic transition matrix of the preference Markov chain; rows with
/// vanishing outgoing score mass fall back to the uniform distribution.
MatrixXd transition_matrix(const MuTensor& mu, const CategoryScheme& scheme);

/// Evaluate F(mu). `judge` is required for JudgeMiscalibration and ignored otherwise.
VectorXd evaluate(const GarsKind& kind, const MuTensor& mu, const CategoryScheme& scheme,
                  const MuTensor* judge = nullptr);

/// Per-pair Jacobian blocks d F / d mu_jk, each d x C.
using JacobianMap = std::map<std::pair<int, int>, MatrixXd>;

/// Closed forms (Borda, BTProjection, RankCentrality only).
JacobianMap jacobian_closed(const GarsKind& kind, const MuTensor& mu,
                            const CategoryScheme& scheme);

/// Central finite differences on raw tensor entries (no renormalization).
JacobianMap jacobian_numeric(const GarsKind& kind, const MuTensor& mu,
                             const CategoryScheme& scheme, double h = 1e-5,
                             const MuTensor* judge = nullptr);

/// Jacobian blocks for one context, computed lazily per pair; factorizations and
/// projection constants are shared across pairs. Closed forms where available,
/// central differences otherwise.
class PairJacobians {
public:
    PairJacobians(const GarsKind& kind, const MuTensor& mu, const CategoryScheme& scheme,
                  const MuTensor* judge = nullptr, double fd_step = 1e-5);
    ~PairJacobians();
    PairJacobians(PairJacobians&&) noexcept;
    PairJacobians& operator=(PairJacobians&&) noexcept;

    /// d x C block for ordered pair (j, k).
    MatrixXd block(int j, int k) const;
    int dim() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gars

#endif  // GARS_FUNCTIONALS_HPP_
