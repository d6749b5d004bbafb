#ifndef GARS_TYPES_HPP_
#define GARS_TYPES_HPP_

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace gars {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ItemSet {
    int K = 2;

    explicit ItemSet(int k) : K(k) {
        if (K < 2) throw ValidationError("ItemSet: K must be >= 2, got " + std::to_string(K));
    }
};

/// Category weights (w1 favors the first item of an ordered pair, w2 the second).
struct CategoryScheme {
    int C = 2;
    VectorXd w1;
    VectorXd w2;

    CategoryScheme(int c, VectorXd first, VectorXd second);

    /// Built-in weights for C in {2,3,4,5}: win/loss, +tie, +both-good/both-bad variants.
    static CategoryScheme defaults(int c);
    static CategoryScheme binary() { return defaults(2); }
};

/// Per-context preference probability tensor, stored as (K*K) x C with row j*K+k.
class MuTensor {
public:
    MuTensor(int K, int C) : K_(K), C_(C), values_(MatrixXd::Zero(K * K, C)) {}

    int K() const { return K_; }
    int C() const { return C_; }

    double operator()(int j, int k, int c) const { return values_(j * K_ + k, c); }
    double& operator()(int j, int k, int c) { return values_(j * K_ + k, c); }

    Eigen::Ref<const Eigen::RowVectorXd> slice(int j, int k) const {
        return values_.row(j * K_ + k);
    }
    void set_slice(int j, int k, const VectorXd& p) { values_.row(j * K_ + k) = p.transpose(); }

    const MatrixXd& raw() const { return values_; }
    MatrixXd& raw() { return values_; }

    /// Throws unless diagonal slices are zero and off-diagonal slices are probability
    /// vectors (entries in [0,1], sum 1 within tol).
    void validate(double tol = 1e-9) const;

private:
    int K_, C_;
    MatrixXd values_;
};

/// Per-context selection propensities; zero diagonal, off-diagonal in (0,1].
class PiMatrix {
public:
    explicit PiMatrix(int K) : values_(MatrixXd::Zero(K, K)) {}
    explicit PiMatrix(MatrixXd m) : values_(std::move(m)) {
        if (values_.rows() != values_.cols())
            throw ValidationError("PiMatrix: matrix must be square");
    }

    int K() const { return static_cast<int>(values_.rows()); }
    double operator()(int j, int k) const { return values_(j, k); }
    double& operator()(int j, int k) { return values_(j, k); }
    const MatrixXd& raw() const { return values_; }
    MatrixXd& raw() { return values_; }

    void validate() const;

private:
    MatrixXd values_;
};

/// In-place floor/cap of a probability vector followed by a renormalization that
/// respects the bounds: v -> lo + t*(v - lo) with t chosen so the sum is 1.
/// Entries stay in [lo, 1-lo] exactly; identity on interior simplex vectors.
using StridedRowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;
void renormalize_with_floor(StridedRowRef slice, double lo);

/// Clamp every off-diagonal slice of `mu` into [eps, 1-eps] and renormalize.
MuTensor clamp_mu(const MuTensor& mu, double eps = 1e-6);

/// Symmetrized scores s_jk = (w1.mu[j,k] + w2.mu[k,j]) / 2, zero diagonal.
MatrixXd symmetrized_scores(const MuTensor& mu, const CategoryScheme& scheme);

}  // namespace gars

#endif  // GARS_TYPES_HPP_
