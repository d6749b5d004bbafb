#include "gars/types.hpp"

#include <cmath>

namespace gars {

CategoryScheme::CategoryScheme(int c, VectorXd first, VectorXd second)
    : C(c), w1(std::move(first)), w2(std::move(second)) {
    if (C < 2) throw ValidationError("CategoryScheme: C must be >= 2");
    if (w1.size() != C || w2.size() != C)
        throw ValidationError("CategoryScheme: weight vectors must have length C");
    if (!w1.allFinite() || !w2.allFinite())
        throw ValidationError("CategoryScheme: weights must be finite");
}

CategoryScheme CategoryScheme::defaults(int c) {
    VectorXd w1(c), w2(c);
    switch (c) {
        case 2:
            w1 << 1, 0;
            w2 << 0, 1;
            break;
        case 3:
            w1 << 1, 0, 0.5;
            w2 << 0, 1, 0.5;
            break;
        case 4:
            w1 << 1, 0, 1, 0;
            w2 << 0, 1, 1, 0;
            break;
        case 5:
            w1 << 1, 0, 1, 0, 0.5;
            w2 << 0, 1, 1, 0, 0.5;
            break;
        default:
            throw ValidationError("CategoryScheme: no default weights for C=" +
                                  std::to_string(c) + ", supply w1/w2 explicitly");
    }
    return CategoryScheme(c, std::move(w1), std::move(w2));
}

void MuTensor::validate(double tol) const {
    for (int j = 0; j < K_; ++j) {
        for (int k = 0; k < K_; ++k) {
            const auto s = slice(j, k);
            if (j == k) {
                if (s.cwiseAbs().maxCoeff() > 0.0)
                    throw ValidationError("MuTensor: diagonal slice (" + std::to_string(j) +
                                          "," + std::to_string(j) + ") must be zero");
                continue;
            }
            if (!(s.minCoeff() >= 0.0 && s.maxCoeff() <= 1.0))
                throw ValidationError("MuTensor: entries outside [0,1] at pair (" +
                                      std::to_string(j) + "," + std::to_string(k) + ")");
            if (std::fabs(s.sum() - 1.0) > tol)
                throw ValidationError("MuTensor: slice (" + std::to_string(j) + "," +
                                      std::to_string(k) + ") sums to " +
                                      std::to_string(s.sum()));
        }
    }
}

void PiMatrix::validate() const {
    const int K = this->K();
    for (int j = 0; j < K; ++j) {
        for (int k = 0; k < K; ++k) {
            const double v = values_(j, k);
            if (j == k) {
                if (v != 0.0) throw ValidationError("PiMatrix: diagonal must be zero");
            } else if (!(v > 0.0 && v <= 1.0)) {
                throw ValidationError("PiMatrix: entry (" + std::to_string(j) + "," +
                                      std::to_string(k) + ") = " + std::to_string(v) +
                                      " not in (0,1]");
            }
        }
    }
}

void renormalize_with_floor(StridedRowRef slice, double lo) {
    const int C = static_cast<int>(slice.size());
    const double hi = 1.0 - lo;
    for (int c = 0; c < C; ++c) slice(c) = std::min(hi, std::max(lo, slice(c)));
    const double sum = slice.sum();
    const double base = C * lo;
    const double denom = sum - base;
    if (denom <= 0.0) {
        slice.setConstant(1.0 / C);
        return;
    }
    const double t = (1.0 - base) / denom;
    for (int c = 0; c < C; ++c) slice(c) = lo + t * (slice(c) - lo);
}

MuTensor clamp_mu(const MuTensor& mu, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw ValidationError("clamp_mu: eps must be in (0, 0.5)");
    if (eps * mu.C() >= 1.0) throw ValidationError("clamp_mu: eps*C must be < 1");
    MuTensor out = mu;
    const int K = mu.K();
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            renormalize_with_floor(out.raw().row(j * K + k), eps);
        }
    return out;
}

MatrixXd symmetrized_scores(const MuTensor& mu, const CategoryScheme& scheme) {
    const int K = mu.K();
    if (mu.C() != scheme.C) throw ValidationError("symmetrized_scores: C mismatch");
    MatrixXd s = MatrixXd::Zero(K, K);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            s(j, k) = 0.5 * (mu.slice(j, k).dot(scheme.w1) + mu.slice(k, j).dot(scheme.w2));
        }
    return s;
}

}  // namespace gars
