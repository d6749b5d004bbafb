#include <doctest.h>

#include "gars/rng.hpp"
#include "gars/types.hpp"

using namespace gars;

namespace {

MuTensor random_interior_mu(int K, int C, Rng& rng) {
    MuTensor mu(K, C);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            VectorXd v(C);
            double s = 0;
            for (int c = 0; c < C; ++c) {
                v(c) = rng.uniform(0.1, 0.9);
                s += v(c);
            }
            mu.set_slice(j, k, v / s);
        }
    return mu;
}

}  // namespace

TEST_CASE("ItemSet rejects K < 2") {
    CHECK_THROWS_AS(ItemSet(1), ValidationError);
    CHECK_NOTHROW(ItemSet(2));
}

TEST_CASE("CategoryScheme defaults match the documented weights") {
    auto b = CategoryScheme::defaults(2);
    CHECK(b.w1(0) == 1.0);
    CHECK(b.w1(1) == 0.0);
    CHECK(b.w2(0) == 0.0);
    CHECK(b.w2(1) == 1.0);
    auto t = CategoryScheme::defaults(3);
    CHECK(t.w1(2) == 0.5);
    CHECK(t.w2(2) == 0.5);
    auto q = CategoryScheme::defaults(4);
    CHECK(q.w1(2) == 1.0);
    CHECK(q.w2(2) == 1.0);
    CHECK(q.w1(3) == 0.0);
    CHECK(q.w2(3) == 0.0);
    auto f = CategoryScheme::defaults(5);
    CHECK(f.w1(4) == 0.5);
    CHECK(f.w2(4) == 0.5);
    CHECK_THROWS_AS(CategoryScheme::defaults(6), ValidationError);
}

TEST_CASE("symmetrized_scores on the all-tie ternary tensor is one half") {
    const auto scheme = CategoryScheme::defaults(3);
    MuTensor mu(3, 3);
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            if (j == k) continue;
            VectorXd v(3);
            v << 0, 0, 1;
            mu.set_slice(j, k, v);
        }
    const MatrixXd s = symmetrized_scores(mu, scheme);
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            if (j == k)
                CHECK(s(j, k) == 0.0);
            else
                CHECK(s(j, k) == doctest::Approx(0.5).epsilon(1e-12));
        }
}

TEST_CASE("symmetrized_scores binary example") {
    // s12 = (w1.mu_12 + w2.mu_21)/2 = (0.8 + 0.8)/2 = 0.8, evaluated directly
    const auto scheme = CategoryScheme::binary();
    MuTensor mu(2, 2);
    mu(0, 1, 0) = 0.8;
    mu(0, 1, 1) = 0.2;
    mu(1, 0, 0) = 0.2;
    mu(1, 0, 1) = 0.8;
    const MatrixXd s = symmetrized_scores(mu, scheme);
    CHECK(s(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(s(1, 0) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("complementary weights make scores sum to one across orders") {
    Rng rng(11);
    for (int C : {2, 3}) {
        const auto scheme = CategoryScheme::defaults(C);  // w1 + w2 = 1 for these
        const MuTensor mu = random_interior_mu(4, C, rng);
        const MatrixXd s = symmetrized_scores(mu, scheme);
        for (int j = 0; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                CHECK(s(j, k) + s(k, j) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("symmetrized_scores is invariant under swapping orders and weights") {
    // s(mu, w2, w1)(k, j) equals s(mu, w1, w2)(j, k)
    Rng rng(12);
    const int K = 3, C = 4;
    const auto scheme = CategoryScheme::defaults(C);
    const CategoryScheme swapped(C, scheme.w2, scheme.w1);
    const MuTensor mu = random_interior_mu(K, C, rng);
    const MatrixXd a = symmetrized_scores(mu, scheme);
    const MatrixXd b = symmetrized_scores(mu, swapped);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) CHECK(a(j, k) == doctest::Approx(b(k, j)).epsilon(1e-13));
}

TEST_CASE("clamp_mu floors zero entries to eps exactly") {
    MuTensor mu(2, 3);
    VectorXd v(3);
    v << 1, 0, 0;
    mu.set_slice(0, 1, v);
    mu.set_slice(1, 0, v);
    const MuTensor out = clamp_mu(mu, 1e-6);
    CHECK(out(0, 1, 1) >= 1e-6);
    CHECK(out(0, 1, 2) >= 1e-6);
    CHECK(out.slice(0, 1).sum() == doctest::Approx(1.0).epsilon(1e-12));
    out.validate(1e-9);
}

TEST_CASE("clamp_mu is the identity on interior tensors") {
    Rng rng(5);
    const MuTensor mu = random_interior_mu(3, 3, rng);
    const MuTensor out = clamp_mu(mu, 1e-6);
    CHECK((out.raw() - mu.raw()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clamp_mu rejects bad eps") {
    MuTensor mu(2, 2);
    CHECK_THROWS_AS(clamp_mu(mu, 0.0), ValidationError);
    CHECK_THROWS_AS(clamp_mu(mu, 0.5), ValidationError);
    MuTensor mu3(2, 3);
    CHECK_THROWS_AS(clamp_mu(mu3, 0.4), ValidationError);  // eps*C >= 1
}

TEST_CASE("MuTensor validation catches broken tensors") {
    MuTensor mu(2, 2);
    mu(0, 0, 0) = 0.3;  // diagonal must stay zero
    CHECK_THROWS_AS(mu.validate(), ValidationError);
    MuTensor mu2(2, 2);
    mu2(0, 1, 0) = 0.7;
    mu2(0, 1, 1) = 0.7;
    mu2(1, 0, 0) = 0.5;
    mu2(1, 0, 1) = 0.5;
    CHECK_THROWS_AS(mu2.validate(), ValidationError);
}

TEST_CASE("PiMatrix validation") {
    PiMatrix pi(2);
    CHECK_THROWS_AS(pi.validate(), ValidationError);  // zeros off-diagonal
    pi(0, 1) = 0.5;
    pi(1, 0) = 1.0;
    CHECK_NOTHROW(pi.validate());
    pi(1, 0) = 1.5;
    CHECK_THROWS_AS(pi.validate(), ValidationError);
}
