#include <doctest.h>

#include <cmath>

#include "gars/nuisance.hpp"
#include "gars/rng.hpp"

using namespace gars;

namespace {

// Dataset with context-free mu and pi, for empirical-frequency oracles.
PreferenceDataset constant_dataset(int n, int K, int C, const VectorXd& probs, double pi,
                                   std::uint64_t seed) {
    PreferenceDataset ds;
    ds.items = ItemSet(K);
    ds.scheme = CategoryScheme::defaults(C);
    ds.contexts.resize(n, 2);
    Rng rng(seed);
    ds.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.contexts(i, 0) = rng.uniform();
        ds.contexts(i, 1) = rng.uniform();
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                if (rng.uniform() < pi) {
                    const int label = rng.categorical(probs.data(), C);
                    ds.rows[i].pairs.push_back({j, k, label});
                }
            }
    }
    return ds;
}

}  // namespace

TEST_CASE("make_plan splits evenly and deterministically") {
    const CrossFitPlan plan = make_plan(10, 2, 7);
    int sizes[2] = {0, 0};
    for (int f : plan.fold) sizes[f]++;
    CHECK(sizes[0] == 5);
    CHECK(sizes[1] == 5);
    const CrossFitPlan again = make_plan(10, 2, 7);
    CHECK(plan.fold == again.fold);

    const CrossFitPlan odd = make_plan(5, 3, 1);
    int s3[3] = {0, 0, 0};
    for (int f : odd.fold) s3[f]++;
    std::vector<int> sz{s3[0], s3[1], s3[2]};
    std::sort(sz.begin(), sz.end());
    CHECK(sz == std::vector<int>{1, 2, 2});

    CHECK_THROWS_AS(make_plan(1, 2, 0), ValidationError);
    CHECK_THROWS_AS(make_plan(10, 1, 0), ValidationError);
}

TEST_CASE("feature construction dimensions and layout") {
    FeatureOptions opts;
    opts.expand_features = true;
    opts.item_interactions = true;
    opts.pair_intercepts = true;
    const int p = 2, K = 3;
    const int f = context_feature_dim(p, true);
    CHECK(f == 7);
    CHECK(pair_feature_dim(p, K, opts) == f + 2 * K + 2 * K * f + K * K);
    VectorXd x(2);
    x << 0.25, 0.5;
    const VectorXd feat = pair_features(x, 1, 2, K, opts);
    CHECK(feat(0) == 0.25);
    CHECK(feat(p) == doctest::Approx(0.0625));             // x0^2
    CHECK(feat(2 * p) == doctest::Approx(1.0));            // sin(2 pi 0.25)
    CHECK(feat(f + 1) == 1.0);                             // one-hot j
    CHECK(feat(f + K + 2) == 1.0);                         // one-hot k
    CHECK(feat(f + 2 * K + 1 * f) == 0.25);                // interaction block j
    CHECK(feat(f + 2 * K + 2 * K * f + 1 * K + 2) == 1.0); // pair dummy (1,2)
}

TEST_CASE("crossfit_mu recovers constant preference frequencies") {
    VectorXd probs(3);
    probs << 0.6, 0.3, 0.1;
    const PreferenceDataset ds = constant_dataset(2000, 3, 3, probs, 0.5, 99);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    const auto mu = crossfit_mu(ds, plan, opts);
    VectorXd mean = VectorXd::Zero(3);
    int cnt = 0;
    for (const auto& m : mu)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                if (j == k) continue;
                mean += m.slice(j, k).transpose();
                ++cnt;
            }
    mean /= cnt;
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(mean(c) - probs(c)) < 0.05);
    for (const auto& m : mu) m.validate(1e-9);
}

TEST_CASE("crossfit_pi recovers a constant selection rate") {
    VectorXd probs(2);
    probs << 0.5, 0.5;
    const PreferenceDataset ds = constant_dataset(2000, 3, 2, probs, 0.3, 5);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    const auto pi = crossfit_pi(ds, plan, opts);
    double mean = 0.0;
    int cnt = 0;
    for (const auto& m : pi)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                if (j != k) {
                    mean += m(j, k);
                    ++cnt;
                }
    mean /= cnt;
    CHECK(std::fabs(mean - 0.3) < 0.05);
}

TEST_CASE("fully observed pairs push the propensity model high") {
    VectorXd probs(2);
    probs << 0.5, 0.5;
    const PreferenceDataset ds = constant_dataset(400, 2, 2, probs, 1.0, 5);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    const auto pi = crossfit_pi(ds, plan, opts);
    for (const auto& m : pi) {
        CHECK(m(0, 1) >= 0.9);
        CHECK(m(1, 0) >= 0.9);
    }
}

TEST_CASE("pi predictions are clamped to the floor") {
    VectorXd probs(2);
    probs << 0.5, 0.5;
    PreferenceDataset ds = constant_dataset(200, 2, 2, probs, 0.4, 5);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    opts.pi_floor = 0.25;
    const auto pi = crossfit_pi(ds, plan, opts);
    for (const auto& m : pi)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                if (j != k) {
                    CHECK(m(j, k) >= 0.25);
                    CHECK(m(j, k) <= 1.0);
                }
}

TEST_CASE("single-class labels use the constant fallback without crashing") {
    VectorXd probs(3);
    probs << 1.0, 0.0, 0.0;
    const PreferenceDataset ds = constant_dataset(60, 2, 3, probs, 0.8, 5);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    const auto mu = crossfit_mu(ds, plan, opts);
    for (const auto& m : mu) {
        CHECK(m(0, 1, 0) > 0.9);
        m.validate(1e-9);
    }
}

TEST_CASE("use_judge without judge data is an error") {
    VectorXd probs(2);
    probs << 0.5, 0.5;
    const PreferenceDataset ds = constant_dataset(50, 2, 2, probs, 0.5, 5);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    opts.use_judge = true;
    CHECK_THROWS_AS(crossfit_mu(ds, plan, opts), ValidationError);
}

TEST_CASE("cross-fitting is bit-deterministic and tracks out-of-fold provenance") {
    VectorXd probs(3);
    probs << 0.5, 0.3, 0.2;
    const PreferenceDataset ds = constant_dataset(300, 3, 3, probs, 0.4, 123);
    NuisanceOptions opts;
    const auto a = crossfit(ds, 3, 42, opts);
    const auto b = crossfit(ds, 3, 42, opts);
    for (int i = 0; i < ds.n(); ++i) {
        CHECK(a.mu_hat[i].raw() == b.mu_hat[i].raw());
        CHECK(a.pi_hat[i].raw() == b.pi_hat[i].raw());
    }
    CHECK(a.trained_without_fold == a.plan.fold);
    CHECK_FALSE(a.known_pi);

    std::vector<PiMatrix> known(ds.n(), PiMatrix((0.4 * (MatrixXd::Ones(3, 3) -
                                                         MatrixXd::Identity(3, 3)))
                                                     .eval()));
    const auto c = crossfit(ds, 3, 42, opts, &known);
    CHECK(c.known_pi);
    CHECK(c.pi_hat[0](0, 1) == 0.4);
}

TEST_CASE("mu floor is honored after renormalization") {
    VectorXd probs(3);
    probs << 0.98, 0.01, 0.01;
    const PreferenceDataset ds = constant_dataset(400, 2, 3, probs, 0.9, 9);
    const CrossFitPlan plan = make_plan(ds.n(), 2, 3);
    NuisanceOptions opts;
    opts.mu_floor = 0.05;
    const auto mu = crossfit_mu(ds, plan, opts);
    for (const auto& m : mu) {
        CHECK(m(0, 1, 1) >= 0.05);
        CHECK(m(0, 1, 2) >= 0.05);
    }
}

TEST_CASE("zero labeled pairs is an error for the propensity model") {
    PreferenceDataset ds;
    ds.items = ItemSet(2);
    ds.scheme = CategoryScheme::binary();
    ds.contexts = MatrixXd::Zero(4, 1);
    ds.rows.resize(4);
    const CrossFitPlan plan = make_plan(4, 2, 0);
    NuisanceOptions opts;
    CHECK_THROWS_AS(crossfit_pi(ds, plan, opts), ValidationError);
}
