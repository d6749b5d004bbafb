#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gars/inference.hpp"
#include "gars/rng.hpp"
#include "gars/simbench.hpp"
#include "gars/stats.hpp"

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

// small dataset + matching nuisances for influence tests
struct Setup {
    PreferenceDataset ds;
    CrossFittedNuisances nuis;
};

Setup make_setup(int n, int K, int C, std::uint64_t seed) {
    Rng rng(seed);
    Setup s;
    s.ds.items = ItemSet(K);
    s.ds.scheme = CategoryScheme::defaults(C);
    s.ds.contexts.resize(n, 1);
    s.ds.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        s.ds.contexts(i, 0) = rng.uniform();
        MuTensor mu = random_interior_mu(K, C, rng);
        PiMatrix pi(K);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                pi(j, k) = rng.uniform(0.2, 0.9);
                if (rng.uniform() < pi(j, k)) {
                    VectorXd slice = mu.slice(j, k).transpose();
                    const int label = rng.categorical(slice.data(), C);
                    s.ds.rows[i].pairs.push_back({j, k, label});
                }
            }
        s.nuis.mu_hat.push_back(std::move(mu));
        s.nuis.pi_hat.push_back(std::move(pi));
    }
    return s;
}

}  // namespace

TEST_CASE("plugin estimate on identical rows has zero covariance") {
    Rng rng(1);
    const auto scheme = CategoryScheme::defaults(3);
    const MuTensor mu = random_interior_mu(3, 3, rng);
    const std::vector<MuTensor> rows(5, mu);
    const GarsEstimate est = plugin_estimate(rows, GarsKind::borda(), scheme);
    CHECK((est.theta_hat - evaluate(GarsKind::borda(), mu, scheme)).cwiseAbs().maxCoeff() <
          1e-14);
    CHECK(est.sigma_hat.cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(plugin_estimate({}, GarsKind::borda(), scheme), ValidationError);
}

TEST_CASE("plugin estimate averages F values") {
    // two rows engineered to give Borda scores (0.2,0.8) and (0.4,0.6)
    const auto scheme = CategoryScheme::binary();
    MuTensor a(2, 2), b(2, 2);
    a(0, 1, 0) = 0.2;
    a(0, 1, 1) = 0.8;
    a(1, 0, 0) = 0.8;
    a(1, 0, 1) = 0.2;
    b(0, 1, 0) = 0.4;
    b(0, 1, 1) = 0.6;
    b(1, 0, 0) = 0.6;
    b(1, 0, 1) = 0.4;
    const GarsEstimate est = plugin_estimate({a, b}, GarsKind::borda(), scheme);
    CHECK(est.theta_hat(0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(est.theta_hat(1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("influence rows reduce to F - theta_ref without selections") {
    Setup s = make_setup(4, 3, 3, 11);
    for (auto& row : s.ds.rows) row.pairs.clear();
    const auto scheme = s.ds.scheme;
    const VectorXd ref = VectorXd::Constant(3, 0.1);
    const MatrixXd phi = influence_values(s.ds, s.nuis.mu_hat, s.nuis.pi_hat,
                                          GarsKind::borda(), scheme, ref);
    for (int i = 0; i < 4; ++i) {
        const VectorXd expect =
            evaluate(GarsKind::borda(), s.nuis.mu_hat[i], scheme) - ref;
        CHECK((phi.row(i).transpose() - expect).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("influence columns are exactly centered at the debiased estimate") {
    const Setup s = make_setup(40, 3, 3, 12);
    for (auto kind : {GarsKind::borda(), GarsKind::bt(), GarsKind::rank_centrality()}) {
        const GarsEstimate est = debiased_estimate(s.ds, s.nuis, kind, s.ds.scheme);
        const MatrixXd phi = influence_values(s.ds, s.nuis.mu_hat, s.nuis.pi_hat, kind,
                                              s.ds.scheme, est.theta_hat);
        CHECK(phi.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        // sigma is a Gram matrix: symmetric and PSD
        CHECK((est.sigma_hat - est.sigma_hat.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(est.sigma_hat);
        CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("debiased equals plugin plus the mean correction") {
    const Setup s = make_setup(30, 3, 3, 13);
    const auto kind = GarsKind::borda();
    const GarsEstimate deb = debiased_estimate(s.ds, s.nuis, kind, s.ds.scheme);
    const GarsEstimate plug = plugin_estimate(s.nuis.mu_hat, kind, s.ds.scheme);
    const MatrixXd phi0 = influence_values(s.ds, s.nuis.mu_hat, s.nuis.pi_hat, kind,
                                           s.ds.scheme, VectorXd::Zero(3));
    VectorXd mean_f = VectorXd::Zero(3);
    for (int i = 0; i < s.ds.n(); ++i)
        mean_f += evaluate(kind, s.nuis.mu_hat[i], s.ds.scheme);
    mean_f /= s.ds.n();
    const VectorXd correction = phi0.colwise().mean().transpose() - mean_f;
    CHECK((deb.theta_hat - (plug.theta_hat + correction)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("debiased estimate is invariant to row order") {
    Setup s = make_setup(25, 3, 3, 14);
    const auto kind = GarsKind::rank_centrality();
    const GarsEstimate a = debiased_estimate(s.ds, s.nuis, kind, s.ds.scheme);
    // reverse everything consistently
    std::reverse(s.ds.rows.begin(), s.ds.rows.end());
    s.ds.contexts = s.ds.contexts.colwise().reverse().eval();
    std::reverse(s.nuis.mu_hat.begin(), s.nuis.mu_hat.end());
    std::reverse(s.nuis.pi_hat.begin(), s.nuis.pi_hat.end());
    const GarsEstimate b = debiased_estimate(s.ds, s.nuis, kind, s.ds.scheme);
    CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.sigma_hat - b.sigma_hat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("propensities below the floor raise a positivity error") {
    Setup s = make_setup(5, 2, 2, 15);
    bool had_pair = false;
    for (auto& pi : s.nuis.pi_hat) pi(0, 1) = 1e-15;
    for (auto& row : s.ds.rows)
        for (auto& pl : row.pairs) had_pair |= (pl.j == 0 && pl.k == 1);
    if (!had_pair) s.ds.rows[0].pairs.push_back({0, 1, 0});
    CHECK_THROWS_AS(influence_values(s.ds, s.nuis.mu_hat, s.nuis.pi_hat, GarsKind::borda(),
                                     s.ds.scheme, VectorXd::Zero(2), 1e-12),
                    NumericError);
}

TEST_CASE("Bonferroni critical values") {
    GarsEstimate est;
    est.n = 100;
    est.theta_hat = VectorXd::Zero(1);
    est.sigma_hat = MatrixXd::Identity(1, 1);
    CiOptions opts;
    opts.method = CiMethod::Bonferroni;
    CiSet ci = simultaneous_cis(est, opts);
    CHECK(ci.c_alpha == doctest::Approx(1.959964).epsilon(1e-4));

    est.theta_hat = VectorXd::Zero(20);
    est.sigma_hat = MatrixXd::Identity(20, 20);
    ci = simultaneous_cis(est, opts);
    CHECK(ci.c_alpha == doctest::Approx(3.0233).epsilon(1e-3 / 3.0233));
}

TEST_CASE("gaussmax with identity correlation approaches the marginal quantile") {
    GarsEstimate est;
    est.n = 100;
    est.theta_hat = VectorXd::Zero(1);
    est.sigma_hat = MatrixXd::Identity(1, 1);
    CiOptions opts;
    opts.method = CiMethod::GaussMax;
    opts.mc_draws = 200000;
    opts.seed = 99;
    const CiSet ci = simultaneous_cis(est, opts);
    CHECK(std::fabs(ci.c_alpha - 1.96) < 0.02);
}

TEST_CASE("gaussmax never exceeds Bonferroni by more than Monte Carlo error") {
    Rng rng(44);
    for (int rep = 0; rep < 3; ++rep) {
        const int d = 3;
        MatrixXd A(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
        GarsEstimate est;
        est.n = 50;
        est.theta_hat = VectorXd::Zero(d);
        est.sigma_hat = A * A.transpose() + 0.1 * MatrixXd::Identity(d, d);
        CiOptions gm;
        gm.method = CiMethod::GaussMax;
        gm.mc_draws = 50000;
        gm.seed = rep;
        CiOptions bf;
        bf.method = CiMethod::Bonferroni;
        const double cg = simultaneous_cis(est, gm).c_alpha;
        const double cb = simultaneous_cis(est, bf).c_alpha;
        CHECK(cg <= cb + 0.02);
    }
}

TEST_CASE("zero standard error collapses the interval and warns") {
    GarsEstimate est;
    est.n = 10;
    est.theta_hat = VectorXd::Zero(2);
    est.sigma_hat = MatrixXd::Zero(2, 2);
    est.sigma_hat(0, 0) = 1.0;
    CiOptions opts;
    opts.method = CiMethod::Bonferroni;
    const CiSet ci = simultaneous_cis(est, opts);
    CHECK(ci.lower(1) == ci.upper(1));
    CHECK_FALSE(ci.warnings.empty());
}

TEST_CASE("oracle-nuisance error and CI width scale with the sample size") {
    const DgpSpec spec = DgpSpec::ties(3, 2, 314);
    const Dgp dgp(spec);
    const auto scheme = dgp.scheme();
    const GroundTruth gt = ground_truth_scores(dgp, GarsKind::borda(), scheme, 50000, 1);
    auto run_block = [&](int n, int runs, double* mean_err, double* mean_width) {
        double e = 0.0, w = 0.0;
        for (int r = 0; r < runs; ++r) {
            const Dgp::Sample s = dgp.sample_dataset(n, derive_seed(271, r));
            CrossFittedNuisances nuis;
            nuis.mu_hat = s.oracle_mu;
            nuis.pi_hat = s.oracle_pi;
            nuis.known_pi = true;
            const GarsEstimate est =
                debiased_estimate(s.data, nuis, GarsKind::borda(), scheme);
            CiOptions opts;
            opts.mc_draws = 20000;
            opts.seed = r;
            const CiSet ci = simultaneous_cis(est, opts);
            e += (est.theta_hat - gt.theta_star).norm();
            w += ci.mean_width();
        }
        *mean_err = e / runs;
        *mean_width = w / runs;
    };
    double err_small, width_small, err_big, width_big, err_4x, width_4x;
    run_block(500, 20, &err_small, &width_small);
    run_block(1000, 20, &err_big, &width_big);
    run_block(2000, 20, &err_4x, &width_4x);
    // doubling n shrinks the width by roughly 1/sqrt(2)
    const double wr = width_big / width_small;
    CHECK(wr > 0.6);
    CHECK(wr < 0.82);
    // quadrupling n halves the error, within a factor 1.6
    const double er = err_4x / err_small;
    CHECK(er > 0.5 / 1.6);
    CHECK(er < 0.5 * 1.6);
}

TEST_CASE("ellipsoid test") {
    Rng rng(45);
    GarsEstimate est;
    est.n = 200;
    est.theta_hat = VectorXd::Zero(2);
    est.theta_hat << 0.5, -0.25;
    MatrixXd A(2, 2);
    A << 1.0, 0.2, 0.0, 0.8;
    est.sigma_hat = A * A.transpose();

    SUBCASE("center is inside with statistic zero") {
        const EllipsoidResult res = ellipsoid_test(est, est.theta_hat, 0.05);
        CHECK(res.statistic == doctest::Approx(0.0));
        CHECK(res.inside);
        CHECK(res.threshold == doctest::Approx(5.9915).epsilon(1e-3 / 5.9915));
    }
    SUBCASE("d=1 reduces to the two-sided normal test") {
        GarsEstimate e1;
        e1.n = 100;
        e1.theta_hat = VectorXd::Constant(1, 0.3);
        e1.sigma_hat = MatrixXd::Constant(1, 1, 2.0);
        const double se = std::sqrt(2.0 / 100);
        const double z = normal_quantile(0.975);
        for (double delta : {0.5 * z * se, 0.999 * z * se, 1.001 * z * se, 2 * z * se}) {
            VectorXd t0 = VectorXd::Constant(1, 0.3 + delta);
            const EllipsoidResult res = ellipsoid_test(e1, t0, 0.05);
            CHECK(res.inside == (delta <= z * se * (1 + 1e-9)));
        }
    }
}
