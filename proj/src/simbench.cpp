#include "gars/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "gars/btmodel.hpp"
#include "gars/rng.hpp"

namespace gars {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p) - std::log1p(-p); }
}  // namespace

DgpSpec DgpSpec::ties(int K, int p, std::uint64_t seed) {
    DgpSpec s;
    s.variant = DgpVariant::NonlinearTie;
    s.K = K;
    s.p = p;
    s.seed = seed;
    return s;
}

DgpSpec DgpSpec::bt_misspec(int K, int p, double gamma, std::uint64_t seed) {
    DgpSpec s;
    s.variant = DgpVariant::BtMisspec;
    s.K = K;
    s.p = p;
    s.gamma = gamma;
    s.seed = seed;
    return s;
}

Dgp::Dgp(const DgpSpec& spec) : spec_(spec) {
    const int K = spec.K, p = spec.p, q = spec.q();
    if (K < 2 || p < 1) throw ValidationError("Dgp: need K >= 2 and p >= 1");
    Rng rng(derive_seed(spec.seed, 0xd69));
    W_.resize(K, p);
    for (int j = 0; j < K; ++j)
        for (int c = 0; c < p; ++c) W_(j, c) = spec.sigma_l * rng.normal();
    b_.resize(K);
    for (int j = 0; j < K; ++j) b_(j) = rng.normal();
    Wq_.resize(K, q);
    for (int j = 0; j < K; ++j)
        for (int c = 0; c < q; ++c) Wq_(j, c) = spec.sigma_q * rng.normal();
    phi_.resize(K);
    for (int j = 0; j < K; ++j) phi_(j) = rng.uniform(0.0, kTwoPi);
    bpi_.resize(K);
    for (int j = 0; j < K; ++j) bpi_(j) = 0.1 * rng.normal();
    cycle_ = MatrixXd::Zero(K, K);
    for (int j = 0; j < K; ++j) {
        cycle_(j, (j + 1) % K) = 1.0;
        cycle_((j + 1) % K, j) = -1.0;
    }
}

VectorXd Dgp::utilities(const VectorXd& x) const {
    const int K = spec_.K, q = spec_.q();
    VectorXd u = W_ * x + b_;
    const VectorXd xq = x.head(q).array().square();
    u += Wq_ * xq;
    for (int j = 0; j < K; ++j) u(j) += spec_.s_sin * std::sin(kTwoPi * x(0) + phi_(j));
    return u;
}

MatrixXd Dgp::score_gaps(const VectorXd& x) const {
    const int K = spec_.K;
    const VectorXd u = utilities(x);
    MatrixXd d(K, K);
    const double shift = spec_.beta_pos * (x(0) - 0.5);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) d(j, k) = (u(j) - u(k)) / spec_.T + shift;
    d.diagonal().setZero();
    return d;
}

MuTensor Dgp::true_mu(const VectorXd& x) const {
    const int K = spec_.K;
    const MatrixXd d = score_gaps(x);
    if (spec_.variant == DgpVariant::BtMisspec) {
        MuTensor mu(K, 2);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                const double p1 = sigmoid(d(j, k) + spec_.gamma * cycle_(j, k));
                mu(j, k, 0) = p1;
                mu(j, k, 1) = 1.0 - p1;
            }
        return mu;
    }
    MuTensor mu(K, 3);
    const double xc = x(spec_.p >= 2 ? 1 : 0);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            const double ltie =
                spec_.tau0 - spec_.tau1 * std::fabs(d(j, k)) + spec_.tau_c * std::cos(kTwoPi * xc);
            double z[3] = {d(j, k), -d(j, k), ltie};
            const double mx = std::max({z[0], z[1], z[2]});
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - mx);
                sum += v;
            }
            Eigen::RowVector3d slice(z[0] / sum, z[1] / sum, z[2] / sum);
            mu.raw().row(j * K + k) = slice;
            if (spec_.eps_mu > 0.0)
                renormalize_with_floor(mu.raw().row(j * K + k), spec_.eps_mu);
        }
    return mu;
}

PiMatrix Dgp::true_pi(const VectorXd& x) const {
    const int K = spec_.K;
    const MatrixXd d = score_gaps(x);
    PiMatrix pi(K);
    const double base_logit = logit(spec_.pi_p);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            const double lin = base_logit - spec_.kappa_pi * std::fabs(d(j, k)) +
                               spec_.eta_pi * (x(0) - 0.5) + bpi_(j) + bpi_(k);
            double v = (1.0 - spec_.lambda_pi) * spec_.pi_p + spec_.lambda_pi * sigmoid(lin);
            pi(j, k) = std::min(spec_.pi_max, std::max(spec_.pi_min, v));
        }
    return pi;
}

MatrixXd Dgp::sample_contexts(int n_ctx, std::uint64_t seed) const {
    MatrixXd X(n_ctx, spec_.p);
    for (int i = 0; i < n_ctx; ++i) {
        Rng rng(derive_seed(seed, 0xc0, static_cast<std::uint64_t>(i)));
        for (int c = 0; c < spec_.p; ++c) X(i, c) = rng.uniform();
    }
    return X;
}

Dgp::Sample Dgp::sample_dataset(int n_ctx, std::uint64_t seed) const {
    if (n_ctx < 1) throw ValidationError("sample_dataset: n_ctx must be >= 1");
    const int K = spec_.K;
    Sample out;
    out.data.items = ItemSet(K);
    out.data.scheme = scheme();
    out.data.contexts = sample_contexts(n_ctx, seed);
    out.data.rows.resize(n_ctx);
    out.oracle_mu.reserve(n_ctx);
    out.oracle_pi.reserve(n_ctx);
    for (int i = 0; i < n_ctx; ++i) {
        const VectorXd x = out.data.contexts.row(i).transpose();
        MuTensor mu = true_mu(x);
        PiMatrix pi = true_pi(x);
        Rng rng(derive_seed(seed, 0x0b5, static_cast<std::uint64_t>(i)));
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                const double u_sel = rng.uniform();
                const double u_lab = rng.uniform();
                if (u_sel < pi(j, k)) {
                    // invert the slice CDF with the pre-drawn uniform
                    double acc = 0.0;
                    int label = mu.C() - 1;
                    for (int c = 0; c < mu.C(); ++c) {
                        acc += mu(j, k, c);
                        if (u_lab < acc) {
                            label = c;
                            break;
                        }
                    }
                    out.data.rows[i].pairs.push_back({j, k, label});
                }
            }
        out.oracle_mu.push_back(std::move(mu));
        out.oracle_pi.push_back(std::move(pi));
    }
    return out;
}

Dgp::Sample Dgp::sample_with_policy(const MatrixXd& contexts,
                                    const std::vector<PiMatrix>& policy,
                                    std::uint64_t seed) const {
    const int n = static_cast<int>(contexts.rows());
    if (static_cast<int>(policy.size()) != n)
        throw ValidationError("sample_with_policy: policy size mismatch");
    const int K = spec_.K;
    Sample out;
    out.data.items = ItemSet(K);
    out.data.scheme = scheme();
    out.data.contexts = contexts;
    out.data.rows.resize(n);
    out.oracle_mu.reserve(n);
    out.oracle_pi = policy;
    for (int i = 0; i < n; ++i) {
        const VectorXd x = contexts.row(i).transpose();
        MuTensor mu = true_mu(x);
        Rng rng(derive_seed(seed, 0x0b5, static_cast<std::uint64_t>(i)));
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                const double u_sel = rng.uniform();
                const double u_lab = rng.uniform();
                if (u_sel < policy[i](j, k)) {
                    double acc = 0.0;
                    int label = mu.C() - 1;
                    for (int c = 0; c < mu.C(); ++c) {
                        acc += mu(j, k, c);
                        if (u_lab < acc) {
                            label = c;
                            break;
                        }
                    }
                    out.data.rows[i].pairs.push_back({j, k, label});
                }
            }
        out.oracle_mu.push_back(std::move(mu));
    }
    return out;
}

void Dgp::attach_judge(PreferenceDataset* ds, double sigma, std::uint64_t seed) const {
    const int K = spec_.K, C = this->C();
    for (int i = 0; i < ds->n(); ++i) {
        const MuTensor mu = true_mu(ds->contexts.row(i).transpose());
        JudgeTable jt(K, C);
        Rng rng(derive_seed(seed, 0x17d, static_cast<std::uint64_t>(i)));
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                VectorXd z(C);
                for (int c = 0; c < C; ++c)
                    z(c) = std::log(std::max(mu(j, k, c), 1e-12)) + sigma * rng.normal();
                z.array() -= z.maxCoeff();
                VectorXd pr = z.array().exp();
                pr /= pr.sum();
                jt.set(j, k, pr);
            }
        ds->rows[i].judge = std::move(jt);
    }
}

GroundTruth ground_truth_scores(const Dgp& dgp, const GarsKind& kind,
                                const CategoryScheme& scheme, int mc_n, std::uint64_t seed) {
    if (mc_n < 10000) throw ValidationError("ground_truth_scores: mc_n must be >= 1e4");
    const int d = kind.dim(dgp.K());
    VectorXd sum = VectorXd::Zero(d), sumsq = VectorXd::Zero(d);
    const MatrixXd X = dgp.sample_contexts(mc_n, derive_seed(seed, 0x97));
    for (int i = 0; i < mc_n; ++i) {
        const VectorXd f = evaluate(kind, dgp.true_mu(X.row(i).transpose()), scheme);
        sum += f;
        sumsq += f.cwiseProduct(f);
    }
    GroundTruth gt;
    gt.theta_star = sum / mc_n;
    gt.mc_n = mc_n;
    gt.seed = seed;
    const VectorXd var = (sumsq / mc_n - gt.theta_star.cwiseProduct(gt.theta_star)).cwiseMax(0.0);
    gt.max_se = std::sqrt(var.maxCoeff() / mc_n);
    return gt;
}

void run_parallel(int runs, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, runs));
    if (threads == 1) {
        for (int r = 0; r < runs; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (int r = t; r < runs; r += threads) fn(r);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

NuisanceOptions experiment_nuisance_options(double mu_floor, double pi_floor) {
    NuisanceOptions opts;
    opts.learner.kind = MultinomialLogitSpec{};
    opts.features.expand_features = true;
    opts.features.item_interactions = true;
    opts.features.pair_intercepts = true;
    opts.mu_floor = mu_floor;
    opts.pi_floor = pi_floor;
    return opts;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

EstimatorReport summarize(const std::string& name, const std::vector<double>& errors,
                          const std::vector<int>& covered, const std::vector<double>& widths) {
    EstimatorReport rep;
    rep.name = name;
    rep.errors = errors;
    const int runs = static_cast<int>(errors.size());
    double m = 0.0;
    for (double e : errors) m += e;
    m /= runs;
    double v = 0.0;
    for (double e : errors) v += (e - m) * (e - m);
    v /= std::max(1, runs - 1);
    rep.mean_error = m;
    rep.error_ci = 1.959963984540054 * std::sqrt(v / runs);
    double cov = 0.0;
    for (int c : covered) cov += c;
    cov /= runs;
    rep.coverage = cov;
    rep.coverage_ci = 1.959963984540054 * std::sqrt(std::max(cov * (1 - cov), 0.0) / runs);
    double w = 0.0;
    for (double x : widths) w += x;
    rep.mean_width = w / runs;
    return rep;
}

}  // namespace

CoverageReport coverage_experiment(const Dgp& dgp, const CoverageConfig& cfg) {
    if (cfg.runs < 10) throw ValidationError("coverage_experiment: runs must be >= 10");
    const CategoryScheme scheme = dgp.scheme();
    const GroundTruth gt =
        ground_truth_scores(dgp, cfg.kind, scheme, cfg.mc_n, derive_seed(cfg.seed, 0x6f));

    std::vector<double> err_d(cfg.runs), err_p(cfg.runs), wid_d(cfg.runs), wid_p(cfg.runs);
    std::vector<int> cov_d(cfg.runs), cov_p(cfg.runs);

    run_parallel(cfg.runs, cfg.threads, [&](int r) {
        const std::uint64_t rs = derive_seed(cfg.seed, 0xa11, static_cast<std::uint64_t>(r));
        Dgp::Sample sample = dgp.sample_dataset(cfg.n_ctx, rs);
        if (cfg.use_judge)
            dgp.attach_judge(&sample.data, cfg.judge_sigma, derive_seed(rs, 0x1d6e));

        CrossFittedNuisances nuis;
        if (cfg.oracle_nuisances) {
            nuis.mu_hat = sample.oracle_mu;
            nuis.pi_hat = sample.oracle_pi;
            nuis.known_pi = true;
        } else {
            NuisanceOptions opts = cfg.nuisance;
            opts.use_judge = cfg.use_judge;
            nuis = crossfit(sample.data, cfg.folds, derive_seed(rs, 0xcf), opts);
        }

        const GarsEstimate deb = debiased_estimate(sample.data, nuis, cfg.kind, scheme);
        CiOptions ci_opts = cfg.ci;
        ci_opts.seed = derive_seed(rs, 0xc1, 0);
        const CiSet ci = simultaneous_cis(deb, ci_opts);
        err_d[r] = (deb.theta_hat - gt.theta_star).norm();
        cov_d[r] = ci.covers(gt.theta_star) ? 1 : 0;
        wid_d[r] = ci.mean_width();

        const GarsEstimate plug = plugin_estimate(nuis.mu_hat, cfg.kind, scheme);
        ci_opts.seed = derive_seed(rs, 0xc1, 1);
        const CiSet cip = simultaneous_cis(plug, ci_opts);
        err_p[r] = (plug.theta_hat - gt.theta_star).norm();
        cov_p[r] = cip.covers(gt.theta_star) ? 1 : 0;
        wid_p[r] = cip.mean_width();
    });

    CoverageReport rep;
    rep.theta_star = gt.theta_star;
    rep.debiased = summarize("debiased", err_d, cov_d, wid_d);
    rep.plugin = summarize("plugin", err_p, cov_p, wid_p);
    return rep;
}

TrendReport trend_experiment(const Dgp& dgp, const GarsKind& kind, const CoverageConfig& cfg,
                             const std::vector<int>& n_grid) {
    const CategoryScheme scheme = dgp.scheme();
    const GroundTruth gt =
        ground_truth_scores(dgp, kind, scheme, cfg.mc_n, derive_seed(cfg.seed, 0x6f));
    const int n_max = *std::max_element(n_grid.begin(), n_grid.end());

    MatrixXd errs(cfg.runs, n_grid.size());
    run_parallel(cfg.runs, cfg.threads, [&](int r) {
        const std::uint64_t rs = derive_seed(cfg.seed, 0xa11, static_cast<std::uint64_t>(r));
        const Dgp::Sample master = dgp.sample_dataset(n_max, rs);
        for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
            const int n = n_grid[gi];
            // Nested prefix of the master sample.
            PreferenceDataset ds;
            ds.items = master.data.items;
            ds.scheme = master.data.scheme;
            ds.contexts = master.data.contexts.topRows(n);
            ds.rows.assign(master.data.rows.begin(), master.data.rows.begin() + n);
            const CrossFittedNuisances nuis =
                crossfit(ds, cfg.folds, derive_seed(rs, 0xcf, gi), cfg.nuisance);
            const GarsEstimate deb = debiased_estimate(ds, nuis, kind, scheme);
            errs(r, gi) = (deb.theta_hat - gt.theta_star).norm();
        }
    });

    TrendReport rep;
    rep.n_grid = n_grid;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi)
        rep.mean_error.push_back(errs.col(gi).mean());
    return rep;
}

AcquisitionExperimentReport acquisition_experiment(const Dgp& dgp,
                                                   const AcquisitionExperimentConfig& cfg) {
    if (cfg.runs < 5) throw ValidationError("acquisition_experiment: runs must be >= 5");
    const CategoryScheme scheme = dgp.scheme();
    const int K = dgp.K();

    BudgetSpec budget;
    budget.beta = cfg.beta;
    budget.alpha_floor = cfg.alpha_floor;
    budget.costs = BudgetSpec::unit_costs(K);
    budget.mode = AcquisitionMode::Independent;
    budget.validate(K);

    double total_cost = 0.0;
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) total_cost += budget.costs(j, k);
    const double uniform_rate = std::min(1.0, cfg.beta / total_cost);

    AcquisitionExperimentReport rep;
    for (const auto& kind : cfg.kinds) {
        const GroundTruth gt =
            ground_truth_scores(dgp, kind, scheme, cfg.mc_n, derive_seed(cfg.seed, 0x6f));
        const int d = kind.dim(K);

        std::vector<double> mse_a(cfg.runs), mse_u(cfg.runs);
        run_parallel(cfg.runs, cfg.threads, [&](int r) {
            const std::uint64_t rs =
                derive_seed(cfg.seed, 0xacb, static_cast<std::uint64_t>(r));
            const MatrixXd X = dgp.sample_contexts(cfg.n_ctx, derive_seed(rs, 0x1));

            std::vector<MuTensor> oracle;
            oracle.reserve(cfg.n_ctx);
            for (int i = 0; i < cfg.n_ctx; ++i)
                oracle.push_back(dgp.true_mu(X.row(i).transpose()));

            const AcquisitionSolution aopt = a_optimal(oracle, budget, kind, scheme);
            std::vector<PiMatrix> unif(
                cfg.n_ctx,
                PiMatrix((uniform_rate * (MatrixXd::Ones(K, K) - MatrixXd::Identity(K, K)))
                             .eval()));

            for (int arm = 0; arm < 2; ++arm) {
                const std::vector<PiMatrix>& pol = arm == 0 ? aopt.pi_star : unif;
                // Same per-row uniforms across arms (selection + label streams are
                // derived per row inside sample_with_policy).
                Dgp::Sample sample = dgp.sample_with_policy(X, pol, derive_seed(rs, 0x2));
                const CrossFittedNuisances nuis =
                    crossfit(sample.data, cfg.folds, derive_seed(rs, 0x3), cfg.nuisance,
                             &sample.oracle_pi);
                const GarsEstimate deb = debiased_estimate(sample.data, nuis, kind, scheme);
                const double mse = (deb.theta_hat - gt.theta_star).squaredNorm() / d;
                (arm == 0 ? mse_a : mse_u)[r] = mse;
            }
        });

        AcquisitionExperimentReport::PerKind pk;
        pk.kind = kind.family == GarsFamily::Borda
                      ? "borda"
                      : (kind.family == GarsFamily::BTProjection ? "bt" : "rc");
        for (int r = 0; r < cfg.runs; ++r) {
            pk.aopt_mse += mse_a[r];
            pk.uniform_mse += mse_u[r];
        }
        pk.aopt_mse /= cfg.runs;
        pk.uniform_mse /= cfg.runs;
        rep.results.push_back(pk);
    }
    return rep;
}

BtMisspecReport btmisspec_experiment(const DgpSpec& base, double gamma, int runs, int n_ctx,
                                     int folds, const NuisanceOptions& opts, std::uint64_t seed,
                                     int mc_n, int threads, bool oracle_nuisances) {
    DgpSpec spec = base;
    spec.variant = DgpVariant::BtMisspec;
    spec.gamma = gamma;
    const Dgp dgp(spec);
    const CategoryScheme scheme = dgp.scheme();
    const GroundTruth gt =
        ground_truth_scores(dgp, GarsKind::bt(), scheme, mc_n, derive_seed(seed, 0x6f));

    std::vector<double> err_r(runs), err_u(runs);
    run_parallel(runs, threads, [&](int r) {
        const std::uint64_t rs = derive_seed(seed, 0xb7, static_cast<std::uint64_t>(r));
        Dgp::Sample sample = dgp.sample_dataset(n_ctx, rs);
        CrossFittedNuisances nuis;
        if (oracle_nuisances) {
            nuis.mu_hat = sample.oracle_mu;
            nuis.pi_hat = sample.oracle_pi;
            nuis.known_pi = true;
        } else {
            nuis = crossfit(sample.data, folds, derive_seed(rs, 0xcf), opts);
        }
        const GarsEstimate unres = debiased_estimate(sample.data, nuis, GarsKind::bt(), scheme);
        const GarsEstimate res = bt_restricted_debiased(sample.data, nuis, scheme);
        err_u[r] = (unres.theta_hat - gt.theta_star).norm();
        err_r[r] = (res.theta_hat - gt.theta_star).norm();
    });

    BtMisspecReport rep;
    rep.gamma = gamma;
    for (int r = 0; r < runs; ++r) {
        rep.restricted_error += err_r[r];
        rep.unrestricted_error += err_u[r];
    }
    rep.restricted_error /= runs;
    rep.unrestricted_error /= runs;
    return rep;
}

JudgeReport judge_experiment(const Dgp& dgp, const GarsKind& kind,
                             const std::vector<double>& sigmas, int runs, int n_ctx, int folds,
                             const NuisanceOptions& opts, std::uint64_t seed, int mc_n,
                             int threads) {
    const CategoryScheme scheme = dgp.scheme();
    const GroundTruth gt =
        ground_truth_scores(dgp, kind, scheme, mc_n, derive_seed(seed, 0x6f));

    MatrixXd errs(runs, sigmas.size());
    run_parallel(runs, threads, [&](int r) {
        const std::uint64_t rs = derive_seed(seed, 0x1d9, static_cast<std::uint64_t>(r));
        const Dgp::Sample sample = dgp.sample_dataset(n_ctx, rs);
        for (std::size_t si = 0; si < sigmas.size(); ++si) {
            PreferenceDataset ds = sample.data;
            // Shared noise stream across sigma arms: only the scale differs.
            dgp.attach_judge(&ds, sigmas[si], derive_seed(rs, 0x1d6e));
            NuisanceOptions jopts = opts;
            jopts.use_judge = true;
            const CrossFittedNuisances nuis =
                crossfit(ds, folds, derive_seed(rs, 0xcf), jopts);
            const GarsEstimate deb = debiased_estimate(ds, nuis, kind, scheme);
            errs(r, si) = (deb.theta_hat - gt.theta_star).norm();
        }
    });

    JudgeReport rep;
    rep.sigmas = sigmas;
    for (std::size_t si = 0; si < sigmas.size(); ++si)
        rep.mean_error.push_back(errs.col(si).mean());
    return rep;
}

}  // namespace gars
