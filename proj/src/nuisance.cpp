#include "gars/nuisance.hpp"

#include <algorithm>
#include <cmath>

#include "gars/rng.hpp"

namespace gars {

CrossFitPlan make_plan(int n, int V, std::uint64_t seed) {
    if (V < 2) throw ValidationError("make_plan: V must be >= 2");
    if (n < V) throw ValidationError("make_plan: need n >= V");
    CrossFitPlan plan;
    plan.V = V;
    plan.seed = seed;
    plan.fold.resize(n);
    Rng rng(derive_seed(seed, 0xf01d));
    const std::vector<int> perm = rng.permutation(n);
    for (int pos = 0; pos < n; ++pos) plan.fold[perm[pos]] = pos % V;
    return plan;
}

int context_feature_dim(int p, bool expand) { return expand ? 2 * p + 3 : p; }

VectorXd context_features(const VectorXd& x, bool expand) {
    if (!expand) return x;
    const int p = static_cast<int>(x.size());
    VectorXd f(2 * p + 3);
    f.head(p) = x;
    f.segment(p, p) = x.array().square();
    const double two_pi = 6.283185307179586476925286766559;
    f(2 * p) = std::sin(two_pi * x(0));
    f(2 * p + 1) = std::cos(two_pi * x(0));
    f(2 * p + 2) = std::cos(two_pi * x(p >= 2 ? 1 : 0));
    return f;
}

int pair_feature_dim(int p, int K, const FeatureOptions& opts) {
    const int f = context_feature_dim(p, opts.expand_features);
    int d = f + 2 * K;
    if (opts.item_interactions) d += 2 * K * f;
    if (opts.pair_intercepts) d += K * K;
    return d + opts.judge_dims;
}

VectorXd pair_features(const VectorXd& x, int j, int k, int K, const FeatureOptions& opts,
                       const double* judge_probs) {
    const VectorXd f = context_features(x, opts.expand_features);
    const int fd = static_cast<int>(f.size());
    VectorXd out = VectorXd::Zero(pair_feature_dim(static_cast<int>(x.size()), K, opts));
    int off = 0;
    out.segment(off, fd) = f;
    off += fd;
    out(off + j) = 1.0;
    off += K;
    out(off + k) = 1.0;
    off += K;
    if (opts.item_interactions) {
        out.segment(off + j * fd, fd) = f;
        off += K * fd;
        out.segment(off + k * fd, fd) = f;
        off += K * fd;
    }
    if (opts.pair_intercepts) {
        out(off + j * K + k) = 1.0;
        off += K * K;
    }
    for (int c = 0; c < opts.judge_dims; ++c) out(off + c) = judge_probs[c];
    return out;
}

namespace {

struct PairRef {
    int row, j, k;
};

std::vector<std::pair<int, int>> ordered_pairs(int K) {
    std::vector<std::pair<int, int>> out;
    out.reserve(K * (K - 1));
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) out.emplace_back(j, k);
    return out;
}

MatrixXd predict_rows(const MultinomialLogit& model, const MatrixXd& X) {
    return model.predict(X);
}

}  // namespace

std::vector<MuTensor> crossfit_mu(const PreferenceDataset& ds, const CrossFitPlan& plan,
                                  const NuisanceOptions& opts) {
    const int n = ds.n(), K = ds.K(), C = ds.C();
    if (plan.n() != n) throw ValidationError("crossfit_mu: plan size mismatch");
    if (opts.use_judge) {
        if (!ds.has_judge())
            throw ValidationError("crossfit_mu: use_judge set but dataset has no judge field");
        if (!ds.judge_complete())
            throw ValidationError(
                "crossfit_mu: judge-as-features needs judge vectors for all ordered pairs of "
                "every row");
    }
    FeatureOptions fopts = opts.features;
    fopts.judge_dims = opts.use_judge ? std::max(C - 1, 1) : 0;
    const auto pairs = ordered_pairs(K);

    std::vector<MuTensor> out(n, MuTensor(K, C));

    for (int v = 0; v < plan.V; ++v) {
        // Training rows: labeled pairs of all other folds.
        std::vector<PairRef> train;
        for (int i = 0; i < n; ++i) {
            if (plan.fold[i] == v) continue;
            for (const auto& pl : ds.rows[i].pairs) train.push_back({i, pl.j, pl.k});
        }
        std::vector<int> labels;
        labels.reserve(train.size());
        for (int i = 0; i < n; ++i) {
            if (plan.fold[i] == v) continue;
            for (const auto& pl : ds.rows[i].pairs) labels.push_back(pl.label);
        }
        MatrixXd X(train.size(), pair_feature_dim(ds.p(), K, fopts));
        for (std::size_t r = 0; r < train.size(); ++r) {
            const auto& t = train[r];
            const double* jp = nullptr;
            if (opts.use_judge) jp = ds.rows[t.row].judge->probs_ptr(t.j, t.k);
            X.row(r) =
                pair_features(ds.contexts.row(t.row).transpose(), t.j, t.k, K, fopts, jp)
                    .transpose();
        }

        std::vector<int> test_rows;
        for (int i = 0; i < n; ++i)
            if (plan.fold[i] == v) test_rows.push_back(i);

        if (opts.learner.is_external()) {
            MatrixXd Xp(test_rows.size() * pairs.size(), X.cols());
            std::size_t r = 0;
            for (int i : test_rows)
                for (const auto& [j, k] : pairs) {
                    const double* jp =
                        opts.use_judge ? ds.rows[i].judge->probs_ptr(j, k) : nullptr;
                    Xp.row(r++) =
                        pair_features(ds.contexts.row(i).transpose(), j, k, K, fopts, jp)
                            .transpose();
                }
            const MatrixXd P = external_fit_predict(opts.learner.external(), X, labels, {}, C,
                                                    Xp, "mu");
            r = 0;
            for (int i : test_rows)
                for (const auto& [j, k] : pairs) out[i].set_slice(j, k, P.row(r++).transpose());
        } else {
            const MultinomialLogit model =
                MultinomialLogit::fit(X, labels, C, opts.learner.logit());
            for (const auto& [j, k] : pairs) {
                MatrixXd Xp(test_rows.size(), X.cols());
                for (std::size_t r = 0; r < test_rows.size(); ++r) {
                    const int i = test_rows[r];
                    const double* jp =
                        opts.use_judge ? ds.rows[i].judge->probs_ptr(j, k) : nullptr;
                    Xp.row(r) =
                        pair_features(ds.contexts.row(i).transpose(), j, k, K, fopts, jp)
                            .transpose();
                }
                const MatrixXd P = predict_rows(model, Xp);
                for (std::size_t r = 0; r < test_rows.size(); ++r)
                    out[test_rows[r]].set_slice(j, k, P.row(r).transpose());
            }
        }
    }

    for (auto& mu : out) mu = clamp_mu(mu, opts.mu_floor);
    return out;
}

std::vector<PiMatrix> crossfit_pi(const PreferenceDataset& ds, const CrossFitPlan& plan,
                                  const NuisanceOptions& opts) {
    const int n = ds.n(), K = ds.K();
    if (plan.n() != n) throw ValidationError("crossfit_pi: plan size mismatch");
    if (ds.total_selected() == 0)
        throw ValidationError("crossfit_pi: dataset has no labeled pairs");
    if (opts.neg_per_pos < 1) throw ValidationError("crossfit_pi: neg_per_pos must be >= 1");
    if (!(opts.pi_floor > 0.0 && opts.pi_floor < 0.5))
        throw ValidationError("crossfit_pi: pi_floor must be in (0, 0.5)");
    FeatureOptions fopts = opts.features;
    fopts.judge_dims = 0;  // judge features are not used for the selection model
    const auto pairs = ordered_pairs(K);

    std::vector<PiMatrix> out(n, PiMatrix(K));

    for (int v = 0; v < plan.V; ++v) {
        std::vector<PairRef> pos, neg_all;
        for (int i = 0; i < n; ++i) {
            if (plan.fold[i] == v) continue;
            std::vector<bool> selected(K * K, false);
            for (const auto& pl : ds.rows[i].pairs) selected[pl.j * K + pl.k] = true;
            for (const auto& [j, k] : pairs) {
                if (selected[j * K + k])
                    pos.push_back({i, j, k});
                else
                    neg_all.push_back({i, j, k});
            }
        }
        // Subsample negatives at neg_per_pos per positive; weights undo the subsampling.
        const std::size_t target =
            std::min(neg_all.size(),
                     static_cast<std::size_t>(opts.neg_per_pos) * std::max<std::size_t>(pos.size(), 1));
        double neg_weight = 1.0;
        std::vector<PairRef> neg;
        if (target < neg_all.size()) {
            Rng rng(derive_seed(plan.seed, 0x9e6, static_cast<std::uint64_t>(v)));
            const std::vector<int> perm = rng.permutation(static_cast<int>(neg_all.size()));
            neg.reserve(target);
            for (std::size_t r = 0; r < target; ++r) neg.push_back(neg_all[perm[r]]);
            neg_weight = static_cast<double>(neg_all.size()) / static_cast<double>(target);
        } else {
            neg = std::move(neg_all);
        }

        const std::size_t m = pos.size() + neg.size();
        MatrixXd X(m, pair_feature_dim(ds.p(), K, fopts));
        std::vector<int> y(m);
        std::vector<double> w(m);
        std::size_t r = 0;
        for (const auto& t : pos) {
            X.row(r) = pair_features(ds.contexts.row(t.row).transpose(), t.j, t.k, K, fopts)
                           .transpose();
            y[r] = 1;
            w[r] = 1.0;
            ++r;
        }
        for (const auto& t : neg) {
            X.row(r) = pair_features(ds.contexts.row(t.row).transpose(), t.j, t.k, K, fopts)
                           .transpose();
            y[r] = 0;
            w[r] = neg_weight;
            ++r;
        }

        std::vector<int> test_rows;
        for (int i = 0; i < n; ++i)
            if (plan.fold[i] == v) test_rows.push_back(i);

        if (opts.learner.is_external()) {
            MatrixXd Xp(test_rows.size() * pairs.size(), X.cols());
            std::size_t rr = 0;
            for (int i : test_rows)
                for (const auto& [j, k] : pairs)
                    Xp.row(rr++) =
                        pair_features(ds.contexts.row(i).transpose(), j, k, K, fopts)
                            .transpose();
            const MatrixXd P =
                external_fit_predict(opts.learner.external(), X, y, w, 2, Xp, "pi");
            rr = 0;
            for (int i : test_rows)
                for (const auto& [j, k] : pairs) out[i](j, k) = P(rr++, 1);
        } else {
            const MultinomialLogit model = MultinomialLogit::fit(X, y, 2, opts.learner.logit(), &w);
            for (const auto& [j, k] : pairs) {
                MatrixXd Xp(test_rows.size(), X.cols());
                for (std::size_t rr = 0; rr < test_rows.size(); ++rr)
                    Xp.row(rr) =
                        pair_features(ds.contexts.row(test_rows[rr]).transpose(), j, k, K, fopts)
                            .transpose();
                const MatrixXd P = predict_rows(model, Xp);
                for (std::size_t rr = 0; rr < test_rows.size(); ++rr)
                    out[test_rows[rr]](j, k) = P(rr, 1);
            }
        }
    }

    for (auto& pi : out)
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k)
                if (j != k) pi(j, k) = std::min(1.0, std::max(opts.pi_floor, pi(j, k)));
    return out;
}

CrossFittedNuisances crossfit(const PreferenceDataset& ds, int V, std::uint64_t seed,
                              const NuisanceOptions& opts,
                              const std::vector<PiMatrix>* known_pi) {
    CrossFittedNuisances out;
    out.plan = make_plan(ds.n(), V, seed);
    out.mu_hat = crossfit_mu(ds, out.plan, opts);
    if (known_pi != nullptr) {
        if (static_cast<int>(known_pi->size()) != ds.n())
            throw ValidationError("crossfit: known pi size mismatch");
        out.pi_hat = *known_pi;
        out.known_pi = true;
        out.trained_without_fold.assign(ds.n(), -1);
    } else {
        out.pi_hat = crossfit_pi(ds, out.plan, opts);
        out.trained_without_fold = out.plan.fold;
    }
    return out;
}

}  // namespace gars
