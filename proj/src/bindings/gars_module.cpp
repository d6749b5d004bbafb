#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gars/acquisition.hpp"
#include "gars/btmodel.hpp"
#include "gars/dataset.hpp"
#include "gars/functionals.hpp"
#include "gars/inference.hpp"
#include "gars/nuisance.hpp"
#include "gars/simbench.hpp"
#include "gars/stats.hpp"

namespace py = pybind11;
using namespace gars;

namespace {

// numpy (K, K, C) <-> MuTensor
MuTensor mu_from_array(const py::array_t<double>& arr) {
    const auto buf = arr.request();
    if (buf.ndim != 3 || buf.shape[0] != buf.shape[1])
        throw ValidationError("mu array must have shape (K, K, C)");
    const int K = static_cast<int>(buf.shape[0]);
    const int C = static_cast<int>(buf.shape[2]);
    MuTensor mu(K, C);
    const auto view = arr.unchecked<3>();
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            for (int c = 0; c < C; ++c) mu(j, k, c) = view(j, k, c);
    return mu;
}

py::array_t<double> mu_to_array(const MuTensor& mu) {
    const int K = mu.K(), C = mu.C();
    py::array_t<double> arr({K, K, C});
    auto view = arr.mutable_unchecked<3>();
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            for (int c = 0; c < C; ++c) view(j, k, c) = mu(j, k, c);
    return arr;
}

std::vector<MuTensor> mu_rows_from_list(const std::vector<py::array_t<double>>& arrs) {
    std::vector<MuTensor> rows;
    rows.reserve(arrs.size());
    for (const auto& a : arrs) rows.push_back(mu_from_array(a));
    return rows;
}

std::vector<PiMatrix> pi_rows_from_list(const std::vector<MatrixXd>& mats) {
    std::vector<PiMatrix> rows;
    rows.reserve(mats.size());
    for (const auto& m : mats) rows.push_back(PiMatrix(m));
    return rows;
}

GarsKind kind_from_name(const std::string& name, double tau = 0.1,
                        const std::vector<std::vector<int>>& rankings = {}) {
    if (name == "borda") return GarsKind::borda();
    if (name == "bt") return GarsKind::bt();
    if (name == "rc") return GarsKind::rank_centrality();
    if (name == "softmax") return GarsKind::softmax();
    if (name == "copeland") return GarsKind::soft_copeland(tau);
    if (name == "kemeny") {
        if (rankings.empty()) throw ValidationError("kemeny needs rankings");
        return GarsKind::kemeny(rankings);
    }
    if (name == "miscal") return GarsKind::judge_miscalibration(MiscalLoss::Squared);
    throw ValidationError("unknown kind '" + name + "'");
}

BudgetSpec budget_from(int K, double beta, double alpha_floor, const py::object& costs,
                       AcquisitionMode mode) {
    BudgetSpec budget;
    budget.beta = beta;
    budget.alpha_floor = alpha_floor;
    budget.costs = costs.is_none() ? BudgetSpec::unit_costs(K) : costs.cast<MatrixXd>();
    budget.mode = mode;
    return budget;
}

py::dict estimate_to_dict(const GarsEstimate& est) {
    py::dict d;
    d["theta"] = VectorXd(est.theta_hat);
    d["sigma"] = MatrixXd(est.sigma_hat);
    d["n"] = est.n;
    d["se"] = VectorXd(est.standard_errors());
    d["warnings"] = est.warnings;
    return d;
}

py::dict solution_to_dict(const AcquisitionSolution& sol) {
    py::dict d;
    std::vector<MatrixXd> pis;
    for (const auto& p : sol.pi_star) pis.push_back(p.raw());
    d["pi"] = pis;
    d["lambda"] = sol.lambda;
    d["nu"] = sol.nu;
    d["achieved_cost"] = sol.achieved_cost;
    d["objective"] = sol.objective;
    d["budget_binding"] = sol.budget_binding;
    d["warnings"] = sol.warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_gars, m) {
    m.doc() = "debiased ranking-score estimation from contextual preference data";

    py::register_exception<ParseError>(m, "GarsParseError");
    py::register_exception<ValidationError>(m, "GarsValidationError");
    py::register_exception<NumericError>(m, "GarsNumericError");
    py::register_exception<InfeasibleError>(m, "GarsInfeasibleError");

    m.def("default_weights", [](int C) {
        const auto s = CategoryScheme::defaults(C);
        return py::make_tuple(VectorXd(s.w1), VectorXd(s.w2));
    });
    m.def("normal_quantile", &normal_quantile);
    m.def("chisq_quantile", &chisq_quantile);

    // --- dataset ---------------------------------------------------------------
    py::class_<PreferenceDataset>(m, "PreferenceDataset")
        .def_property_readonly("n", &PreferenceDataset::n)
        .def_property_readonly("p", &PreferenceDataset::p)
        .def_property_readonly("K", &PreferenceDataset::K)
        .def_property_readonly("C", &PreferenceDataset::C)
        .def_property_readonly("contexts",
                               [](const PreferenceDataset& ds) { return ds.contexts; })
        .def_property_readonly("total_selected", &PreferenceDataset::total_selected)
        .def("pairs",
             [](const PreferenceDataset& ds, int i) {
                 std::vector<std::tuple<int, int, int>> out;
                 for (const auto& pl : ds.rows.at(i).pairs)
                     out.emplace_back(pl.j, pl.k, pl.label);
                 return out;
             })
        .def("has_judge", &PreferenceDataset::has_judge);

    m.def("load_dataset", &load_dataset);
    m.def("save_dataset", &save_dataset);

    // --- functionals -------------------------------------------------------------
    m.def(
        "evaluate",
        [](const std::string& kind, const py::array_t<double>& mu, double tau,
           const std::vector<std::vector<int>>& rankings, const py::object& judge) -> VectorXd {
            const MuTensor t = mu_from_array(mu);
            const auto k = kind_from_name(kind, tau, rankings);
            const CategoryScheme scheme = CategoryScheme::defaults(t.C());
            if (judge.is_none()) return evaluate(k, t, scheme);
            const MuTensor jt = mu_from_array(judge.cast<py::array_t<double>>());
            return evaluate(k, t, scheme, &jt);
        },
        py::arg("kind"), py::arg("mu"), py::arg("tau") = 0.1,
        py::arg("rankings") = std::vector<std::vector<int>>{}, py::arg("judge") = py::none());

    m.def(
        "symmetrized_scores",
        [](const py::array_t<double>& mu) {
            const MuTensor t = mu_from_array(mu);
            return symmetrized_scores(t, CategoryScheme::defaults(t.C()));
        },
        py::arg("mu"));

    m.def(
        "clamp_mu",
        [](const py::array_t<double>& mu, double eps) {
            return mu_to_array(clamp_mu(mu_from_array(mu), eps));
        },
        py::arg("mu"), py::arg("eps") = 1e-6);

    m.def(
        "edge_logits",
        [](const py::array_t<double>& mu) {
            const MuTensor t = mu_from_array(mu);
            return edge_logits(t, CategoryScheme::defaults(t.C()));
        },
        py::arg("mu"));

    m.def(
        "jacobian",
        [](const std::string& kind, const py::array_t<double>& mu, bool numeric, double h) {
            const MuTensor t = mu_from_array(mu);
            const auto k = kind_from_name(kind);
            const CategoryScheme scheme = CategoryScheme::defaults(t.C());
            const JacobianMap J =
                numeric ? jacobian_numeric(k, t, scheme, h) : jacobian_closed(k, t, scheme);
            py::dict out;
            for (const auto& [pair, blk] : J)
                out[py::make_tuple(pair.first, pair.second)] = MatrixXd(blk);
            return out;
        },
        py::arg("kind"), py::arg("mu"), py::arg("numeric") = false, py::arg("h") = 1e-5);

    // --- nuisances + estimation ----------------------------------------------------
    py::class_<CrossFittedNuisances>(m, "CrossFittedNuisances")
        .def_property_readonly("mu_hat",
                               [](const CrossFittedNuisances& n) {
                                   std::vector<py::array_t<double>> out;
                                   for (const auto& mu : n.mu_hat) out.push_back(mu_to_array(mu));
                                   return out;
                               })
        .def_property_readonly("pi_hat",
                               [](const CrossFittedNuisances& n) {
                                   std::vector<MatrixXd> out;
                                   for (const auto& pi : n.pi_hat) out.push_back(pi.raw());
                                   return out;
                               })
        .def_readonly("known_pi", &CrossFittedNuisances::known_pi);

    m.def(
        "crossfit",
        [](const PreferenceDataset& ds, int folds, std::uint64_t seed, double l2, int max_iter,
           double tol, bool expand, bool interactions, bool pair_intercepts, bool use_judge,
           int neg_per_pos, double pi_floor, double mu_floor, const std::string& external,
           const py::object& known_pi) {
            NuisanceOptions opts;
            if (!external.empty())
                opts.learner.kind = ExternalLearnerSpec{external};
            else
                opts.learner.kind = MultinomialLogitSpec{l2, max_iter, tol};
            opts.features.expand_features = expand;
            opts.features.item_interactions = interactions;
            opts.features.pair_intercepts = pair_intercepts;
            opts.use_judge = use_judge;
            opts.neg_per_pos = neg_per_pos;
            opts.pi_floor = pi_floor;
            opts.mu_floor = mu_floor;
            if (known_pi.is_none()) return crossfit(ds, folds, seed, opts);
            const auto rows = pi_rows_from_list(known_pi.cast<std::vector<MatrixXd>>());
            return crossfit(ds, folds, seed, opts, &rows);
        },
        py::arg("dataset"), py::arg("folds") = 5, py::arg("seed") = 0, py::arg("l2") = 1e-3,
        py::arg("max_iter") = 500, py::arg("tol") = 1e-8, py::arg("expand") = true,
        py::arg("interactions") = true, py::arg("pair_intercepts") = true,
        py::arg("use_judge") = false, py::arg("neg_per_pos") = 10, py::arg("pi_floor") = 0.01,
        py::arg("mu_floor") = 1e-6, py::arg("external") = std::string(),
        py::arg("known_pi") = py::none());

    m.def(
        "plugin_estimate",
        [](const std::string& kind, const std::vector<py::array_t<double>>& mu_rows, int C) {
            const auto rows = mu_rows_from_list(mu_rows);
            return estimate_to_dict(
                plugin_estimate(rows, kind_from_name(kind), CategoryScheme::defaults(C)));
        },
        py::arg("kind"), py::arg("mu_rows"), py::arg("C"));

    m.def(
        "debiased_estimate",
        [](const std::string& kind, const PreferenceDataset& ds,
           const CrossFittedNuisances& nuis) {
            return estimate_to_dict(debiased_estimate(ds, nuis, kind_from_name(kind), ds.scheme));
        },
        py::arg("kind"), py::arg("dataset"), py::arg("nuisances"));

    m.def(
        "bt_restricted_debiased",
        [](const PreferenceDataset& ds, const CrossFittedNuisances& nuis, bool allow_reduce) {
            return estimate_to_dict(bt_restricted_debiased(ds, nuis, ds.scheme, allow_reduce));
        },
        py::arg("dataset"), py::arg("nuisances"), py::arg("allow_reduce") = false);

    m.def(
        "simultaneous_cis",
        [](const VectorXd& theta, const MatrixXd& sigma, int n, const std::string& method,
           double alpha, int mc_draws, std::uint64_t seed) {
            GarsEstimate est;
            est.theta_hat = theta;
            est.sigma_hat = sigma;
            est.n = n;
            CiOptions opts;
            opts.method = method == "bonferroni" ? CiMethod::Bonferroni : CiMethod::GaussMax;
            opts.alpha = alpha;
            opts.mc_draws = mc_draws;
            opts.seed = seed;
            const CiSet ci = simultaneous_cis(est, opts);
            py::dict d;
            d["lower"] = VectorXd(ci.lower);
            d["upper"] = VectorXd(ci.upper);
            d["c_alpha"] = ci.c_alpha;
            d["warnings"] = ci.warnings;
            return d;
        },
        py::arg("theta"), py::arg("sigma"), py::arg("n"), py::arg("method") = "gaussmax",
        py::arg("alpha") = 0.05, py::arg("mc_draws") = 100000, py::arg("seed") = 0);

    m.def(
        "ellipsoid_test",
        [](const VectorXd& theta, const MatrixXd& sigma, int n, const VectorXd& theta0,
           double alpha) {
            GarsEstimate est;
            est.theta_hat = theta;
            est.sigma_hat = sigma;
            est.n = n;
            const EllipsoidResult res = ellipsoid_test(est, theta0, alpha);
            py::dict d;
            d["statistic"] = res.statistic;
            d["threshold"] = res.threshold;
            d["inside"] = res.inside;
            return d;
        },
        py::arg("theta"), py::arg("sigma"), py::arg("n"), py::arg("theta0"),
        py::arg("alpha") = 0.05);

    // --- acquisition ------------------------------------------------------------
    m.def(
        "pair_information",
        [](const std::string& kind, const py::array_t<double>& mu) {
            const MuTensor t = mu_from_array(mu);
            return pair_information(t, kind_from_name(kind), CategoryScheme::defaults(t.C()));
        },
        py::arg("kind"), py::arg("mu"));

    m.def(
        "a_optimal",
        [](const std::string& kind, const std::vector<py::array_t<double>>& mu_rows, double beta,
           double alpha_floor, const py::object& costs, int C) {
            const auto rows = mu_rows_from_list(mu_rows);
            const BudgetSpec budget = budget_from(rows.at(0).K(), beta, alpha_floor, costs,
                                                  AcquisitionMode::Independent);
            return solution_to_dict(
                a_optimal(rows, budget, kind_from_name(kind), CategoryScheme::defaults(C)));
        },
        py::arg("kind"), py::arg("mu_rows"), py::arg("beta"), py::arg("alpha_floor") = 0.0,
        py::arg("costs") = py::none(), py::arg("C") = 2);

    m.def(
        "water_filling_one_pair",
        [](const std::string& kind, const std::vector<py::array_t<double>>& mu_rows, double beta,
           double alpha_floor, const py::object& costs, int C) {
            const auto rows = mu_rows_from_list(mu_rows);
            const BudgetSpec budget = budget_from(rows.at(0).K(), beta, alpha_floor, costs,
                                                  AcquisitionMode::AtMostOne);
            return solution_to_dict(water_filling_one_pair(rows, budget, kind_from_name(kind),
                                                           CategoryScheme::defaults(C)));
        },
        py::arg("kind"), py::arg("mu_rows"), py::arg("beta"), py::arg("alpha_floor") = 0.0,
        py::arg("costs") = py::none(), py::arg("C") = 2);

    m.def(
        "d_optimal",
        [](const std::string& kind, const std::vector<py::array_t<double>>& mu_rows, double beta,
           double alpha_floor, const py::object& costs, int C, int max_iter, double tol) {
            const auto rows = mu_rows_from_list(mu_rows);
            const BudgetSpec budget = budget_from(rows.at(0).K(), beta, alpha_floor, costs,
                                                  AcquisitionMode::Independent);
            return solution_to_dict(d_optimal(rows, budget, kind_from_name(kind),
                                              CategoryScheme::defaults(C), max_iter, tol));
        },
        py::arg("kind"), py::arg("mu_rows"), py::arg("beta"), py::arg("alpha_floor") = 0.0,
        py::arg("costs") = py::none(), py::arg("C") = 2, py::arg("max_iter") = 50,
        py::arg("tol") = 1e-6);

    m.def(
        "efficiency_bound",
        [](const std::string& kind, const std::vector<py::array_t<double>>& mu_rows,
           const std::vector<MatrixXd>& pi_rows, int C) {
            const auto rows = mu_rows_from_list(mu_rows);
            return efficiency_bound(rows, pi_rows_from_list(pi_rows), kind_from_name(kind),
                                    CategoryScheme::defaults(C));
        },
        py::arg("kind"), py::arg("mu_rows"), py::arg("pi_rows"), py::arg("C") = 2);

    // --- simulators ---------------------------------------------------------------
    py::class_<Dgp>(m, "Dgp")
        .def(py::init([](const std::string& variant, int K, int p, std::uint64_t seed,
                         double gamma, double pi_min, double eps_mu) {
                 DgpSpec spec = variant == "btmis" ? DgpSpec::bt_misspec(K, p, gamma, seed)
                                                   : DgpSpec::ties(K, p, seed);
                 if (pi_min > 0) spec.pi_min = pi_min;
                 if (variant != "btmis" && eps_mu >= 0) spec.eps_mu = eps_mu;
                 return Dgp(spec);
             }),
             py::arg("variant"), py::arg("K") = 3, py::arg("p") = 2, py::arg("seed") = 0,
             py::arg("gamma") = 0.0, py::arg("pi_min") = -1.0, py::arg("eps_mu") = -1.0)
        .def("true_mu", [](const Dgp& d, const VectorXd& x) { return mu_to_array(d.true_mu(x)); })
        .def("true_pi", [](const Dgp& d, const VectorXd& x) { return d.true_pi(x).raw(); })
        .def("sample",
             [](const Dgp& d, int n, std::uint64_t seed) {
                 auto s = d.sample_dataset(n, seed);
                 std::vector<py::array_t<double>> mus;
                 std::vector<MatrixXd> pis;
                 for (const auto& mu : s.oracle_mu) mus.push_back(mu_to_array(mu));
                 for (const auto& pi : s.oracle_pi) pis.push_back(pi.raw());
                 return py::make_tuple(s.data, mus, pis);
             },
             py::arg("n"), py::arg("seed") = 0)
        .def("attach_judge",
             [](const Dgp& d, PreferenceDataset& ds, double sigma, std::uint64_t seed) {
                 d.attach_judge(&ds, sigma, seed);
             },
             py::arg("dataset"), py::arg("sigma"), py::arg("seed") = 0)
        .def("ground_truth",
             [](const Dgp& d, const std::string& kind, int mc_n, std::uint64_t seed) {
                 const GroundTruth gt =
                     ground_truth_scores(d, kind_from_name(kind), d.scheme(), mc_n, seed);
                 return py::make_tuple(VectorXd(gt.theta_star), gt.max_se);
             },
             py::arg("kind"), py::arg("mc_n") = 200000, py::arg("seed") = 0);
}
