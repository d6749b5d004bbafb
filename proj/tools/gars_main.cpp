#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gars/acquisition.hpp"
#include "gars/btmodel.hpp"
#include "gars/dataset.hpp"
#include "gars/functionals.hpp"
#include "gars/inference.hpp"
#include "gars/nuisance.hpp"
#include "gars/rng.hpp"
#include "gars/simbench.hpp"

using nlohmann::json;
using namespace gars;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInfeasible = 4;

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct RunConfig {
    std::string input, output, costs_path;
    std::string kind = "borda";
    std::string estimator = "debiased";
    std::string ci = "gaussmax";
    std::string mode = "independent";
    std::string dgp = "ties";
    std::string judge = "none";
    std::string sample_out, truth_out, csv_out, table_out;
    int folds = 5;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    int mc_draws = 100000;
    double budget = 1.0;
    double alpha_floor = 0.0;
    int n_ctx = 1000;
    int runs = 100;
    double gamma = 1.0;
    int threads = 1;
    double scale = 1.0;
    int items = 3;
    int dims = 2;
    double l2 = 1e-3;
    double pi_floor = 0.01;
    double mu_floor = 1e-6;
    int neg_per_pos = 10;
    bool expand = true;
    bool interactions = true;
    bool pair_intercepts = true;
    bool reduce_binary = false;
    double tau = 0.1;
    double epsilon_mix = 0.0;
    double judge_sigma = 0.0;
    std::string external_learner;
    std::string mu_source = "fit";  // fit | judge | oracle
};

json config_json(const RunConfig& c, const std::string& command) {
    return json{{"command", command},
                {"input", c.input},
                {"output", c.output},
                {"kind", c.kind},
                {"estimator", c.estimator},
                {"folds", c.folds},
                {"seed", c.seed},
                {"alpha", c.alpha},
                {"ci", c.ci},
                {"mc_draws", c.mc_draws},
                {"budget", c.budget},
                {"alpha_floor", c.alpha_floor},
                {"costs", c.costs_path},
                {"mode", c.mode},
                {"dgp", c.dgp},
                {"n_ctx", c.n_ctx},
                {"runs", c.runs},
                {"gamma", c.gamma},
                {"judge", c.judge},
                {"threads", c.threads},
                {"scale", c.scale},
                {"items", c.items},
                {"dims", c.dims},
                {"l2", c.l2},
                {"pi_floor", c.pi_floor},
                {"mu_floor", c.mu_floor},
                {"neg_per_pos", c.neg_per_pos},
                {"expand", c.expand},
                {"interactions", c.interactions},
                {"pair_intercepts", c.pair_intercepts},
                {"reduce_binary", c.reduce_binary},
                {"tau", c.tau},
                {"epsilon_mix", c.epsilon_mix},
                {"judge_sigma", c.judge_sigma},
                {"mu_source", c.mu_source},
                {"external_learner", c.external_learner}};
}

GarsKind parse_kind(const RunConfig& c, int K) {
    if (c.kind == "borda") return GarsKind::borda();
    if (c.kind == "bt") return GarsKind::bt();
    if (c.kind == "rc") return GarsKind::rank_centrality();
    if (c.kind == "softmax") return GarsKind::softmax();
    if (c.kind == "copeland") return GarsKind::soft_copeland(c.tau);
    if (c.kind == "kemeny") {
        // identity and reversed rankings by default
        std::vector<int> fwd(K), rev(K);
        std::iota(fwd.begin(), fwd.end(), 0);
        rev = fwd;
        std::reverse(rev.begin(), rev.end());
        return GarsKind::kemeny({fwd, rev});
    }
    if (c.kind == "miscal") return GarsKind::judge_miscalibration(MiscalLoss::Squared);
    throw ValidationError("unknown --kind '" + c.kind + "'");
}

NuisanceOptions nuisance_options(const RunConfig& c) {
    NuisanceOptions opts;
    if (!c.external_learner.empty())
        opts.learner.kind = ExternalLearnerSpec{c.external_learner};
    else
        opts.learner.kind = MultinomialLogitSpec{c.l2, 500, 1e-8};
    opts.features.expand_features = c.expand;
    opts.features.item_interactions = c.interactions;
    opts.features.pair_intercepts = c.pair_intercepts;
    opts.use_judge = c.judge == "features";
    opts.neg_per_pos = c.neg_per_pos;
    opts.pi_floor = c.pi_floor;
    opts.mu_floor = std::max(c.mu_floor, 1e-12);
    return opts;
}

CiOptions ci_options(const RunConfig& c) {
    CiOptions opts;
    opts.method = c.ci == "bonferroni" ? CiMethod::Bonferroni : CiMethod::GaussMax;
    opts.alpha = c.alpha;
    opts.mc_draws = c.mc_draws;
    opts.seed = derive_seed(c.seed, 0xc1);
    return opts;
}

DgpSpec dgp_spec(const RunConfig& c) {
    if (c.dgp == "ties") {
        DgpSpec s = DgpSpec::ties(c.items, c.dims, derive_seed(c.seed, 0xd6));
        s.pi_min = 0.05;
        return s;
    }
    DgpSpec s = DgpSpec::bt_misspec(c.items, c.dims, c.gamma, derive_seed(c.seed, 0xd6));
    return s;
}

void write_report(const json& rep, const std::string& path) {
    if (path.empty()) {
        std::cout << rep.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << rep.dump(2) << "\n";
}

json estimate_entry(const GarsEstimate& est, const CiSet& ci) {
    const int d = static_cast<int>(est.theta_hat.size());
    const VectorXd se = est.standard_errors();
    // rank by descending score, ties broken by item index
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (est.theta_hat(a) != est.theta_hat(b)) return est.theta_hat(a) > est.theta_hat(b);
        return a < b;
    });
    std::vector<int> rank(d);
    for (int r = 0; r < d; ++r) rank[order[r]] = r + 1;

    json items = json::array();
    for (int j = 0; j < d; ++j)
        items.push_back({{"item", j},
                         {"score", est.theta_hat(j)},
                         {"rank", rank[j]},
                         {"se", se(j)},
                         {"lower", ci.lower(j)},
                         {"upper", ci.upper(j)}});
    json out{{"items", std::move(items)}, {"c_alpha", ci.c_alpha}, {"n", est.n}};
    if (!est.warnings.empty() || !ci.warnings.empty()) {
        json w = json::array();
        for (const auto& s : est.warnings) w.push_back(s);
        for (const auto& s : ci.warnings) w.push_back(s);
        out["warnings"] = std::move(w);
    }
    return out;
}

void write_csv(const json& entry, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open csv output: " + path);
    out << "item,score,lower,upper\n";
    for (const auto& it : entry["items"])
        out << it["item"].get<int>() << "," << it["score"].get<double>() << ","
            << it["lower"].get<double>() << "," << it["upper"].get<double>() << "\n";
}

// ---------------------------------------------------------------------------

int cmd_estimate(const RunConfig& cfg) {
    PreferenceDataset ds = load_dataset(cfg.input);
    const GarsKind kind = parse_kind(cfg, ds.K());
    if (cfg.judge == "features" && !ds.judge_complete())
        throw ValidationError("--judge features requires judge vectors for all ordered pairs");
    if (cfg.estimator == "bt-restricted" && ds.C() != 2 && !cfg.reduce_binary)
        throw ValidationError(
            "bt-restricted requires binary categories; pass --reduce-binary to project "
            "through the scheme weights");

    const CrossFittedNuisances nuis =
        crossfit(ds, cfg.folds, derive_seed(cfg.seed, 0xcf), nuisance_options(cfg));
    const CiOptions ci_opts = ci_options(cfg);

    json rep{{"config", config_json(cfg, "estimate")}, {"timestamp", timestamp()}};
    const bool all = cfg.estimator == "all";
    if (all || cfg.estimator == "plugin") {
        const GarsEstimate est = plugin_estimate(nuis.mu_hat, kind, ds.scheme);
        rep["plugin"] = estimate_entry(est, simultaneous_cis(est, ci_opts));
    }
    if (all || cfg.estimator == "debiased") {
        const GarsEstimate est = debiased_estimate(ds, nuis, kind, ds.scheme);
        rep["debiased"] = estimate_entry(est, simultaneous_cis(est, ci_opts));
        if (!cfg.csv_out.empty()) write_csv(rep["debiased"], cfg.csv_out);
    }
    if ((all && (ds.C() == 2 || cfg.reduce_binary)) || cfg.estimator == "bt-restricted") {
        const GarsEstimate est = bt_restricted_debiased(ds, nuis, ds.scheme, cfg.reduce_binary);
        rep["bt_restricted"] = estimate_entry(est, simultaneous_cis(est, ci_opts));
    }
    write_report(rep, cfg.output);
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
    const Dgp dgp(dgp_spec(cfg));
    Dgp::Sample sample = dgp.sample_dataset(cfg.n_ctx, derive_seed(cfg.seed, 0x5a));
    if (cfg.judge == "features")
        dgp.attach_judge(&sample.data, cfg.judge_sigma, derive_seed(cfg.seed, 0x1d6e));
    if (cfg.output.empty()) throw ValidationError("simulate: --output is required");
    save_dataset(sample.data, cfg.output);
    if (!cfg.truth_out.empty()) {
        const GarsKind kind = parse_kind(cfg, dgp.K());
        const GroundTruth gt =
            ground_truth_scores(dgp, kind, dgp.scheme(), std::max(10000, cfg.n_ctx * 10),
                                derive_seed(cfg.seed, 0x6f));
        json rep{{"config", config_json(cfg, "simulate")},
                 {"theta_star", std::vector<double>(gt.theta_star.data(),
                                                    gt.theta_star.data() + gt.theta_star.size())},
                 {"mc_n", gt.mc_n},
                 {"mc_max_se", gt.max_se},
                 {"timestamp", timestamp()}};
        write_report(rep, cfg.truth_out);
    }
    std::cerr << "wrote " << sample.data.n() << " contexts (" << sample.data.total_selected()
              << " labeled pairs) to " << cfg.output << "\n";
    return kExitOk;
}

int cmd_coverage(const RunConfig& cfg) {
    const Dgp dgp(dgp_spec(cfg));
    CoverageConfig cc;
    cc.runs = std::max(10, static_cast<int>(cfg.runs / cfg.scale));
    cc.n_ctx = cfg.n_ctx;
    cc.folds = cfg.folds;
    cc.seed = cfg.seed;
    cc.threads = cfg.threads;
    cc.ci = ci_options(cfg);
    cc.nuisance = nuisance_options(cfg);
    cc.use_judge = cfg.judge == "features";
    cc.judge_sigma = cfg.judge_sigma;
    cc.mc_n = std::max(10000, static_cast<int>(200000 / cfg.scale));
    if (cfg.dgp == "ties") {
        // the ties simulator enforces this minimum category mass and pi floor
        if (cfg.mu_floor == 1e-6) cc.nuisance.mu_floor = 0.05;
        if (cfg.pi_floor == 0.01) cc.nuisance.pi_floor = 0.05;
    }

    std::vector<std::string> kinds;
    if (cfg.kind == "all")
        kinds = {"borda", "bt", "rc"};
    else
        kinds = {cfg.kind};

    json rep{{"config", config_json(cfg, "coverage")}, {"timestamp", timestamp()}};
    json per_kind = json::array();
    std::ostringstream table;
    table << "kind       estimator  error                coverage\n";
    for (const auto& ks : kinds) {
        RunConfig kc = cfg;
        kc.kind = ks;
        cc.kind = parse_kind(kc, dgp.K());
        const CoverageReport cr = coverage_experiment(dgp, cc);
        auto entry = [&](const EstimatorReport& er) {
            return json{{"estimator", er.name},       {"mean_error", er.mean_error},
                        {"error_ci", er.error_ci},    {"coverage", er.coverage},
                        {"coverage_ci", er.coverage_ci}, {"mean_width", er.mean_width}};
        };
        per_kind.push_back({{"kind", ks},
                            {"runs", cc.runs},
                            {"theta_star",
                             std::vector<double>(cr.theta_star.data(),
                                                 cr.theta_star.data() + cr.theta_star.size())},
                            {"plugin", entry(cr.plugin)},
                            {"debiased", entry(cr.debiased)}});
        for (const EstimatorReport* er : {&cr.plugin, &cr.debiased}) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%-10s %-10s %.3f +- %.3f      %.2f +- %.2f\n",
                          ks.c_str(), er->name.c_str(), er->mean_error, er->error_ci,
                          er->coverage, er->coverage_ci);
            table << buf;
        }
    }
    rep["results"] = std::move(per_kind);
    rep["seed"] = cfg.seed;
    write_report(rep, cfg.output);
    if (!cfg.table_out.empty()) {
        std::ofstream out(cfg.table_out);
        out << table.str();
    } else if (!cfg.output.empty()) {
        std::cerr << table.str();
    }
    return kExitOk;
}

int cmd_acquire(const RunConfig& cfg) {
    // mu source: simulator oracle, dataset-fit nuisances, or judge probabilities.
    std::vector<MuTensor> mu_rows;
    int K = cfg.items;
    CategoryScheme scheme = CategoryScheme::defaults(2);
    if (cfg.mu_source == "oracle" || cfg.input.empty()) {
        const Dgp dgp(dgp_spec(cfg));
        K = dgp.K();
        scheme = dgp.scheme();
        const MatrixXd X = dgp.sample_contexts(cfg.n_ctx, derive_seed(cfg.seed, 0x5a));
        mu_rows.reserve(cfg.n_ctx);
        for (int i = 0; i < cfg.n_ctx; ++i) mu_rows.push_back(dgp.true_mu(X.row(i).transpose()));
    } else {
        PreferenceDataset ds = load_dataset(cfg.input);
        K = ds.K();
        scheme = ds.scheme;
        if (cfg.mu_source == "judge") {
            if (!ds.judge_complete())
                throw ValidationError("acquire --mu-source judge needs complete judge tables");
            for (int i = 0; i < ds.n(); ++i) {
                MuTensor mu(K, ds.C());
                for (int j = 0; j < K; ++j)
                    for (int k = 0; k < K; ++k)
                        if (j != k)
                            mu.set_slice(j, k, ds.rows[i].judge->probs(j, k).transpose());
                mu_rows.push_back(clamp_mu(mu, 1e-6));
            }
        } else {
            const CrossFittedNuisances nuis =
                crossfit(ds, cfg.folds, derive_seed(cfg.seed, 0xcf), nuisance_options(cfg));
            mu_rows = nuis.mu_hat;
        }
    }

    const GarsKind kind = parse_kind(cfg, K);
    BudgetSpec budget;
    budget.beta = cfg.budget;
    budget.alpha_floor = cfg.alpha_floor;
    budget.costs = BudgetSpec::unit_costs(K);
    if (!cfg.costs_path.empty()) {
        std::ifstream in(cfg.costs_path);
        if (!in) throw ParseError("cannot open costs file: " + cfg.costs_path);
        json arr = json::parse(in);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) budget.costs(j, k) = arr.at(j).at(k).get<double>();
    }
    budget.mode =
        cfg.mode == "one-pair" ? AcquisitionMode::AtMostOne : AcquisitionMode::Independent;

    AcquisitionSolution sol;
    if (cfg.mode == "one-pair")
        sol = water_filling_one_pair(mu_rows, budget, kind, scheme);
    else if (cfg.mode == "d-optimal")
        sol = d_optimal(mu_rows, budget, kind, scheme);
    else
        sol = a_optimal(mu_rows, budget, kind, scheme);

    if (cfg.output.empty()) throw ValidationError("acquire: --output is required");
    save_policy(sol, budget.mode, cfg.output);

    json rep{{"config", config_json(cfg, "acquire")},
             {"lambda", sol.lambda},
             {"achieved_cost", sol.achieved_cost},
             {"objective", sol.objective},
             {"budget_binding", sol.budget_binding},
             {"contexts", static_cast<int>(sol.pi_star.size())},
             {"timestamp", timestamp()}};
    if (!sol.warnings.empty()) rep["warnings"] = sol.warnings;
    std::cerr << rep.dump(2) << "\n";

    if (!cfg.sample_out.empty()) {
        const SelectionDraw draw =
            sample_selection(sol, budget, derive_seed(cfg.seed, 0x5e), cfg.epsilon_mix);
        std::ofstream out(cfg.sample_out);
        if (!out) throw ParseError("cannot open sample output: " + cfg.sample_out);
        for (std::size_t i = 0; i < draw.selections.size(); ++i) {
            json row{{"type", "selection"}, {"row", i}};
            json pairs = json::array();
            for (const auto& [j, k] : draw.selections[i])
                pairs.push_back({{"j", j}, {"k", k}});
            row["pairs"] = std::move(pairs);
            out << row.dump() << "\n";
        }
    }
    return kExitOk;
}

int cmd_check_jacobians(const RunConfig& cfg) {
    const std::vector<int> Ks = {2, 3, 5};
    const std::vector<int> Cs = {2, 3, 4};
    const int per_cell = std::max(1, static_cast<int>(100 / cfg.scale));
    const double tol = 1e-6;

    json rep{{"config", config_json(cfg, "check-jacobians")}, {"timestamp", timestamp()}};
    json cells = json::array();
    double worst = 0.0;
    Rng rng(derive_seed(cfg.seed, 0x1ac));
    for (int K : Ks)
        for (int C : Cs) {
            const CategoryScheme scheme = CategoryScheme::defaults(C);
            double cell_max[3] = {0.0, 0.0, 0.0};
            const GarsKind kinds[3] = {GarsKind::borda(), GarsKind::bt(),
                                       GarsKind::rank_centrality()};
            for (int rep_i = 0; rep_i < per_cell; ++rep_i) {
                MuTensor mu(K, C);
                for (int j = 0; j < K; ++j)
                    for (int k = 0; k < K; ++k) {
                        if (j == k) continue;
                        VectorXd v(C);
                        double s = 0.0;
                        for (int c = 0; c < C; ++c) {
                            v(c) = rng.uniform(0.1, 0.9);
                            s += v(c);
                        }
                        mu.set_slice(j, k, v / s);
                    }
                for (int ki = 0; ki < 3; ++ki) {
                    const JacobianMap closed = jacobian_closed(kinds[ki], mu, scheme);
                    const JacobianMap numeric = jacobian_numeric(kinds[ki], mu, scheme, 1e-5);
                    for (const auto& [pair, Jc] : closed) {
                        const double dev = (Jc - numeric.at(pair)).cwiseAbs().maxCoeff();
                        cell_max[ki] = std::max(cell_max[ki], dev);
                    }
                }
            }
            for (int ki = 0; ki < 3; ++ki) worst = std::max(worst, cell_max[ki]);
            cells.push_back({{"K", K},
                             {"C", C},
                             {"samples", per_cell},
                             {"max_dev_borda", cell_max[0]},
                             {"max_dev_bt", cell_max[1]},
                             {"max_dev_rc", cell_max[2]}});
        }
    rep["cells"] = std::move(cells);
    rep["max_deviation"] = worst;
    rep["tolerance"] = tol;
    rep["pass"] = worst < tol;
    write_report(rep, cfg.output);
    return worst < tol ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generalized average ranking scores: estimation, inference and acquisition"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input);
        sub->add_option("--output", cfg.output);
        sub->add_option("--kind", cfg.kind)
            ->check(CLI::IsMember(
                {"borda", "bt", "rc", "softmax", "copeland", "kemeny", "miscal", "all"}));
        sub->add_option("--estimator", cfg.estimator)
            ->check(CLI::IsMember({"plugin", "debiased", "bt-restricted", "all"}));
        sub->add_option("--folds", cfg.folds)->check(CLI::PositiveNumber);
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--alpha", cfg.alpha);
        sub->add_option("--ci", cfg.ci)->check(CLI::IsMember({"gaussmax", "bonferroni"}));
        sub->add_option("--mc-draws", cfg.mc_draws);
        sub->add_option("--budget", cfg.budget);
        sub->add_option("--alpha-floor", cfg.alpha_floor);
        sub->add_option("--costs", cfg.costs_path);
        sub->add_option("--mode", cfg.mode)
            ->check(CLI::IsMember({"independent", "one-pair", "d-optimal"}));
        sub->add_option("--dgp", cfg.dgp)->check(CLI::IsMember({"ties", "btmis"}));
        sub->add_option("--n-ctx", cfg.n_ctx)->check(CLI::PositiveNumber);
        sub->add_option("--runs", cfg.runs)->check(CLI::PositiveNumber);
        sub->add_option("--gamma", cfg.gamma);
        sub->add_option("--judge", cfg.judge)->check(CLI::IsMember({"none", "features"}));
        sub->add_option("--threads", cfg.threads)->check(CLI::PositiveNumber);
        sub->add_option("--scale", cfg.scale)->check(CLI::PositiveNumber);
        sub->add_option("--items", cfg.items)->check(CLI::PositiveNumber);
        sub->add_option("--dims", cfg.dims)->check(CLI::PositiveNumber);
        sub->add_option("--l2", cfg.l2);
        sub->add_option("--pi-floor", cfg.pi_floor);
        sub->add_option("--mu-floor", cfg.mu_floor);
        sub->add_option("--neg-per-pos", cfg.neg_per_pos);
        sub->add_flag("--expand,!--no-expand", cfg.expand);
        sub->add_flag("--interactions,!--no-interactions", cfg.interactions);
        sub->add_flag("--pair-intercepts,!--no-pair-intercepts", cfg.pair_intercepts);
        sub->add_flag("--reduce-binary", cfg.reduce_binary);
        sub->add_option("--tau", cfg.tau);
        sub->add_option("--epsilon-mix", cfg.epsilon_mix);
        sub->add_option("--judge-sigma", cfg.judge_sigma);
        sub->add_option("--external-learner", cfg.external_learner);
        sub->add_option("--mu-source", cfg.mu_source)
            ->check(CLI::IsMember({"fit", "judge", "oracle"}));
        sub->add_option("--csv", cfg.csv_out);
        sub->add_option("--table", cfg.table_out);
        sub->add_option("--sample", cfg.sample_out);
        sub->add_option("--truth", cfg.truth_out);
    };

    auto* est = app.add_subcommand("estimate", "rank items from a preference dataset");
    auto* sim = app.add_subcommand("simulate", "generate a synthetic preference dataset");
    auto* cov = app.add_subcommand("coverage", "coverage/error experiment on synthetic data");
    auto* acq = app.add_subcommand("acquire", "solve for an optimal labeling policy");
    auto* chk =
        app.add_subcommand("check-jacobians", "closed-form vs finite-difference jacobian audit");
    for (CLI::App* sub : {est, sim, cov, acq, chk}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (est->parsed()) return cmd_estimate(cfg);
        if (sim->parsed()) return cmd_simulate(cfg);
        if (cov->parsed()) return cmd_coverage(cfg);
        if (acq->parsed()) return cmd_acquire(cfg);
        if (chk->parsed()) return cmd_check_jacobians(cfg);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
