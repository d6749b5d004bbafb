#include "gars/acquisition.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "gars/rng.hpp"

namespace gars {

MatrixXd BudgetSpec::unit_costs(int K) {
    MatrixXd c = MatrixXd::Ones(K, K);
    c.diagonal().setZero();
    return c;
}

void BudgetSpec::validate(int K) const {
    if (!(beta > 0.0)) throw ValidationError("BudgetSpec: beta must be > 0");
    if (alpha_floor < 0.0 || alpha_floor > 1.0)
        throw ValidationError("BudgetSpec: alpha_floor must be in [0,1]");
    if (costs.rows() != K || costs.cols() != K)
        throw ValidationError("BudgetSpec: costs must be K x K");
    double off_sum = 0.0, upper_sum = 0.0;
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) {
                if (costs(j, k) != 0.0)
                    throw ValidationError("BudgetSpec: cost diagonal must be zero");
                continue;
            }
            if (!(costs(j, k) > 0.0)) throw ValidationError("BudgetSpec: costs must be positive");
            off_sum += costs(j, k);
            if (j < k) upper_sum += costs(j, k);
        }
    if (mode == AcquisitionMode::Independent) {
        if (alpha_floor * off_sum > beta + 1e-12)
            throw InfeasibleError("BudgetSpec: infeasible, alpha * sum(c) = " +
                                  std::to_string(alpha_floor * off_sum) + " > beta = " +
                                  std::to_string(beta));
    } else {
        const double pairs = K * (K - 1) / 2.0;
        if (alpha_floor * pairs > 1.0 + 1e-12)
            throw InfeasibleError("BudgetSpec: infeasible, alpha * #pairs = " +
                                  std::to_string(alpha_floor * pairs) + " > 1");
        if (alpha_floor * upper_sum > beta + 1e-12)
            throw InfeasibleError("BudgetSpec: infeasible, alpha * sum_{j<k}(c) = " +
                                  std::to_string(alpha_floor * upper_sum) + " > beta = " +
                                  std::to_string(beta));
    }
}

MatrixXd pair_information(const MuTensor& mu, const GarsKind& kind,
                          const CategoryScheme& scheme, const MuTensor* judge) {
    const int K = mu.K();
    const PairJacobians jac(kind, mu, scheme, judge);
    MatrixXd W = MatrixXd::Zero(K, K);
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
            if (j == k) continue;
            const MatrixXd J = jac.block(j, k);
            const VectorXd m = mu.slice(j, k).transpose();
            const MatrixXd V = MatrixXd(m.asDiagonal()) - m * m.transpose();
            W(j, k) = std::max(0.0, (J * V * J.transpose()).trace());
        }
    return W;
}

namespace {

double clip_rule(double W, double denom, double alpha) {
    if (W <= 0.0) return alpha;
    if (denom <= 0.0) return 1.0;
    return std::min(1.0, std::max(alpha, std::sqrt(W / denom)));
}

std::vector<MatrixXd> information_rows(const std::vector<MuTensor>& mu_rows,
                                       const GarsKind& kind, const CategoryScheme& scheme) {
    std::vector<MatrixXd> W;
    W.reserve(mu_rows.size());
    for (const auto& mu : mu_rows) W.push_back(pair_information(mu, kind, scheme));
    return W;
}

}  // namespace

AcquisitionSolution a_optimal(const std::vector<MuTensor>& mu_rows, const BudgetSpec& budget,
                              const GarsKind& kind, const CategoryScheme& scheme, double tol) {
    if (budget.mode != AcquisitionMode::Independent)
        throw ValidationError("a_optimal: mode must be independent");
    if (mu_rows.empty()) throw ValidationError("a_optimal: no contexts");
    const int K = mu_rows[0].K();
    budget.validate(K);
    const int n = static_cast<int>(mu_rows.size());
    const std::vector<MatrixXd> W = information_rows(mu_rows, kind, scheme);

    AcquisitionSolution sol;
    double total_cost = 0.0;
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) total_cost += budget.costs(j, k);

    auto policy_at = [&](double lambda) {
        std::vector<PiMatrix> rows;
        rows.reserve(n);
        for (int i = 0; i < n; ++i) {
            PiMatrix pi(K);
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    if (j != k)
                        pi(j, k) = clip_rule(W[i](j, k), lambda * budget.costs(j, k),
                                             budget.alpha_floor);
            rows.push_back(std::move(pi));
        }
        return rows;
    };
    auto mean_cost = [&](const std::vector<PiMatrix>& rows) {
        double c = 0.0;
        for (const auto& pi : rows)
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    if (j != k) c += budget.costs(j, k) * pi(j, k);
        return c / n;
    };

    if (budget.beta >= total_cost) {
        // Slack budget: label everything.
        sol.lambda = 0.0;
        sol.budget_binding = false;
        sol.pi_star.assign(n, PiMatrix((MatrixXd::Ones(K, K) - MatrixXd::Identity(K, K)).eval()));
        sol.achieved_cost = total_cost;
    } else {
        double lo = 1e-12, hi = 1.0;
        const std::vector<PiMatrix> at_lo = policy_at(lo);
        if (mean_cost(at_lo) <= budget.beta) {
            // W = 0 pairs rest at the floor; budget already slack at lambda -> 0.
            sol.lambda = 0.0;
            sol.budget_binding = false;
            sol.pi_star = at_lo;
            sol.achieved_cost = mean_cost(at_lo);
        } else {
            int doublings = 0;
            while (mean_cost(policy_at(hi)) > budget.beta && doublings++ < 200) hi *= 2.0;
            double lambda = hi;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double c = mean_cost(policy_at(mid));
                lambda = mid;
                if (c > budget.beta)
                    lo = mid;
                else
                    hi = mid;
                if (std::fabs(c - budget.beta) <= tol * budget.beta) break;
            }
            sol.lambda = lambda;
            sol.pi_star = policy_at(sol.lambda);
            sol.achieved_cost = mean_cost(sol.pi_star);
            sol.budget_binding = true;
            if (std::fabs(sol.achieved_cost - budget.beta) > tol * budget.beta)
                sol.warnings.push_back("budget gap " +
                                       std::to_string(budget.beta - sol.achieved_cost) +
                                       " (clipping prevents exact equality)");
        }
    }
    double obj = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k)
                if (j != k && W[i](j, k) > 0.0) obj += W[i](j, k) / sol.pi_star[i](j, k);
    sol.objective = obj / n;
    return sol;
}

AcquisitionSolution water_filling_one_pair(const std::vector<MuTensor>& mu_rows,
                                           const BudgetSpec& budget, const GarsKind& kind,
                                           const CategoryScheme& scheme, double tol) {
    if (budget.mode != AcquisitionMode::AtMostOne)
        throw ValidationError("water_filling_one_pair: mode must be at_most_one");
    if (mu_rows.empty()) throw ValidationError("water_filling_one_pair: no contexts");
    const int K = mu_rows[0].K();
    budget.validate(K);
    const int n = static_cast<int>(mu_rows.size());
    const double alpha = budget.alpha_floor;
    const std::vector<MatrixXd> W = information_rows(mu_rows, kind, scheme);

    // g_i(nu) at fixed lambda; decreasing in nu.
    auto g_of = [&](int i, double lambda, double nu) {
        double s = 0.0;
        for (int a = 0; a < K; ++a)
            for (int b = a + 1; b < K; ++b)
                s += clip_rule(W[i](a, b), lambda * budget.costs(a, b) + nu, alpha);
        return s;
    };
    auto solve_context = [&](int i, double lambda, PiMatrix* pi, double* nu_out) {
        double nu = 0.0;
        if (g_of(i, lambda, 0.0) > 1.0) {
            double lo = 0.0, hi = 1.0;
            int doublings = 0;
            while (g_of(i, lambda, hi) > 1.0 && doublings++ < 200) hi *= 2.0;
            for (int it = 0; it < 200; ++it) {
                nu = 0.5 * (lo + hi);
                if (g_of(i, lambda, nu) > 1.0)
                    lo = nu;
                else
                    hi = nu;
            }
            nu = 0.5 * (lo + hi);
        }
        for (int a = 0; a < K; ++a)
            for (int b = a + 1; b < K; ++b)
                (*pi)(a, b) =
                    clip_rule(W[i](a, b), lambda * budget.costs(a, b) + nu, alpha);
        *nu_out = nu;
    };
    auto mean_cost = [&](double lambda, std::vector<PiMatrix>* rows, std::vector<double>* nus) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) {
            PiMatrix pi(K);
            double nu;
            solve_context(i, lambda, &pi, &nu);
            for (int a = 0; a < K; ++a)
                for (int b = a + 1; b < K; ++b) c += budget.costs(a, b) * pi(a, b);
            if (rows) (*rows)[i] = pi;
            if (nus) (*nus)[i] = nu;
        }
        return c / n;
    };

    AcquisitionSolution sol;
    sol.pi_star.assign(n, PiMatrix(K));
    sol.nu.assign(n, 0.0);

    const double cost_at_zero = mean_cost(0.0, &sol.pi_star, &sol.nu);
    if (cost_at_zero <= budget.beta) {
        sol.lambda = 0.0;
        sol.budget_binding = false;
        sol.achieved_cost = cost_at_zero;
    } else {
        double lo = 1e-12, hi = 1.0;
        int doublings = 0;
        while (mean_cost(hi, nullptr, nullptr) > budget.beta && doublings++ < 200) hi *= 2.0;
        double lambda = hi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double c = mean_cost(mid, nullptr, nullptr);
            lambda = mid;
            if (c > budget.beta)
                lo = mid;
            else
                hi = mid;
            if (std::fabs(c - budget.beta) <= tol * budget.beta) break;
        }
        sol.lambda = lambda;
        sol.achieved_cost = mean_cost(sol.lambda, &sol.pi_star, &sol.nu);
        sol.budget_binding = true;
        if (std::fabs(sol.achieved_cost - budget.beta) > tol * budget.beta)
            sol.warnings.push_back("budget gap " +
                                   std::to_string(budget.beta - sol.achieved_cost));
    }
    double obj = 0.0;
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < K; ++a)
            for (int b = a + 1; b < K; ++b)
                if (W[i](a, b) > 0.0) obj += W[i](a, b) / sol.pi_star[i](a, b);
    sol.objective = obj / n;
    return sol;
}

MatrixXd efficiency_bound(const std::vector<MuTensor>& mu_rows,
                          const std::vector<PiMatrix>& pi_rows, const GarsKind& kind,
                          const CategoryScheme& scheme) {
    if (mu_rows.empty() || mu_rows.size() != pi_rows.size())
        throw ValidationError("efficiency_bound: context mismatch");
    const int n = static_cast<int>(mu_rows.size());
    const int K = mu_rows[0].K();
    const int d = kind.dim(K);

    MatrixXd F(n, d);
    MatrixXd corr = MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        F.row(i) = evaluate(kind, mu_rows[i], scheme).transpose();
        const PairJacobians jac(kind, mu_rows[i], scheme);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                if (j == k) continue;
                const double pi = pi_rows[i](j, k);
                if (!(pi > 0.0))
                    throw NumericError("efficiency_bound: zero propensity at pair (" +
                                       std::to_string(j) + "," + std::to_string(k) + ")");
                const MatrixXd J = jac.block(j, k);
                const VectorXd m = mu_rows[i].slice(j, k).transpose();
                const MatrixXd V = MatrixXd(m.asDiagonal()) - m * m.transpose();
                corr += (J * V * J.transpose()) / pi;
            }
    }
    const Eigen::RowVectorXd mean = F.colwise().mean();
    const MatrixXd centered = F.rowwise() - mean;
    return centered.transpose() * centered / n + corr / n;
}

AcquisitionSolution d_optimal(const std::vector<MuTensor>& mu_rows, const BudgetSpec& budget,
                              const GarsKind& kind, const CategoryScheme& scheme, int max_iter,
                              double tol) {
    if (budget.mode != AcquisitionMode::Independent)
        throw ValidationError("d_optimal: mode must be independent");
    if (mu_rows.empty()) throw ValidationError("d_optimal: no contexts");
    const int K = mu_rows[0].K();
    budget.validate(K);
    const int n = static_cast<int>(mu_rows.size());
    const int d = kind.dim(K);

    // Per-context, per-pair information matrices M_jk = J V J'.
    std::vector<std::vector<MatrixXd>> M(n);
    MatrixXd covF;
    {
        MatrixXd F(n, d);
        for (int i = 0; i < n; ++i) {
            F.row(i) = evaluate(kind, mu_rows[i], scheme).transpose();
            const PairJacobians jac(kind, mu_rows[i], scheme);
            M[i].reserve(K * K);
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k) {
                    if (j == k) {
                        M[i].push_back(MatrixXd::Zero(d, d));
                        continue;
                    }
                    const MatrixXd J = jac.block(j, k);
                    const VectorXd m = mu_rows[i].slice(j, k).transpose();
                    const MatrixXd V = MatrixXd(m.asDiagonal()) - m * m.transpose();
                    M[i].push_back(J * V * J.transpose());
                }
        }
        const Eigen::RowVectorXd mean = F.colwise().mean();
        const MatrixXd centered = F.rowwise() - mean;
        covF = centered.transpose() * centered / n;
    }

    auto sigma_of = [&](const std::vector<PiMatrix>& pi_rows) {
        MatrixXd corr = MatrixXd::Zero(d, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    if (j != k) corr += M[i][j * K + k] / pi_rows[i](j, k);
        return MatrixXd(covF + corr / n);
    };

    AcquisitionSolution sol = a_optimal(mu_rows, budget, kind, scheme, tol);
    sol.warnings.clear();

    double total_cost = 0.0;
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) total_cost += budget.costs(j, k);

    double prev_logdet = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        MatrixXd Sigma = sigma_of(sol.pi_star);
        Sigma.diagonal().array() += 1e-10;
        Eigen::LDLT<MatrixXd> ldlt(Sigma);
        if (ldlt.info() != Eigen::Success)
            throw NumericError("d_optimal: singular Sigma(pi)");
        const double logdet = ldlt.vectorD().array().max(1e-300).log().sum();
        if (logdet > prev_logdet + 1e-9)
            sol.warnings.push_back("log det increased at iteration " + std::to_string(it));
        prev_logdet = std::min(prev_logdet, logdet);

        // Update weights u_jk = tr(Sigma^{-1} M_jk).
        std::vector<MatrixXd> U(n, MatrixXd::Zero(K, K));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    if (j != k)
                        U[i](j, k) =
                            std::max(0.0, ldlt.solve(M[i][j * K + k]).trace());

        auto policy_at = [&](double lambda) {
            std::vector<PiMatrix> rows(n, PiMatrix(K));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < K; ++j)
                    for (int k = 0; k < K; ++k)
                        if (j != k)
                            rows[i](j, k) = clip_rule(U[i](j, k),
                                                      lambda * budget.costs(j, k),
                                                      budget.alpha_floor);
            return rows;
        };
        auto mean_cost = [&](const std::vector<PiMatrix>& rows) {
            double c = 0.0;
            for (const auto& pi : rows)
                for (int j = 0; j < K; ++j)
                    for (int k = 0; k < K; ++k)
                        if (j != k) c += budget.costs(j, k) * pi(j, k);
            return c / n;
        };

        std::vector<PiMatrix> next;
        double lambda = 0.0;
        if (budget.beta >= total_cost) {
            next.assign(n,
                        PiMatrix((MatrixXd::Ones(K, K) - MatrixXd::Identity(K, K)).eval()));
        } else {
            double lo = 1e-12, hi = 1.0;
            if (mean_cost(policy_at(lo)) <= budget.beta) {
                next = policy_at(lo);
            } else {
                int doublings = 0;
                while (mean_cost(policy_at(hi)) > budget.beta && doublings++ < 200) hi *= 2.0;
                for (int bit = 0; bit < 200; ++bit) {
                    const double mid = 0.5 * (lo + hi);
                    if (mean_cost(policy_at(mid)) > budget.beta)
                        lo = mid;
                    else
                        hi = mid;
                }
                lambda = 0.5 * (lo + hi);
                next = policy_at(lambda);
            }
        }

        double delta = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    if (j != k)
                        delta = std::max(delta,
                                         std::fabs(next[i](j, k) - sol.pi_star[i](j, k)));
        sol.pi_star = std::move(next);
        sol.lambda = lambda;
        if (delta < tol) break;
        if (it == max_iter - 1)
            sol.warnings.push_back("fixed point not converged after " +
                                   std::to_string(max_iter) + " iterations, residual " +
                                   std::to_string(delta));
    }

    double cost = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k)
                if (j != k) cost += budget.costs(j, k) * sol.pi_star[i](j, k);
    sol.achieved_cost = cost / n;
    sol.budget_binding = sol.achieved_cost >= budget.beta * (1 - 1e-6);
    MatrixXd Sigma = sigma_of(sol.pi_star);
    Sigma.diagonal().array() += 1e-10;
    Eigen::LDLT<MatrixXd> ldlt(Sigma);
    sol.objective = ldlt.vectorD().array().max(1e-300).log().sum();
    return sol;
}

SelectionDraw sample_selection(const AcquisitionSolution& sol, const BudgetSpec& budget,
                               std::uint64_t seed, double epsilon) {
    const int n = static_cast<int>(sol.pi_star.size());
    if (n == 0) throw ValidationError("sample_selection: empty solution");
    const int K = sol.pi_star[0].K();
    if (epsilon < 0.0 || epsilon > 1.0)
        throw ValidationError("sample_selection: epsilon must be in [0,1]");

    // Budget-matched uniform mixing rate.
    double total_cost = 0.0, upper_cost = 0.0;
    for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
            if (j != k) {
                total_cost += budget.costs(j, k);
                if (j < k) upper_cost += budget.costs(j, k);
            }
    const bool one_pair = budget.mode == AcquisitionMode::AtMostOne;
    const int npairs = one_pair ? K * (K - 1) / 2 : K * (K - 1);
    double uniform =
        one_pair ? std::min({1.0 / npairs, budget.beta / upper_cost})
                 : std::min(1.0, budget.beta / total_cost);
    uniform = std::max(uniform, budget.alpha_floor);

    SelectionDraw draw;
    draw.selections.resize(n);
    Rng rng(derive_seed(seed, 0x5e1));
    for (int i = 0; i < n; ++i) {
        if (!one_pair) {
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k) {
                    if (j == k) continue;
                    const double p =
                        (1.0 - epsilon) * sol.pi_star[i](j, k) + epsilon * uniform;
                    if (p < -1e-9 || p > 1.0 + 1e-9)
                        throw NumericError("sample_selection: probability out of range");
                    if (rng.uniform() < p) draw.selections[i].push_back({j, k});
                }
        } else {
            std::vector<double> w;
            std::vector<std::pair<int, int>> idx;
            double s = 0.0;
            for (int a = 0; a < K; ++a)
                for (int b = a + 1; b < K; ++b) {
                    const double p =
                        (1.0 - epsilon) * sol.pi_star[i](a, b) + epsilon * uniform;
                    w.push_back(p);
                    idx.push_back({a, b});
                    s += p;
                }
            if (s > 1.0 + 1e-9)
                throw NumericError("sample_selection: pair probabilities sum above one");
            w.push_back(std::max(0.0, 1.0 - s));  // no-label bucket
            const int pick = rng.categorical(w.data(), static_cast<int>(w.size()));
            if (pick < static_cast<int>(idx.size()))
                draw.selections[i].push_back(idx[pick]);
        }
    }
    return draw;
}

void save_policy(const AcquisitionSolution& sol, AcquisitionMode mode, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open for writing: " + path);
    const int K = sol.pi_star.empty() ? 0 : sol.pi_star[0].K();
    nlohmann::json meta{{"type", "meta"},
                        {"K", K},
                        {"mode", mode == AcquisitionMode::Independent ? "independent" : "one_pair"},
                        {"lambda", sol.lambda},
                        {"achieved_cost", sol.achieved_cost}};
    out << meta.dump() << "\n";
    for (std::size_t i = 0; i < sol.pi_star.size(); ++i) {
        nlohmann::json row{{"type", "row"}};
        std::vector<std::vector<double>> pi(K, std::vector<double>(K, 0.0));
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) pi[j][k] = sol.pi_star[i](j, k);
        row["pi"] = std::move(pi);
        if (!sol.nu.empty()) row["nu"] = sol.nu[i];
        out << row.dump() << "\n";
    }
}

AcquisitionSolution load_policy(const std::string& path, AcquisitionMode* mode) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open policy file: " + path);
    AcquisitionSolution sol;
    std::string line;
    int line_no = 0, K = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("policy line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string type = obj.value("type", "");
        if (type == "meta") {
            K = obj.value("K", 0);
            if (K < 2) throw ParseError("policy meta: bad K");
            sol.lambda = obj.value("lambda", 0.0);
            if (mode)
                *mode = obj.value("mode", "independent") == std::string("one_pair")
                            ? AcquisitionMode::AtMostOne
                            : AcquisitionMode::Independent;
            have_meta = true;
        } else if (type == "row") {
            if (!have_meta) throw ParseError("policy row before meta");
            PiMatrix pi(K);
            const auto& arr = obj.at("pi");
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k) pi(j, k) = arr.at(j).at(k).get<double>();
            sol.pi_star.push_back(std::move(pi));
            if (obj.contains("nu")) sol.nu.push_back(obj["nu"].get<double>());
        }
    }
    if (!have_meta) throw ParseError("policy has no meta line");
    return sol;
}

}  // namespace gars
