#ifndef GARS_SIMBENCH_HPP_
#define GARS_SIMBENCH_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gars/acquisition.hpp"
#include "gars/dataset.hpp"
#include "gars/inference.hpp"
#include "gars/nuisance.hpp"
#include "gars/types.hpp"

namespace gars {

enum class DgpVariant { NonlinearTie, BtMisspec };

struct DgpSpec {
    DgpVariant variant = DgpVariant::NonlinearTie;
    int K = 3;
    int p = 2;
    std::uint64_t seed = 0;

    // utilities
    double sigma_l = 1.0;
    double sigma_q = 0.6;
    double s_sin = 0.6;
    double T = 1.0;
    double beta_pos = 0.0;
    // ties outcome model
    double tau0 = 0.2;
    double tau1 = 1.2;
    double tau_c = 0.4;
    double eps_mu = 0.05;
    // BT misspecification
    double gamma = 0.0;
    // selection model
    double pi_p = 0.3;
    double lambda_pi = 0.1;
    double kappa_pi = 0.8;
    double eta_pi = 0.4;
    double pi_min = 0.01;
    double pi_max = 0.5;

    int C() const { return variant == DgpVariant::NonlinearTie ? 3 : 2; }
    int q() const { return std::min(2, p); }

    static DgpSpec ties(int K, int p, std::uint64_t seed);
    static DgpSpec bt_misspec(int K, int p, double gamma, std::uint64_t seed);
};

/// Synthetic data-generating process; item parameters are drawn once from the
/// spec seed, contexts/selections/labels from per-call seeds.
class Dgp {
public:
    explicit Dgp(const DgpSpec& spec);

    const DgpSpec& spec() const { return spec_; }
    int K() const { return spec_.K; }
    int C() const { return spec_.C(); }
    CategoryScheme scheme() const { return CategoryScheme::defaults(C()); }

    VectorXd utilities(const VectorXd& x) const;
    MatrixXd score_gaps(const VectorXd& x) const;  // d_jk
    MuTensor true_mu(const VectorXd& x) const;
    PiMatrix true_pi(const VectorXd& x) const;

    /// Uniform context. Row streams are derived from (seed, row), so the first m
    /// rows of a sample are identical for any larger sample with the same seed.
    struct Sample {
        PreferenceDataset data;
        std::vector<MuTensor> oracle_mu;
        std::vector<PiMatrix> oracle_pi;
    };
    Sample sample_dataset(int n_ctx, std::uint64_t seed) const;

    /// Labels for externally supplied selections (policy experiments).
    Sample sample_with_policy(const MatrixXd& contexts,
                              const std::vector<PiMatrix>& policy,
                              std::uint64_t seed) const;

    MatrixXd sample_contexts(int n_ctx, std::uint64_t seed) const;

    /// Judge tables: softmax(log mu + sigma * eps) with eps ~ N(0,1) drawn from
    /// `seed`; with sigma = 0 the judge equals mu exactly.
    void attach_judge(PreferenceDataset* ds, double sigma, std::uint64_t seed) const;

private:
    DgpSpec spec_;
    MatrixXd W_;    // K x p
    VectorXd b_;    // K
    MatrixXd Wq_;   // K x q
    VectorXd phi_;  // K
    VectorXd bpi_;  // K
    MatrixXd cycle_;
};

struct GroundTruth {
    VectorXd theta_star;
    int mc_n = 0;
    std::uint64_t seed = 0;
    double max_se = 0.0;  // largest component Monte Carlo standard error
};

GroundTruth ground_truth_scores(const Dgp& dgp, const GarsKind& kind,
                                const CategoryScheme& scheme, int mc_n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// Learner preset used across experiments: expanded context features, item
/// interactions and pair intercepts on top of the built-in logit learner.
NuisanceOptions experiment_nuisance_options(double mu_floor, double pi_floor);

struct CoverageConfig {
    GarsKind kind;
    int runs = 100;
    int n_ctx = 1000;
    int folds = 5;
    bool oracle_nuisances = false;
    bool use_judge = false;
    double judge_sigma = 0.0;
    CiOptions ci;
    NuisanceOptions nuisance;
    std::uint64_t seed = 0;
    int mc_n = 200000;
    int threads = 1;
};

struct EstimatorReport {
    std::string name;
    double mean_error = 0.0;   // mean L2 distance to theta*
    double error_ci = 0.0;     // 95% half-width over runs
    double coverage = 0.0;
    double coverage_ci = 0.0;
    double mean_width = 0.0;
    std::vector<double> errors;
};

struct CoverageReport {
    VectorXd theta_star;
    EstimatorReport plugin;
    EstimatorReport debiased;
};

CoverageReport coverage_experiment(const Dgp& dgp, const CoverageConfig& cfg);

/// Error-vs-n trend on nested datasets (common random numbers across n).
struct TrendReport {
    std::vector<int> n_grid;
    std::vector<double> mean_error;  // debiased, per n
};

TrendReport trend_experiment(const Dgp& dgp, const GarsKind& kind, const CoverageConfig& cfg,
                             const std::vector<int>& n_grid);

struct AcquisitionExperimentConfig {
    std::vector<GarsKind> kinds;
    double beta = 2000.0 / 3000.0;  // per-context budget
    double alpha_floor = 0.01;
    int n_ctx = 3000;
    int runs = 15;
    int folds = 5;
    std::uint64_t seed = 0;
    NuisanceOptions nuisance;
    int mc_n = 200000;
    int threads = 1;
};

struct AcquisitionExperimentReport {
    struct PerKind {
        std::string kind;
        double aopt_mse = 0.0;     // mean over runs of ||theta - theta*||^2 / d
        double uniform_mse = 0.0;
    };
    std::vector<PerKind> results;
};

AcquisitionExperimentReport acquisition_experiment(const Dgp& dgp,
                                                   const AcquisitionExperimentConfig& cfg);

struct BtMisspecReport {
    double gamma = 0.0;
    double restricted_error = 0.0;
    double unrestricted_error = 0.0;
};

/// Restricted vs unrestricted debiased BT projection at one misspecification level,
/// cross-fitted nuisances.
BtMisspecReport btmisspec_experiment(const DgpSpec& base, double gamma, int runs, int n_ctx,
                                     int folds, const NuisanceOptions& opts, std::uint64_t seed,
                                     int mc_n = 200000, int threads = 1,
                                     bool oracle_nuisances = false);

struct JudgeReport {
    std::vector<double> sigmas;
    std::vector<double> mean_error;  // debiased, judge-as-features
};

/// Arms share datasets and noise draws per run; only sigma differs.
JudgeReport judge_experiment(const Dgp& dgp, const GarsKind& kind,
                             const std::vector<double>& sigmas, int runs, int n_ctx, int folds,
                             const NuisanceOptions& opts, std::uint64_t seed, int mc_n = 200000,
                             int threads = 1);

/// Deterministic parallel map over run indices (results identical to sequential).
void run_parallel(int runs, int threads, const std::function<void(int)>& fn);

}  // namespace gars

#endif  // GARS_SIMBENCH_HPP_
