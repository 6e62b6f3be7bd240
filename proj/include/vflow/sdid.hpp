#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Synthetic difference-in-differences for one treated unit: simplex-weighted
// unit and time averages, a closed-form estimate, and placebo-resampling
// inference. Weight problems are ridge-regularized least squares over the
// probability simplex, solved by Frank-Wolfe with away steps.

namespace vflow::sdid {

struct SdidProblem {
    std::vector<std::string> units;       // row labels, treated included
    std::vector<std::int64_t> week_starts;
    Eigen::MatrixXd Y;                    // units x weeks
    Eigen::Index treated = 0;             // row of the treated unit
    Eigen::Index t_pre = 0;               // number of pre-treatment weeks
    std::optional<double> zeta_override;  // rarely set; tests pin the ridge

    void validate() const;
    Eigen::Index n_post() const { return static_cast<Eigen::Index>(week_starts.size()) - t_pre; }
};

struct SimplexSolveInfo {
    int iterations = 0;
    double kkt_residual = 0.0;  // on the unit-scaled problem
    double objective = 0.0;
};

struct SdidWeights {
    Eigen::VectorXd omega;   // over control units, simplex
    double omega_intercept = 0.0;
    Eigen::VectorXd lambda;  // over pre weeks, simplex
    double lambda_intercept = 0.0;
    SimplexSolveInfo omega_info;
    SimplexSolveInfo lambda_info;
};

struct SdidResult {
    double tau = 0.0;
    double tau_relative = 0.0;  // tau / treated pre-period mean
    double pre_mean = 0.0;
    Eigen::VectorXd effect_path;  // per post week; mean equals tau
    SdidWeights weights;
};

struct PlaceboResult {
    double se = 0.0;
    double se_relative = 0.0;
    Eigen::VectorXd path_se;  // per post week
    std::size_t reps = 0;
};

// min over simplex w of ||A w - b||^2 + ridge * ||w||^2. A's columns are the
// candidate series. Uniform start; fully degenerate objectives therefore
// return uniform weights. KKT residual below 1e-8 (scaled) or error.
Eigen::VectorXd solve_simplex_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 double ridge, SimplexSolveInfo* info = nullptr);

// Ridge scale: (n_treated * T_post)^(1/4) * sd of first differences of
// control pre-period outcomes.
double zeta_for(const SdidProblem& prob);

SdidWeights solve_weights(const SdidProblem& prob);

// Closed-form estimate given weights (exposed for the collapse-to-DID
// equality and the tests' hand arithmetic).
double tau_given_weights(const SdidProblem& prob, const Eigen::VectorXd& omega,
                         const Eigen::VectorXd& lambda);

SdidResult estimate_sdid(const SdidProblem& prob);

// Placebo variance: each rep promotes a random control to pseudo-treated,
// drops the true treated row, and re-estimates. Streams derive from
// (seed, rep), so thread count cannot change the draws. reps >= 2.
PlaceboResult placebo_variance(const SdidProblem& prob, std::size_t reps, std::uint64_t seed,
                               bool parallel = true);

// Removes the OLS projection of Y on the covariates, fitting gamma on every
// cell except the treated unit's post-period (the uncontaminated set).
// Rank-deficient covariates error and name the offending columns.
struct ResidualizeResult {
    Eigen::MatrixXd Y_adj;
    Eigen::VectorXd gamma;
};
ResidualizeResult residualize_covariates(const SdidProblem& prob,
                                         const std::vector<Eigen::MatrixXd>& covariates,
                                         const std::vector<std::string>& names);

// Re-runs the estimator pretending treatment began at pseudo_t_pre (an index
// into the week axis; must lie in [1, t_pre]). Equal to t_pre reproduces
// estimate_sdid exactly.
SdidResult placebo_in_time(const SdidProblem& prob, Eigen::Index pseudo_t_pre);

// Effect-path serialization: week_start,effect,ci_low,ci_high.
std::string write_effect_path(const SdidProblem& prob, const SdidResult& res,
                              const PlaceboResult* placebo);

}  // namespace vflow::sdid
