#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vflow/panel.hpp"

// Difference-in-differences estimation on country x week panels: Poisson
// quasi-maximum-likelihood and OLS, both with full unit/week dummy encoding
// and country-clustered sandwich standard errors.

namespace vflow::econ {

struct NamedSeries {
    std::string name;
    std::vector<double> by_week;  // aligned with the panel's week axis
};

struct TreatSpec {
    std::string treated;
    std::int64_t disbursement_date = 0;  // any instant; its Sunday week is the first treated week
    std::vector<NamedSeries> extra_regressors;
    bool drop_time_fe = false;  // replaces week dummies with the extra regressors
    // Further units sharing the treatment switch. The production design has a
    // single treated country and leaves this empty; calibration studies that
    // need treatment variation across many clusters list the extra units here.
    // The fit still reports one interaction coefficient.
    std::vector<std::string> also_treated;
};

struct FitResult {
    std::vector<std::string> coef_names;
    Eigen::VectorXd beta;
    Eigen::MatrixXd vcov;  // clustered sandwich with G/(G-1) correction
    Eigen::Index interaction = 0;  // index of the treated x post coefficient
    Eigen::VectorXd theta;         // exp(beta) - 1 (Poisson fits only)
    Eigen::VectorXd theta_se;      // exp(beta) * se
    std::size_t n_obs = 0;
    std::size_t n_clusters = 0;
    std::vector<std::string> dropped_units;  // sorted
    int iterations = 0;
    double deviance = 0.0;

    double interaction_beta() const { return beta(interaction); }
    double interaction_se() const { return std::sqrt(vcov(interaction, interaction)); }
};

struct EventStudyResult {
    std::vector<std::int64_t> week_starts;  // full panel axis
    Eigen::VectorXd beta;      // per week; exactly 0 at the reference week
    Eigen::VectorXd se;        // 0 at the reference week
    Eigen::VectorXd theta;
    Eigen::VectorXd theta_se;
    std::int64_t reference_week = 0;     // week immediately before disbursement
    std::int64_t disbursement_week = 0;  // first treated week
    std::size_t n_obs = 0;
    std::vector<std::string> dropped_units;
};

// E[Y_it] = exp(beta * Disbursed_t * Treated_i + a_i + g_t [+ extras]).
// IRLS to max|score| < 1e-8 or relative deviance change < 1e-10, at most 200
// iterations; units with all-zero outcomes are dropped and listed; treated
// all-zero in either regime is a separation error naming the unit.
FitResult fit_poisson_twfe(const panel::FlowPanel& p, const TreatSpec& treat);

// Treated x week interactions for every panel week except the reference week
// (the one just before disbursement); Poisson family as above.
EventStudyResult fit_event_study(const panel::FlowPanel& p, const TreatSpec& treat);

// Linear version for mean-transaction-size panels: missing cells are excluded
// (not zeroed); units missing everywhere are dropped and listed.
FitResult fit_ols_twfe(const panel::FlowPanel& p, const TreatSpec& treat);

// (exp(beta) - 1, exp(beta) * se).
std::pair<double, double> delta_transform(double beta, double se);

// Serializations used by the CLI: an event-study table that spillover can
// consume again, columns week_start,beta,se,theta,theta_se,reference.
std::string write_event_study(const EventStudyResult& es);
EventStudyResult parse_event_study(const std::string& text);
EventStudyResult load_event_study(const std::string& path);

}  // namespace vflow::econ
