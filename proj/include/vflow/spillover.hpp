#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vflow/econ.hpp"

// Counterfactual volumes from event-study coefficients and the scenario
// extrapolation of the implied spillover share.

namespace vflow::spillover {

struct CounterfactualSeries {
    std::vector<std::int64_t> week_starts;
    std::vector<double> observed;
    std::vector<double> counterfactual;  // observed * exp(-beta_t); beta = 0 pre-treatment
};

// Every week of the observed series must carry an event-study coefficient;
// weeks before the disbursement week count as untreated (coefficient zero),
// whatever the pre-period estimates were.
CounterfactualSeries counterfactual_series(const std::vector<std::int64_t>& week_starts,
                                           const std::vector<double>& observed,
                                           const econ::EventStudyResult& es);

// 100 * sum(observed - counterfactual) / sum(observed); zero total volume is
// an error.
double total_spillover_pct(const CounterfactualSeries& cf);

struct Scenario {
    std::string label;
    double base_volume_usd = 0.0;   // informational column; <= 0 means n/a
    double us_outflow_usd = 0.0;
};

struct ScenarioRow {
    std::string label;
    double base_volume_usd = 0.0;
    double us_outflow_usd = 0.0;
    double spillover_usd = 0.0;
    double pct_of_eip = 0.0;
};

inline constexpr double kDefaultEipTotalUsd = 271.4e9;

// The shipped scenario table: platform volume, large exchanges, the whole
// market, and official/informal remittance aggregates (0.5x and 2.5x the
// official flow).
std::vector<Scenario> default_scenarios();

// spillover_usd = us_outflow * fraction; pct_of_eip = spillover / eip_total.
// fraction must lie in [0, 1]; volumes must be non-negative.
std::vector<ScenarioRow> extrapolate(double spillover_fraction,
                                     const std::vector<Scenario>& scenarios,
                                     double eip_total_usd = kDefaultEipTotalUsd);

std::string write_counterfactual(const CounterfactualSeries& cf);
std::string write_scenarios(const std::vector<ScenarioRow>& rows);

}  // namespace vflow::spillover
