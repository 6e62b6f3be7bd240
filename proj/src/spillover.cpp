#include "vflow/spillover.hpp"

#include <algorithm>
#include <cmath>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"

namespace vflow::spillover {

CounterfactualSeries counterfactual_series(const std::vector<std::int64_t>& week_starts,
                                           const std::vector<double>& observed,
                                           const econ::EventStudyResult& es) {
    require(week_starts.size() == observed.size(),
            "spillover.counterfactual: weeks/observed length mismatch");
    CounterfactualSeries cf;
    cf.week_starts = week_starts;
    cf.observed = observed;
    cf.counterfactual.reserve(observed.size());
    for (std::size_t i = 0; i < week_starts.size(); ++i) {
        require(observed[i] >= 0, "spillover.counterfactual: negative volume in week ",
                format_date(week_starts[i]));
        double beta = 0.0;
        if (week_starts[i] >= es.disbursement_week) {
            const auto it = std::find(es.week_starts.begin(), es.week_starts.end(),
                                      week_starts[i]);
            require(it != es.week_starts.end(),
                    "spillover.counterfactual: no event-study coefficient for week ",
                    format_date(week_starts[i]));
            beta = es.beta(static_cast<Eigen::Index>(it - es.week_starts.begin()));
        }
        cf.counterfactual.push_back(observed[i] * std::exp(-beta));
    }
    return cf;
}

double total_spillover_pct(const CounterfactualSeries& cf) {
    require(cf.observed.size() == cf.counterfactual.size(),
            "spillover.total: malformed series");
    double total = 0, excess = 0;
    for (std::size_t i = 0; i < cf.observed.size(); ++i) {
        total += cf.observed[i];
        excess += cf.observed[i] - cf.counterfactual[i];
    }
    require(total > 0, "spillover.total: total observed volume is zero");
    return 100.0 * excess / total;
}

std::vector<Scenario> default_scenarios() {
    return {
        {"Platform outflows", 1.9e9, 23.0e6},
        {"Top 15 exchanges", 3.78e12, 45.8e9},
        {"Total cryptocurrency market", 44.42e12, 537.7e9},
        {"Official remittances", 0.0, 66.54e9},
        {"Informal remittances (lower bound)", 0.0, 33.27e9},
        {"Informal remittances (upper bound)", 0.0, 166.35e9},
    };
}

std::vector<ScenarioRow> extrapolate(double spillover_fraction,
                                     const std::vector<Scenario>& scenarios,
                                     double eip_total_usd) {
    require(spillover_fraction >= 0 && spillover_fraction <= 1,
            "spillover.extrapolate: fraction must lie in [0, 1], got ", spillover_fraction);
    require(eip_total_usd > 0, "spillover.extrapolate: benchmark total must be positive");
    std::vector<ScenarioRow> rows;
    rows.reserve(scenarios.size());
    for (const Scenario& s : scenarios) {
        require(s.us_outflow_usd >= 0, "spillover.extrapolate: negative outflow in scenario ",
                s.label);
        ScenarioRow r;
        r.label = s.label;
        r.base_volume_usd = s.base_volume_usd;
        r.us_outflow_usd = s.us_outflow_usd;
        r.spillover_usd = s.us_outflow_usd * spillover_fraction;
        r.pct_of_eip = 100.0 * r.spillover_usd / eip_total_usd;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string write_counterfactual(const CounterfactualSeries& cf) {
    std::string out = "week_start,observed_usd,counterfactual_usd\n";
    for (std::size_t i = 0; i < cf.week_starts.size(); ++i) {
        out += format_date(cf.week_starts[i]);
        out += ',';
        out += format_double(cf.observed[i]);
        out += ',';
        out += format_double(cf.counterfactual[i]);
        out += '\n';
    }
    return out;
}

std::string write_scenarios(const std::vector<ScenarioRow>& rows) {
    std::string out = "scenario,base_volume_usd,us_outflow_usd,spillover_usd,pct_of_eip\n";
    for (const ScenarioRow& r : rows) {
        out += r.label;
        out += ',';
        out += r.base_volume_usd > 0 ? format_double(r.base_volume_usd) : std::string("");
        out += ',';
        out += format_double(r.us_outflow_usd);
        out += ',';
        out += format_double(r.spillover_usd);
        out += ',';
        out += format_double(r.pct_of_eip);
        out += '\n';
    }
    return out;
}

}  // namespace vflow::spillover
