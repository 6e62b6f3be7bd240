#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vflow/ingest.hpp"
#include "vflow/matcher.hpp"

// Country x week aggregation of cross-border vehicle trades. Weeks start
// Sunday 00:00 UTC; the panel's week axis is every Sunday falling inside
// [window_start, window_end], and a trade lands in the week of its first leg.

namespace vflow::panel {

enum class Direction { Outflow, Inflow };
enum class CounterpartyFilter { All, Low, Middle, High };  // Middle = upper + lower middle
enum class ControlRule { HighIncome, Oecd, Custom };
enum class Measure { OutflowUSD, InflowUSD, MeanTransactionSizeUSD };

const char* direction_name(Direction d);
const char* filter_name(CounterpartyFilter f);
const char* control_rule_name(ControlRule r);
const char* measure_name(Measure m);
Direction direction_from_name(const std::string& s);
CounterpartyFilter filter_from_name(const std::string& s);
ControlRule control_rule_from_name(const std::string& s);
Measure measure_from_name(const std::string& s);

struct PanelSpec {
    Direction direction = Direction::Outflow;
    CounterpartyFilter filter = CounterpartyFilter::All;
    std::int64_t window_start = 0;  // UTC midnights; inclusive on both ends
    std::int64_t window_end = 0;
    std::string treated;
    ControlRule control_rule = ControlRule::HighIncome;
    std::vector<std::string> custom_controls;  // used by ControlRule::Custom
    std::vector<std::string> exclusions;       // removed after the rule applies
};

struct FlowPanel {
    std::vector<std::string> countries;    // row labels; treated first, controls sorted
    std::vector<std::int64_t> week_starts; // Sunday midnights, ascending
    Eigen::MatrixXd values;                // rows x weeks; NaN marks a missing cell
    Measure measure = Measure::OutflowUSD;
    CounterpartyFilter filter = CounterpartyFilter::All;

    Eigen::Index row_of(const std::string& country) const;  // error if absent
    Eigen::Index week_index(std::int64_t week_start) const; // error if absent
};

// Eligible control set under the spec's rule, sorted, never containing the
// treated country. HighIncome drops {JP, SG, KR} (direct stimulus programs);
// Oecd drops {JP, KR}. Empty result is an error.
std::vector<std::string> select_controls(const PanelSpec& spec,
                                         const ingest::CountryClassification& cls);

// Sum of usd_value over cross-border vehicle trades per (country, week).
// Outflow keys rows by origin and filters on destination income; inflow is the
// mirror. Cells with no trades are zero; all-zero rows are kept.
FlowPanel build_panel(const std::vector<matcher::VehicleTrade>& vehicles, const PanelSpec& spec,
                      const ingest::CountryClassification& cls);

// Mean usd_value per (country, week) over the same trade set; cells with no
// trades are missing (NaN), not zero.
FlowPanel build_size_panel(const std::vector<matcher::VehicleTrade>& vehicles,
                           const PanelSpec& spec, const ingest::CountryClassification& cls);

// All Sundays inside [start, end].
std::vector<std::int64_t> enumerate_weeks(std::int64_t window_start, std::int64_t window_end);

// Long-format serialization with a '#'-prefixed metadata header carrying the
// axes, so missing cells survive the round trip.
std::string write_panel(const FlowPanel& p);
FlowPanel parse_panel(const std::string& text);
FlowPanel load_panel(const std::string& path);
void save_panel(const std::string& path, const FlowPanel& p);

}  // namespace vflow::panel
