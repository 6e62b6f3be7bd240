#include "vflow/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"

namespace vflow::panel {

using ingest::CountryClassification;
using ingest::IncomeGroup;
using matcher::FlowKind;
using matcher::VehicleTrade;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool filter_admits(CounterpartyFilter f, IncomeGroup g) {
    switch (f) {
        case CounterpartyFilter::All: return true;
        case CounterpartyFilter::Low: return g == IncomeGroup::Low;
        case CounterpartyFilter::Middle:
            return g == IncomeGroup::UpperMiddle || g == IncomeGroup::LowerMiddle;
        case CounterpartyFilter::High: return g == IncomeGroup::High;
    }
    return false;
}
}  // namespace

const char* direction_name(Direction d) {
    return d == Direction::Outflow ? "outflow" : "inflow";
}
const char* filter_name(CounterpartyFilter f) {
    switch (f) {
        case CounterpartyFilter::All: return "all";
        case CounterpartyFilter::Low: return "low";
        case CounterpartyFilter::Middle: return "middle";
        case CounterpartyFilter::High: return "high";
    }
    return "?";
}
const char* control_rule_name(ControlRule r) {
    switch (r) {
        case ControlRule::HighIncome: return "high-income";
        case ControlRule::Oecd: return "oecd";
        case ControlRule::Custom: return "custom";
    }
    return "?";
}
const char* measure_name(Measure m) {
    switch (m) {
        case Measure::OutflowUSD: return "OutflowUSD";
        case Measure::InflowUSD: return "InflowUSD";
        case Measure::MeanTransactionSizeUSD: return "MeanTransactionSizeUSD";
    }
    return "?";
}

Direction direction_from_name(const std::string& s) {
    if (s == "outflow") return Direction::Outflow;
    if (s == "inflow") return Direction::Inflow;
    fail("panel.direction: unknown direction \"", s, "\"");
}
CounterpartyFilter filter_from_name(const std::string& s) {
    if (s == "all") return CounterpartyFilter::All;
    if (s == "low") return CounterpartyFilter::Low;
    if (s == "middle") return CounterpartyFilter::Middle;
    if (s == "high") return CounterpartyFilter::High;
    fail("panel.filter: unknown counterparty filter \"", s, "\"");
}
ControlRule control_rule_from_name(const std::string& s) {
    if (s == "high-income") return ControlRule::HighIncome;
    if (s == "oecd") return ControlRule::Oecd;
    if (s == "custom") return ControlRule::Custom;
    fail("panel.control_rule: unknown control rule \"", s, "\"");
}
Measure measure_from_name(const std::string& s) {
    if (s == "OutflowUSD") return Measure::OutflowUSD;
    if (s == "InflowUSD") return Measure::InflowUSD;
    if (s == "MeanTransactionSizeUSD") return Measure::MeanTransactionSizeUSD;
    fail("panel.measure: unknown measure \"", s, "\"");
}

Eigen::Index FlowPanel::row_of(const std::string& country) const {
    for (std::size_t i = 0; i < countries.size(); ++i)
        if (countries[i] == country) return static_cast<Eigen::Index>(i);
    fail("panel: country ", country, " not in panel");
}

Eigen::Index FlowPanel::week_index(std::int64_t week_start) const {
    const auto it = std::lower_bound(week_starts.begin(), week_starts.end(), week_start);
    require(it != week_starts.end() && *it == week_start, "panel: week ",
            format_date(week_start), " not in panel");
    return static_cast<Eigen::Index>(it - week_starts.begin());
}

std::vector<std::int64_t> enumerate_weeks(std::int64_t window_start, std::int64_t window_end) {
    require(window_start <= window_end, "panel.enumerate_weeks: window start after end");
    std::vector<std::int64_t> weeks;
    std::int64_t w = week_start_sunday(window_start);
    if (w < window_start) w += kSecondsPerWeek;
    for (; w <= window_end; w += kSecondsPerWeek) weeks.push_back(w);
    return weeks;
}

std::vector<std::string> select_controls(const PanelSpec& spec,
                                         const CountryClassification& cls) {
    std::set<std::string> picked;
    switch (spec.control_rule) {
        case ControlRule::HighIncome:
            for (const auto& [code, entry] : cls.entries())
                if (entry.group == IncomeGroup::High) picked.insert(code);
            for (const char* c : {"JP", "SG", "KR"}) picked.erase(c);
            break;
        case ControlRule::Oecd:
            for (const auto& [code, entry] : cls.entries())
                if (entry.oecd) picked.insert(code);
            for (const char* c : {"JP", "KR"}) picked.erase(c);
            break;
        case ControlRule::Custom:
            picked.insert(spec.custom_controls.begin(), spec.custom_controls.end());
            break;
    }
    picked.erase(spec.treated);
    for (const std::string& c : spec.exclusions) picked.erase(c);
    require(!picked.empty(), "panel.select_controls: empty control set under rule ",
            control_rule_name(spec.control_rule));
    return {picked.begin(), picked.end()};
}

namespace {

struct PanelFrame {
    std::vector<std::string> countries;
    std::vector<std::int64_t> weeks;
    std::unordered_map<std::string, Eigen::Index> row;
    std::int64_t first_week = 0;
};

PanelFrame make_frame(const PanelSpec& spec, const CountryClassification& cls) {
    PanelFrame f;
    require(!spec.treated.empty(), "panel.build: treated country is empty");
    f.countries.push_back(spec.treated);
    for (const std::string& c : select_controls(spec, cls)) f.countries.push_back(c);
    f.weeks = enumerate_weeks(spec.window_start, spec.window_end);
    require(!f.weeks.empty(), "panel.build: no Sundays inside the window");
    f.first_week = f.weeks.front();
    for (std::size_t i = 0; i < f.countries.size(); ++i)
        f.row[f.countries[i]] = static_cast<Eigen::Index>(i);
    return f;
}

// Shared aggregation walk. Vehicles are already time-ordered (scan output);
// accumulation order is therefore fixed and the sums deterministic.
template <typename Cell>
void aggregate(const std::vector<VehicleTrade>& vehicles, const PanelSpec& spec,
               const CountryClassification& cls, const PanelFrame& frame, Cell&& cell) {
    const bool outflow = spec.direction == Direction::Outflow;
    for (const VehicleTrade& v : vehicles) {
        const matcher::FlowClass fc = matcher::classify_flow(v);
        if (fc.kind != FlowKind::CrossBorder) continue;
        const std::string& keyed = outflow ? fc.origin : fc.destination;
        const auto it = frame.row.find(keyed);
        if (it == frame.row.end()) continue;
        const std::string& counterparty = outflow ? fc.destination : fc.origin;
        if (spec.filter != CounterpartyFilter::All &&
            !filter_admits(spec.filter, cls.income_group(counterparty)))
            continue;
        const std::int64_t wk = week_start_sunday(v.leg1.timestamp);
        if (wk < frame.weeks.front() || wk > frame.weeks.back()) continue;
        const auto idx = (wk - frame.first_week) / kSecondsPerWeek;
        cell(it->second, static_cast<Eigen::Index>(idx), v.usd_value);
    }
}

}  // namespace

FlowPanel build_panel(const std::vector<VehicleTrade>& vehicles, const PanelSpec& spec,
                      const CountryClassification& cls) {
    const PanelFrame frame = make_frame(spec, cls);
    FlowPanel p;
    p.countries = frame.countries;
    p.week_starts = frame.weeks;
    p.measure = spec.direction == Direction::Outflow ? Measure::OutflowUSD : Measure::InflowUSD;
    p.filter = spec.filter;
    p.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frame.countries.size()),
                                     static_cast<Eigen::Index>(frame.weeks.size()));
    aggregate(vehicles, spec, cls, frame,
              [&](Eigen::Index r, Eigen::Index w, double usd) { p.values(r, w) += usd; });
    return p;
}

FlowPanel build_size_panel(const std::vector<VehicleTrade>& vehicles, const PanelSpec& spec,
                           const CountryClassification& cls) {
    const PanelFrame frame = make_frame(spec, cls);
    const auto rows = static_cast<Eigen::Index>(frame.countries.size());
    const auto cols = static_cast<Eigen::Index>(frame.weeks.size());
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(rows, cols);
    aggregate(vehicles, spec, cls, frame, [&](Eigen::Index r, Eigen::Index w, double usd) {
        sums(r, w) += usd;
        counts(r, w) += 1;
    });
    FlowPanel p;
    p.countries = frame.countries;
    p.week_starts = frame.weeks;
    p.measure = Measure::MeanTransactionSizeUSD;
    p.filter = spec.filter;
    p.values = Eigen::MatrixXd::Constant(rows, cols, kNaN);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index w = 0; w < cols; ++w)
            if (counts(r, w) > 0) p.values(r, w) = sums(r, w) / counts(r, w);
    return p;
}

std::string write_panel(const FlowPanel& p) {
    std::string out;
    out += "# measure=";
    out += measure_name(p.measure);
    out += "\n# filter=";
    out += filter_name(p.filter);
    out += "\n# countries=";
    for (std::size_t i = 0; i < p.countries.size(); ++i) {
        if (i) out += ';';
        out += p.countries[i];
    }
    out += "\n# weeks=";
    for (std::size_t i = 0; i < p.week_starts.size(); ++i) {
        if (i) out += ';';
        out += format_date(p.week_starts[i]);
    }
    out += "\ncountry,week_start,value\n";
    for (std::size_t r = 0; r < p.countries.size(); ++r)
        for (std::size_t w = 0; w < p.week_starts.size(); ++w) {
            const double v = p.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w));
            if (std::isnan(v)) continue;  // missing cells are simply absent
            out += p.countries[r];
            out += ',';
            out += format_date(p.week_starts[w]);
            out += ',';
            out += format_double(v);
            out += '\n';
        }
    return out;
}

FlowPanel parse_panel(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    FlowPanel p;
    bool have_countries = false, have_weeks = false;
    std::size_t li = 0;
    for (; li < lines.size() && !lines[li].empty() && lines[li][0] == '#'; ++li) {
        const std::string& l = lines[li];
        const std::size_t eq = l.find('=');
        require(eq != std::string::npos, "panel.parse: bad metadata line ", li + 1);
        const std::string key = l.substr(2, eq - 2);
        const std::string val = l.substr(eq + 1);
        if (key == "measure") {
            p.measure = measure_from_name(val);
        } else if (key == "filter") {
            p.filter = filter_from_name(val);
        } else if (key == "countries") {
            for (const std::string& c : split_csv(val, ';'))
                if (!c.empty()) p.countries.push_back(c);
            have_countries = true;
        } else if (key == "weeks") {
            for (const std::string& w : split_csv(val, ';'))
                if (!w.empty()) p.week_starts.push_back(parse_date(w));
            have_weeks = true;
        }  // unknown keys pass through harmlessly
    }
    require(have_countries && have_weeks,
            "panel.parse: metadata must list countries and weeks");
    require(li < lines.size() && lines[li] == "country,week_start,value",
            "panel.parse: missing column header");
    ++li;
    const bool size_panel = p.measure == Measure::MeanTransactionSizeUSD;
    p.values = size_panel
                   ? Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p.countries.size()),
                                               static_cast<Eigen::Index>(p.week_starts.size()),
                                               kNaN)
                   : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.countries.size()),
                                           static_cast<Eigen::Index>(p.week_starts.size()));
    for (; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::string where = "panel line " + std::to_string(li + 1);
        const auto fields = split_csv(lines[li]);
        require(fields.size() == 3, "panel.parse: ", where, ": expected 3 columns");
        const Eigen::Index r = p.row_of(fields[0]);
        const Eigen::Index w = p.week_index(parse_date(fields[1]));
        p.values(r, w) = parse_double_field(fields[2], where + ", column value");
    }
    return p;
}

FlowPanel load_panel(const std::string& path) { return parse_panel(read_text_file(path)); }

void save_panel(const std::string& path, const FlowPanel& p) {
    write_text_file(path, write_panel(p));
}

}  // namespace vflow::panel
