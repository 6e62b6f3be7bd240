#include "vflow/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vflow::matcher {

using ingest::RateTable;
using ingest::TradeRecord;

void MatchParams::validate() const {
    require(window_seconds > 0, "matcher.params: window_seconds must be positive");
    require(alpha > 0 && alpha < 1, "matcher.params: alpha must lie in (0, 1)");
}

double size_probability(std::int64_t size, const SizeDistribution& dist) {
    require(dist.total >= 1, "matcher.size_probability: empty distribution");
    const auto it = dist.counts.find(size);
    const std::int64_t count = it == dist.counts.end() ? 0 : it->second;
    return static_cast<double>(count + 1) / static_cast<double>(dist.total + 1);
}

double match_p_value(double p_i, std::int64_t n_window) {
    require(p_i >= 0 && p_i <= 1, "matcher.match_p_value: probability out of [0, 1]");
    require(n_window >= 0, "matcher.match_p_value: negative window count");
    if (n_window == 0) return 0.0;
    if (p_i == 0) return 0.0;
    // 1 - (1 - p)^n, computed via expm1/log1p so tiny p stays exact.
    return -std::expm1(static_cast<double>(n_window) * std::log1p(-p_i));
}

FlowClass classify_flow(const VehicleTrade& v) {
    require(!v.leg1.user_country.empty() && !v.leg2.user_country.empty(),
            "matcher.classify_flow: missing user country on trade ",
            v.leg1.user_country.empty() ? v.leg1.trade_id : v.leg2.trade_id);
    FlowClass fc;
    fc.origin = v.leg1.user_country;
    fc.destination = v.leg2.user_country;
    fc.kind = fc.origin == fc.destination ? FlowKind::Domestic : FlowKind::CrossBorder;
    return fc;
}

namespace {

void check_sorted(const std::vector<TradeRecord>& ledger) {
    for (std::size_t i = 1; i < ledger.size(); ++i)
        require(ledger[i - 1].timestamp <= ledger[i].timestamp,
                "matcher.scan_matches: ledger not sorted by timestamp at row ", i + 1);
}

VehicleTrade make_vehicle(const TradeRecord& a, const TradeRecord& b, double p_value,
                          const RateTable& rates) {
    VehicleTrade v;
    v.leg1 = a;
    v.leg2 = b;
    v.p_value = p_value;
    v.origin = a.user_country;
    v.destination = b.user_country;
    v.usd_value = ingest::usd_value(a.size_satoshi, a.timestamp, rates);
    return v;
}

}  // namespace

std::vector<VehicleTrade> scan_matches_serial(const std::vector<TradeRecord>& ledger,
                                              const MatchParams& params,
                                              const RateTable& rates) {
    params.validate();
    check_sorted(ledger);
    const std::size_t n = ledger.size();
    std::vector<VehicleTrade> out;
    std::vector<char> matched(n, 0);
    SizeDistribution dist;

    for (std::size_t i = 0; i < n; ++i) {
        const TradeRecord& ti = ledger[i];
        if (i >= params.burn_in && !matched[i]) {
            const std::int64_t horizon = ti.timestamp + params.window_seconds;
            std::size_t partner = n;
            std::int64_t n_window = 0;
            for (std::size_t j = i + 1; j < n && ledger[j].timestamp <= horizon; ++j) {
                ++n_window;
                if (partner == n && !matched[j] && ledger[j].size_satoshi == ti.size_satoshi)
                    partner = j;
            }
            if (partner != n) {
                matched[i] = matched[partner] = 1;
                // p_i uses the distribution over trades before i only.
                const double p_i = dist.total == 0
                                       ? 1.0
                                       : size_probability(ti.size_satoshi, dist);
                const double pv = match_p_value(p_i, n_window);
                if (pv <= params.alpha)
                    out.push_back(make_vehicle(ti, ledger[partner], pv, rates));
            }
        }
        dist.add(ti.size_satoshi);
    }
    return out;
}

std::vector<VehicleTrade> scan_matches(const std::vector<TradeRecord>& ledger,
                                       const MatchParams& params, const RateTable& rates) {
    params.validate();
    check_sorted(ledger);
    const std::size_t n = ledger.size();
    std::vector<VehicleTrade> out;
    if (n == 0) return out;

    std::vector<std::int64_t> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = ledger[i].timestamp;

    // Legs of a pair always share a size, and a trade's match state only ever
    // depends on earlier same-size trades, so greedy pairing decomposes
    // exactly by size class. Classes hold ledger indices in scan order.
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> classes;
    classes.reserve(n / 2 + 1);
    for (std::size_t i = 0; i < n; ++i)
        classes[ledger[i].size_satoshi].push_back(static_cast<std::uint32_t>(i));

    std::vector<const std::vector<std::uint32_t>*> class_list;
    class_list.reserve(classes.size());
    for (const auto& kv : classes) class_list.push_back(&kv.second);

    struct Hit {
        std::uint32_t leg1;
        std::uint32_t leg2;
        double p_value;
    };
    std::vector<std::vector<Hit>> found(class_list.size());

#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t c = 0; c < class_list.size(); ++c) {
        const std::vector<std::uint32_t>& members = *class_list[c];
        std::vector<Hit> hits;
        std::size_t a = 0;
        while (a < members.size()) {
            const std::uint32_t i = members[a];
            if (i < params.burn_in || a + 1 >= members.size()) {
                ++a;  // burn-in trades never initiate; they are also never
                      // candidates, since candidates lie forward of an
                      // initiator that is itself past burn-in.
                continue;
            }
            const std::uint32_t j = members[a + 1];
            if (times[j] - times[i] > params.window_seconds) {
                ++a;  // class is time-ordered: no later member is closer
                continue;
            }
            // Count of all trades after i inside the window, any size.
            const auto end = std::upper_bound(times.begin(), times.end(),
                                              times[i] + params.window_seconds);
            const std::int64_t n_window =
                static_cast<std::int64_t>(end - times.begin()) - static_cast<std::int64_t>(i) - 1;
            // Prefix counts: a = same-size trades before i, i = all trades
            // before i; add-one smoothing on both.
            const double p_i = i == 0 ? 1.0
                                      : static_cast<double>(a + 1) / static_cast<double>(i + 1);
            const double pv = match_p_value(p_i, n_window);
            if (pv <= params.alpha) hits.push_back({i, j, pv});
            a += 2;  // both legs consumed regardless of the test
        }
        found[c] = std::move(hits);
    }

    std::vector<Hit> all;
    for (auto& v : found) all.insert(all.end(), v.begin(), v.end());
    std::sort(all.begin(), all.end(), [](const Hit& x, const Hit& y) { return x.leg1 < y.leg1; });

    out.reserve(all.size());
    for (const Hit& h : all)
        out.push_back(make_vehicle(ledger[h.leg1], ledger[h.leg2], h.p_value, rates));
    return out;
}

std::string write_vehicles(const std::vector<VehicleTrade>& vehicles) {
    std::string out =
        "leg1_id,leg2_id,timestamp1,timestamp2,size_satoshi,p_value,origin,destination,"
        "usd_value\n";
    for (const VehicleTrade& v : vehicles) {
        out += v.leg1.trade_id;
        out += ',';
        out += v.leg2.trade_id;
        out += ',';
        out += format_iso8601(v.leg1.timestamp);
        out += ',';
        out += format_iso8601(v.leg2.timestamp);
        out += ',';
        out += std::to_string(v.leg1.size_satoshi);
        out += ',';
        out += format_double(v.p_value);
        out += ',';
        out += v.origin;
        out += ',';
        out += v.destination;
        out += ',';
        out += format_double(v.usd_value);
        out += '\n';
    }
    return out;
}

std::vector<VehicleTrade> parse_vehicles(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    std::vector<VehicleTrade> out;
    std::size_t first = 0;
    if (!lines.empty() && lines[0].rfind("leg1_id,", 0) == 0) first = 1;
    for (std::size_t li = first; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::string where = "vehicles line " + std::to_string(li + 1);
        const auto fields = split_csv(lines[li]);
        require(fields.size() == 9, "matcher.parse_vehicles: ", where,
                ": expected 9 columns, got ", fields.size());
        VehicleTrade v;
        v.leg1.trade_id = fields[0];
        v.leg2.trade_id = fields[1];
        try {
            v.leg1.timestamp = parse_iso8601(fields[2]);
            v.leg2.timestamp = parse_iso8601(fields[3]);
        } catch (const std::runtime_error& e) {
            fail("matcher.parse_vehicles: ", where, ": ", e.what());
        }
        v.leg1.size_satoshi = v.leg2.size_satoshi =
            parse_int64_field(fields[4], where + ", column size_satoshi");
        v.p_value = parse_double_field(fields[5], where + ", column p_value");
        v.origin = v.leg1.user_country = fields[6];
        v.destination = v.leg2.user_country = fields[7];
        v.usd_value = parse_double_field(fields[8], where + ", column usd_value");
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<VehicleTrade> load_vehicles(const std::string& path) {
    return parse_vehicles(read_text_file(path));
}

void save_vehicles(const std::string& path, const std::vector<VehicleTrade>& vehicles) {
    write_text_file(path, write_vehicles(vehicles));
}

}  // namespace vflow::matcher
