#include "vflow/ingest.hpp"

#include <algorithm>
#include <unordered_set>

#include "vflow/calendar.hpp"
#include "vflow/csv.hpp"
#include "vflow/fail.hpp"

namespace vflow::ingest {

namespace {

constexpr const char* kLedgerHeader =
    "trade_id,timestamp_iso8601,size_satoshi,fiat_currency,fiat_price,user_country,"
    "advertiser_country,payment_method";

std::string line_ctx(const char* what, std::size_t lineno) {
    return std::string(what) + " line " + std::to_string(lineno);
}

}  // namespace

double RateTable::rate_at(std::int64_t ts) const {
    require(!timestamps.empty(), "ingest.rate_at: rate table is empty");
    require(ts >= timestamps.front(),
            "ingest.rate_at: timestamp ", format_iso8601(ts),
            " precedes first rate observation ", format_iso8601(timestamps.front()));
    // Last entry with timestamp <= ts.
    const auto it = std::upper_bound(timestamps.begin(), timestamps.end(), ts);
    return usd_per_btc[static_cast<std::size_t>(it - timestamps.begin()) - 1];
}

const char* income_group_name(IncomeGroup g) {
    switch (g) {
        case IncomeGroup::High: return "High";
        case IncomeGroup::UpperMiddle: return "UpperMiddle";
        case IncomeGroup::LowerMiddle: return "LowerMiddle";
        case IncomeGroup::Low: return "Low";
    }
    fail("ingest.income_group_name: bad enum value");
}

IncomeGroup income_group_from_name(const std::string& name) {
    if (name == "High") return IncomeGroup::High;
    if (name == "UpperMiddle") return IncomeGroup::UpperMiddle;
    if (name == "LowerMiddle") return IncomeGroup::LowerMiddle;
    if (name == "Low") return IncomeGroup::Low;
    fail("ingest.income_group: unknown income group \"", name, "\"");
}

void CountryClassification::add(const std::string& code, Entry entry) {
    const auto [it, inserted] = entries_.emplace(code, std::move(entry));
    require(inserted, "ingest.classification: duplicate country code ", code);
}

const CountryClassification::Entry& CountryClassification::at(const std::string& code) const {
    const auto it = entries_.find(code);
    if (it == entries_.end())
        fail("ingest.classification: unknown country code \"", code, "\"");
    return it->second;
}

std::int64_t parse_size_field(const std::string& s, const std::string& where) {
    const auto bad = [&](const char* why) {
        fail("ingest.parse_size: ", where, ": ", why, " (\"", s, "\")");
    };
    if (s.empty()) bad("empty size field");
    const std::size_t dot = s.find('.');
    const std::string ipart = dot == std::string::npos ? s : s.substr(0, dot);
    const std::string fpart = dot == std::string::npos ? std::string() : s.substr(dot + 1);
    for (const std::string* part : {&ipart, &fpart})
        for (char c : *part)
            if (c < '0' || c > '9') bad("non-digit in size field");
    if (dot == std::string::npos) {
        // Plain integer: already satoshi.
        std::int64_t v = parse_int64_field(s, where);
        return v;
    }
    // Decimal BTC amount, converted exactly. More than 8 fractional digits
    // with a nonzero tail is below the representable unit.
    if (ipart.empty() && fpart.empty()) bad("lone decimal point");
    std::string frac = fpart;
    if (frac.size() > 8) {
        for (std::size_t i = 8; i < frac.size(); ++i)
            if (frac[i] != '0') bad("sub-satoshi precision");
        frac.resize(8);
    }
    frac.resize(8, '0');
    std::int64_t whole = ipart.empty() ? 0 : parse_int64_field(ipart, where);
    require(whole <= 92233720368LL, "ingest.parse_size: ", where, ": size overflows satoshi range");
    std::int64_t v = whole * 100000000LL + parse_int64_field(frac, where);
    return v;
}

std::vector<TradeRecord> parse_ledger(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    std::vector<TradeRecord> trades;
    if (lines.empty()) return trades;

    std::size_t first = 0;
    if (lines[0] == kLedgerHeader) first = 1;
    std::unordered_set<std::string> seen_ids;
    for (std::size_t li = first; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::size_t human_line = li + 1;
        const auto fields = split_csv(lines[li]);
        require(fields.size() == 8, "ingest.parse_ledger: ", line_ctx("ledger", human_line),
                ": expected 8 columns, got ", fields.size());
        TradeRecord t;
        t.trade_id = fields[0];
        require(!t.trade_id.empty(), "ingest.parse_ledger: ", line_ctx("ledger", human_line),
                ": empty trade_id");
        try {
            t.timestamp = parse_iso8601(fields[1]);
            t.size_satoshi = parse_size_field(fields[2], line_ctx("ledger", human_line));
            t.fiat_price = parse_double_field(fields[4], line_ctx("ledger", human_line) +
                                                             ", column fiat_price");
        } catch (const std::runtime_error& e) {
            fail("ingest.parse_ledger: ", line_ctx("ledger", human_line), ": ", e.what());
        }
        require(t.size_satoshi > 0, "ingest.parse_ledger: ", line_ctx("ledger", human_line),
                ": size must be a positive satoshi amount");
        require(t.fiat_price > 0, "ingest.parse_ledger: ", line_ctx("ledger", human_line),
                ": fiat price must be positive");
        t.fiat_currency = fields[3];
        t.user_country = fields[5];
        t.advertiser_country = fields[6];
        t.payment_method = fields[7];
        require(seen_ids.insert(t.trade_id).second, "ingest.parse_ledger: ",
                line_ctx("ledger", human_line), ": duplicate trade_id ", t.trade_id);
        trades.push_back(std::move(t));
    }
    std::stable_sort(trades.begin(), trades.end(), [](const TradeRecord& a, const TradeRecord& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.trade_id < b.trade_id;
    });
    return trades;
}

std::vector<TradeRecord> load_ledger(const std::string& path) {
    return parse_ledger(read_text_file(path));
}

std::string write_ledger(const std::vector<TradeRecord>& trades) {
    std::string out(kLedgerHeader);
    out += '\n';
    for (const TradeRecord& t : trades) {
        out += t.trade_id;
        out += ',';
        out += format_iso8601(t.timestamp);
        out += ',';
        out += std::to_string(t.size_satoshi);
        out += ',';
        out += t.fiat_currency;
        out += ',';
        out += format_double(t.fiat_price);
        out += ',';
        out += t.user_country;
        out += ',';
        out += t.advertiser_country;
        out += ',';
        out += t.payment_method;
        out += '\n';
    }
    return out;
}

void save_ledger(const std::string& path, const std::vector<TradeRecord>& trades) {
    write_text_file(path, write_ledger(trades));
}

RateTable parse_rates(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    RateTable table;
    std::size_t first = 0;
    if (!lines.empty() && lines[0] == "timestamp_iso8601,usd_per_btc") first = 1;
    for (std::size_t li = first; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::size_t human_line = li + 1;
        const auto fields = split_csv(lines[li]);
        require(fields.size() == 2, "ingest.parse_rates: ", line_ctx("rates", human_line),
                ": expected 2 columns, got ", fields.size());
        std::int64_t ts = 0;
        double rate = 0;
        try {
            ts = parse_iso8601(fields[0]);
            rate = parse_double_field(fields[1], line_ctx("rates", human_line) +
                                                     ", column usd_per_btc");
        } catch (const std::runtime_error& e) {
            fail("ingest.parse_rates: ", line_ctx("rates", human_line), ": ", e.what());
        }
        require(rate > 0, "ingest.parse_rates: ", line_ctx("rates", human_line),
                ": rate must be positive");
        require(table.timestamps.empty() || ts > table.timestamps.back(),
                "ingest.parse_rates: ", line_ctx("rates", human_line),
                ": timestamps must be strictly increasing");
        table.timestamps.push_back(ts);
        table.usd_per_btc.push_back(rate);
    }
    return table;
}

RateTable load_rates(const std::string& path) { return parse_rates(read_text_file(path)); }

std::string write_rates(const RateTable& rates) {
    std::string out = "timestamp_iso8601,usd_per_btc\n";
    for (std::size_t i = 0; i < rates.timestamps.size(); ++i) {
        out += format_iso8601(rates.timestamps[i]);
        out += ',';
        out += format_double(rates.usd_per_btc[i]);
        out += '\n';
    }
    return out;
}

CountryClassification parse_classification(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);
    CountryClassification cls;
    std::size_t first = 0;
    if (!lines.empty() && lines[0] == "country_code,country_name,income_group,oecd") first = 1;
    for (std::size_t li = first; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::size_t human_line = li + 1;
        const auto fields = split_csv(lines[li]);
        require(fields.size() == 4, "ingest.parse_classification: ",
                line_ctx("classification", human_line), ": expected 4 columns, got ",
                fields.size());
        require(!fields[0].empty(), "ingest.parse_classification: ",
                line_ctx("classification", human_line), ": empty country code");
        CountryClassification::Entry e;
        e.name = fields[1];
        try {
            e.group = income_group_from_name(fields[2]);
        } catch (const std::runtime_error& err) {
            fail("ingest.parse_classification: ", line_ctx("classification", human_line), ": ",
                 err.what());
        }
        require(fields[3] == "0" || fields[3] == "1", "ingest.parse_classification: ",
                line_ctx("classification", human_line), ": oecd flag must be 0 or 1");
        e.oecd = fields[3] == "1";
        try {
            cls.add(fields[0], std::move(e));
        } catch (const std::runtime_error& err) {
            fail("ingest.parse_classification: ", line_ctx("classification", human_line), ": ",
                 err.what());
        }
    }
    return cls;
}

CountryClassification load_classification(const std::string& path) {
    return parse_classification(read_text_file(path));
}

double usd_value(std::int64_t size_satoshi, std::int64_t ts, const RateTable& rates) {
    require(size_satoshi > 0, "ingest.usd_value: size must be positive");
    return static_cast<double>(size_satoshi) * 1e-8 * rates.rate_at(ts);
}

}  // namespace vflow::ingest
