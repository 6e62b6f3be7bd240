#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

// Ledger, exchange-rate, and country-classification loading. Trade sizes are
// exact satoshi integers end to end; nothing here round-trips through double.

namespace vflow::ingest {

struct TradeRecord {
    std::string trade_id;
    std::int64_t timestamp = 0;  // UTC epoch seconds
    std::int64_t size_satoshi = 0;
    std::string fiat_currency;
    double fiat_price = 0.0;
    std::string user_country;
    std::string advertiser_country;
    std::string payment_method;
};

// Last-observation-carried-forward USD/BTC lookup; timestamps strictly
// increasing, rates strictly positive.
struct RateTable {
    std::vector<std::int64_t> timestamps;
    std::vector<double> usd_per_btc;

    // Rate in force at ts; error before the first observation.
    double rate_at(std::int64_t ts) const;
};

enum class IncomeGroup { High, UpperMiddle, LowerMiddle, Low };

const char* income_group_name(IncomeGroup g);
IncomeGroup income_group_from_name(const std::string& name);

class CountryClassification {
public:
    struct Entry {
        std::string name;
        IncomeGroup group = IncomeGroup::High;
        bool oecd = false;
    };

    void add(const std::string& code, Entry entry);  // duplicate code -> error
    bool contains(const std::string& code) const { return entries_.count(code) > 0; }
    // Lookups fail loudly, naming the unknown code; silent misclassification
    // must never reach the panels.
    const Entry& at(const std::string& code) const;
    IncomeGroup income_group(const std::string& code) const { return at(code).group; }
    bool is_oecd(const std::string& code) const { return at(code).oecd; }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, Entry>& entries() const { return entries_; }

private:
    std::map<std::string, Entry> entries_;  // ordered: deterministic iteration
};

// Ledger rows: trade_id,timestamp_iso8601,size_satoshi,fiat_currency,
// fiat_price,user_country,advertiser_country,payment_method. The size field
// accepts either a satoshi integer or a decimal BTC amount ("0.00421585");
// sub-satoshi precision is an error, not a rounding. Output is sorted by
// (timestamp, trade_id); malformed rows and duplicate ids error with the line
// number.
std::vector<TradeRecord> parse_ledger(const std::string& text);
std::vector<TradeRecord> load_ledger(const std::string& path);

// Canonical serialization: satoshi integers, ISO-8601 Z timestamps. Parsing a
// written ledger and re-writing it is byte-identical.
std::string write_ledger(const std::vector<TradeRecord>& trades);
void save_ledger(const std::string& path, const std::vector<TradeRecord>& trades);

// Rate rows: timestamp_iso8601,usd_per_btc.
RateTable parse_rates(const std::string& text);
RateTable load_rates(const std::string& path);
std::string write_rates(const RateTable& rates);

// Classification rows: country_code,country_name,income_group,oecd.
CountryClassification parse_classification(const std::string& text);
CountryClassification load_classification(const std::string& path);

// Exact decimal size parser shared with the generators: returns satoshi.
std::int64_t parse_size_field(const std::string& s, const std::string& where);

// USD value of a trade: size * 1e-8 * rate in force at ts.
double usd_value(std::int64_t size_satoshi, std::int64_t ts, const RateTable& rates);

}  // namespace vflow::ingest
