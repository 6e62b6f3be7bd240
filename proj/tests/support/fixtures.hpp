#pragma once

// Shared fixture builders for the test suite.

#include <unistd.h>

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vflow/calendar.hpp"
#include "vflow/ingest.hpp"
#include "vflow/matcher.hpp"
#include "vflow/panel.hpp"

namespace fixtures {

inline std::int64_t ts(const char* iso) { return vflow::parse_iso8601(iso); }
inline std::int64_t day(const char* iso) { return vflow::parse_date(iso); }

inline vflow::ingest::TradeRecord trade(std::string id, std::int64_t timestamp,
                                        std::int64_t size, std::string user = "US",
                                        std::string advertiser = "US") {
    vflow::ingest::TradeRecord t;
    t.trade_id = std::move(id);
    t.timestamp = timestamp;
    t.size_satoshi = size;
    t.fiat_currency = "USD";
    t.fiat_price = 10000.0;
    t.user_country = std::move(user);
    t.advertiser_country = std::move(advertiser);
    t.payment_method = "bank-transfer";
    return t;
}

// Flat-rate table covering [t0, t1].
inline vflow::ingest::RateTable flat_rates(std::int64_t t0, std::int64_t t1,
                                           double rate = 10000.0) {
    vflow::ingest::RateTable r;
    for (std::int64_t t = t0; t <= t1; t += vflow::kSecondsPerDay) {
        r.timestamps.push_back(t);
        r.usd_per_btc.push_back(rate);
    }
    if (r.timestamps.empty() || r.timestamps.back() < t1) {
        r.timestamps.push_back(t1);
        r.usd_per_btc.push_back(rate);
    }
    return r;
}

// Panel from an explicit matrix; week axis starts at the given Sunday.
inline vflow::panel::FlowPanel panel_from(const std::vector<std::string>& countries,
                                          const Eigen::MatrixXd& values,
                                          const char* first_sunday = "2020-01-05") {
    vflow::panel::FlowPanel p;
    p.countries = countries;
    p.values = values;
    for (Eigen::Index w = 0; w < values.cols(); ++w)
        p.week_starts.push_back(day(first_sunday) + w * vflow::kSecondsPerWeek);
    return p;
}

// Minimal classification covering the codes tests use.
inline vflow::ingest::CountryClassification tiny_classification() {
    using vflow::ingest::IncomeGroup;
    vflow::ingest::CountryClassification cls;
    auto add = [&](const char* code, IncomeGroup g, bool oecd) {
        vflow::ingest::CountryClassification::Entry e;
        e.name = code;
        e.group = g;
        e.oecd = oecd;
        cls.add(code, e);
    };
    add("US", IncomeGroup::High, true);
    add("GB", IncomeGroup::High, true);
    add("DE", IncomeGroup::High, true);
    add("JP", IncomeGroup::High, true);
    add("KR", IncomeGroup::High, true);
    add("SG", IncomeGroup::High, false);
    add("HK", IncomeGroup::High, false);
    add("CN", IncomeGroup::UpperMiddle, false);
    add("BR", IncomeGroup::UpperMiddle, false);
    add("TR", IncomeGroup::UpperMiddle, true);
    add("NG", IncomeGroup::LowerMiddle, false);
    add("IN", IncomeGroup::LowerMiddle, false);
    add("KE", IncomeGroup::LowerMiddle, false);
    add("ET", IncomeGroup::Low, false);
    add("AF", IncomeGroup::Low, false);
    return cls;
}

// Unique scratch directory under the build tree; removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("vflow-test-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace fixtures
