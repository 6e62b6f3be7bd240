#include <doctest.h>

#include <string>

#include "support/fixtures.hpp"
#include "vflow/csv.hpp"
#include "vflow/ingest.hpp"

using namespace vflow;
using namespace vflow::ingest;

namespace {

const char* kSampleLedger =
    "trade_id,timestamp_iso8601,size_satoshi,fiat_currency,fiat_price,user_country,"
    "advertiser_country,payment_method\n"
    "a1,2020-04-09T06:19:00Z,421585,USD,8000,US,NG,gift-card\n"
    "a2,2020-04-09T06:33:00Z,0.00421585,NGN,8010.5,NG,US,bank-transfer\n"
    "a3,2020-04-09T05:00:00Z,100000000,USD,8000,US,US,cash-deposit\n";

}  // namespace

TEST_CASE("ledger parsing sorts and converts sizes exactly") {
    const auto trades = parse_ledger(kSampleLedger);
    REQUIRE(trades.size() == 3);
    CHECK(trades[0].trade_id == "a3");  // earliest first
    CHECK(trades[1].trade_id == "a1");
    CHECK(trades[2].trade_id == "a2");
    CHECK(trades[1].size_satoshi == 421585);
    CHECK(trades[2].size_satoshi == 421585);  // "0.00421585" BTC, exact
    CHECK(trades[0].size_satoshi == 100000000);
    CHECK(trades[1].timestamp == parse_iso8601("2020-04-09T06:19:00Z"));
    CHECK(trades[2].fiat_price == doctest::Approx(8010.5));
    CHECK(trades[1].user_country == "US");
    CHECK(trades[1].advertiser_country == "NG");
}

TEST_CASE("size field accepts integers and decimal amounts") {
    CHECK(parse_size_field("421585", "t") == 421585);
    CHECK(parse_size_field("0.00421585", "t") == 421585);
    CHECK(parse_size_field("1", "t") == 1);
    CHECK(parse_size_field("1.0", "t") == 100000000);
    CHECK(parse_size_field("2.5", "t") == 250000000);
    CHECK(parse_size_field("0.00000001", "t") == 1);
    CHECK(parse_size_field("0.000000010", "t") == 1);  // trailing zeros fine

    CHECK_THROWS_WITH_AS(parse_size_field("0.000000001", "t"),
                         doctest::Contains("sub-satoshi"), std::runtime_error);
    CHECK_THROWS(parse_size_field("", "t"));
    CHECK_THROWS(parse_size_field("abc", "t"));
    CHECK_THROWS(parse_size_field("1.2.3", "t"));
    CHECK_THROWS(parse_size_field("-5", "t"));
}

TEST_CASE("ledger round trip is byte-identical") {
    const auto trades = parse_ledger(kSampleLedger);
    const std::string canon = write_ledger(trades);
    CHECK(write_ledger(parse_ledger(canon)) == canon);
    CHECK(canon.find("421585") != std::string::npos);
    CHECK(canon.find("2020-04-09T06:19:00Z") != std::string::npos);
}

TEST_CASE("ledger errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_ledger("a,b\n"), doctest::Contains("line 1"),
                         std::runtime_error);
    // Duplicate id on line 3 of the payload.
    std::string dup = "x,2020-01-01T00:00:00Z,5,USD,1,US,US,m\n";
    dup += "y,2020-01-01T00:00:01Z,5,USD,1,US,US,m\n";
    dup += "x,2020-01-01T00:00:02Z,5,USD,1,US,US,m\n";
    CHECK_THROWS_WITH_AS(parse_ledger(dup), doctest::Contains("duplicate"),
                         std::runtime_error);
    CHECK_THROWS(parse_ledger("x,2020-01-01T00:00:00Z,0,USD,1,US,US,m\n"));   // zero size
    CHECK_THROWS(parse_ledger("x,2020-01-01T00:00:00Z,5,USD,-1,US,US,m\n"));  // bad price
}

TEST_CASE("rate table is last-observation-carried-forward") {
    RateTable r;
    r.timestamps = {100, 200, 300};
    r.usd_per_btc = {1.0, 2.0, 3.0};
    CHECK(r.rate_at(100) == 1.0);
    CHECK(r.rate_at(150) == 1.0);
    CHECK(r.rate_at(200) == 2.0);
    CHECK(r.rate_at(299) == 2.0);
    CHECK(r.rate_at(5000) == 3.0);
    CHECK_THROWS(r.rate_at(99));

    const std::string text = write_rates(r);
    const RateTable back = parse_rates(text);
    CHECK(back.timestamps == r.timestamps);
    CHECK(write_rates(back) == text);

    CHECK_THROWS(parse_rates("2020-01-02T00:00:00Z,5\n2020-01-01T00:00:00Z,6\n"));  // order
    CHECK_THROWS(parse_rates("2020-01-01T00:00:00Z,0\n"));                          // positive
}

TEST_CASE("usd value applies the rate in force") {
    const auto rates = fixtures::flat_rates(0, 1000000, 8000.0);
    CHECK(usd_value(421585, 500, rates) == doctest::Approx(33.7268).epsilon(1e-12));
    CHECK(usd_value(100000000, 500, rates) == doctest::Approx(8000.0));
    RateTable two;
    two.timestamps = {0, 100};
    two.usd_per_btc = {10000.0, 20000.0};
    CHECK(usd_value(100000000, 50, two) == doctest::Approx(10000.0));
    CHECK(usd_value(100000000, 150, two) == doctest::Approx(20000.0));
}

TEST_CASE("classification fixture covers the full panel universe") {
    const auto cls = load_classification(std::string(VFLOW_SOURCE_DIR) +
                                         "/data/income_classification.csv");
    CHECK(cls.size() == 213);
    CHECK(cls.income_group("NG") == IncomeGroup::LowerMiddle);
    CHECK(cls.income_group("US") == IncomeGroup::High);
    CHECK(cls.income_group("CN") == IncomeGroup::UpperMiddle);
    CHECK(cls.income_group("ET") == IncomeGroup::Low);
    CHECK(cls.is_oecd("US"));
    CHECK(cls.is_oecd("TR"));     // OECD but not high-income
    CHECK(!cls.is_oecd("SG"));    // high-income but not OECD
    CHECK_THROWS_WITH_AS(cls.at("XX"), doctest::Contains("XX"), std::runtime_error);

    int high = 0, oecd = 0;
    for (const auto& [code, e] : cls.entries()) {
        (void)code;
        high += e.group == IncomeGroup::High;
        oecd += e.oecd;
    }
    CHECK(high == 79);
    CHECK(oecd == 36);
}

TEST_CASE("classification parser rejects malformed rows") {
    CHECK_THROWS(parse_classification("US,United States,VeryHigh,1\n"));
    CHECK_THROWS(parse_classification("US,United States,High,2\n"));
    CHECK_THROWS(parse_classification("US,United States,High,1\nUS,Again,Low,0\n"));
    const auto ok = parse_classification(
        "country_code,country_name,income_group,oecd\nUS,United States,High,1\n");
    CHECK(ok.size() == 1);
}
