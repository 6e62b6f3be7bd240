#include <doctest.h>

#include "vflow/calendar.hpp"

using namespace vflow;

TEST_CASE("civil conversion round-trips across decades") {
    for (std::int64_t z = days_from_civil(1960, 1, 1); z <= days_from_civil(2040, 12, 31);
         z += 17) {
        const CivilDate c = civil_from_days(z);
        CHECK(days_from_civil(c.year, c.month, c.day) == z);
    }
    CHECK(days_from_civil(1970, 1, 1) == 0);
    CHECK(days_from_civil(2020, 1, 1) == 18262);
    CHECK(days_from_civil(2020, 2, 29) == 18321);  // leap day exists
}

TEST_CASE("iso-8601 parsing and formatting") {
    CHECK(parse_date("2020-01-01") == 1577836800);
    CHECK(parse_date("2020-04-09") == 1586390400);
    CHECK(parse_iso8601("2020-04-09T06:19:00Z") == 1586390400 + 6 * 3600 + 19 * 60);
    CHECK(parse_iso8601("2020-04-09 06:19:00") == parse_iso8601("2020-04-09T06:19:00Z"));
    CHECK(format_iso8601(1586390400) == "2020-04-09T00:00:00Z");
    CHECK(format_date(1586390400) == "2020-04-09");

    for (std::int64_t t : {0LL, 1586412345LL, 1577836800LL, 951782400LL})
        CHECK(parse_iso8601(format_iso8601(t)) == t);

    CHECK_THROWS(parse_iso8601("2020-13-01"));
    CHECK_THROWS(parse_iso8601("2020-02-30"));
    CHECK_THROWS(parse_iso8601("2020-04-09T25:00:00Z"));
    CHECK_THROWS(parse_iso8601("not a date"));
    CHECK_THROWS(parse_iso8601("2020-04-09trailing"));
    CHECK_THROWS(parse_date("2020-04-09T06:19:00Z"));
}

TEST_CASE("sunday week convention") {
    CHECK(weekday_of(parse_date("2020-04-05")) == 0);  // Sunday
    CHECK(weekday_of(parse_date("2020-04-09")) == 4);  // Thursday
    CHECK(weekday_of(parse_date("1970-01-01")) == 4);  // epoch was a Thursday

    CHECK(week_start_sunday(parse_date("2020-04-09")) == parse_date("2020-04-05"));
    CHECK(week_start_sunday(parse_date("2020-04-05")) == parse_date("2020-04-05"));
    CHECK(week_start_sunday(parse_iso8601("2020-04-11T23:59:59Z")) == parse_date("2020-04-05"));
    CHECK(week_start_sunday(parse_date("2020-04-12")) == parse_date("2020-04-12"));

    // Negative timestamps floor toward the past, not toward zero.
    CHECK(week_start_sunday(parse_date("1969-12-31")) == parse_date("1969-12-28"));
    CHECK(weekday_of(parse_date("1969-12-28")) == 0);

    // The study window holds 23 Sundays.
    int sundays = 0;
    for (std::int64_t d = parse_date("2020-01-01"); d <= parse_date("2020-06-07");
         d += kSecondsPerDay)
        if (weekday_of(d) == 0) ++sundays;
    CHECK(sundays == 23);
}
