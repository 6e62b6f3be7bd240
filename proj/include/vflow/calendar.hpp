#pragma once

#include <cstdint>
#include <string>

// Civil-calendar helpers on UTC epoch seconds. Weeks start Sunday 00:00 UTC.

namespace vflow {

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerWeek = 7 * kSecondsPerDay;

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// algorithm); valid far beyond any timestamp we handle.
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
};

constexpr CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), m, d};
}

// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS[Z]" (space accepted for 'T').
// Anything else is an error; `what` names the offending field.
std::int64_t parse_iso8601(const std::string& text);

// Date-only convenience: "YYYY-MM-DD" -> midnight UTC.
std::int64_t parse_date(const std::string& text);

std::string format_iso8601(std::int64_t ts);
std::string format_date(std::int64_t ts);

// 0 = Sunday ... 6 = Saturday.
constexpr int weekday_of(std::int64_t ts) {
    std::int64_t days = ts / kSecondsPerDay;
    if (ts % kSecondsPerDay < 0) --days;  // floor toward past midnights
    return static_cast<int>(((days % 7) + 7 + 4) % 7);  // 1970-01-01 was a Thursday
}

// Midnight UTC of the Sunday at or before ts.
constexpr std::int64_t week_start_sunday(std::int64_t ts) {
    std::int64_t days = ts / kSecondsPerDay;
    if (ts % kSecondsPerDay < 0) --days;
    const std::int64_t dow = ((days % 7) + 7 + 4) % 7;
    return (days - dow) * kSecondsPerDay;
}

}  // namespace vflow
