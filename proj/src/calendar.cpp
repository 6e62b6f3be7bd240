#include "vflow/calendar.hpp"

#include <cctype>
#include <cstdio>

#include "vflow/fail.hpp"

namespace vflow {

namespace {

bool all_digits(const std::string& s, std::size_t from, std::size_t n) {
    if (from + n > s.size()) return false;
    for (std::size_t i = from; i < from + n; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

int num(const std::string& s, std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

}  // namespace

std::int64_t parse_iso8601(const std::string& text) {
    const auto bad = [&](const char* why) {
        fail("calendar.parse_iso8601: bad timestamp \"", text, "\": ", why);
    };
    if (!all_digits(text, 0, 4) || text.size() < 10 || text[4] != '-' || text[7] != '-' ||
        !all_digits(text, 5, 2) || !all_digits(text, 8, 2))
        bad("expected YYYY-MM-DD prefix");
    const int y = num(text, 0, 4);
    const int mo = num(text, 5, 2);
    const int d = num(text, 8, 2);
    if (mo < 1 || mo > 12) bad("month out of range");
    static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dmax = mdays[mo - 1];
    if (mo == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) dmax = 29;
    if (d < 1 || d > dmax) bad("day out of range");

    int hh = 0, mi = 0, ss = 0;
    if (text.size() > 10) {
        if (text[10] != 'T' && text[10] != ' ') bad("expected 'T' date/time separator");
        if (text.size() < 19 || text[13] != ':' || text[16] != ':' || !all_digits(text, 11, 2) ||
            !all_digits(text, 14, 2) || !all_digits(text, 17, 2))
            bad("expected HH:MM:SS time");
        hh = num(text, 11, 2);
        mi = num(text, 14, 2);
        ss = num(text, 17, 2);
        if (hh > 23 || mi > 59 || ss > 60) bad("time out of range");
        if (text.size() == 20) {
            if (text[19] != 'Z') bad("only 'Z' zone suffix supported");
        } else if (text.size() != 19) {
            bad("trailing characters");
        }
    } else if (text.size() != 10) {
        bad("trailing characters");
    }
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kSecondsPerDay +
           hh * 3600 + mi * 60 + ss;
}

std::int64_t parse_date(const std::string& text) {
    require(text.size() == 10, "calendar.parse_date: expected YYYY-MM-DD, got \"", text, "\"");
    return parse_iso8601(text);
}

std::string format_iso8601(std::int64_t ts) {
    std::int64_t days = ts / kSecondsPerDay;
    std::int64_t rem = ts % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    const CivilDate cd = civil_from_days(days);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", cd.year, cd.month, cd.day,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::string format_date(std::int64_t ts) {
    std::int64_t days = ts / kSecondsPerDay;
    if (ts % kSecondsPerDay < 0) --days;
    const CivilDate cd = civil_from_days(days);
    char buf[12];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", cd.year, cd.month, cd.day);
    return buf;
}

}  // namespace vflow
