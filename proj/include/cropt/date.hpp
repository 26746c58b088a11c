#pragma once

#include "cropt/errors.hpp"

#include <compare>
#include <cstdio>
#include <string>

namespace cropt {

// Proleptic Gregorian calendar date. Small and header-only on purpose:
// the toolkit only needs day arithmetic within one year and ISO round-trips.
struct Date {
    int year = 0;
    int month = 1; // 1..12
    int day = 1;   // 1..31

    auto operator<=>(const Date&) const = default;
};

inline bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

inline int days_in_year(int year) { return is_leap_year(year) ? 366 : 365; }

inline int days_in_month(int year, int month) {
    static constexpr int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return lengths[month - 1];
}

inline bool is_valid(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

// 1-based ordinal day within the year.
inline int day_of_year(const Date& d) {
    int doy = d.day;
    for (int m = 1; m < d.month; ++m) doy += days_in_month(d.year, m);
    return doy;
}

inline Date date_from_doy(int year, int doy) {
    detail::require(doy >= 1 && doy <= days_in_year(year),
                    "day-of-year " + std::to_string(doy) + " out of range for " + std::to_string(year));
    int m = 1;
    while (doy > days_in_month(year, m)) {
        doy -= days_in_month(year, m);
        ++m;
    }
    return Date{year, m, doy};
}

inline Date next_day(Date d) {
    if (d.day < days_in_month(d.year, d.month)) {
        ++d.day;
    } else if (d.month < 12) {
        ++d.month;
        d.day = 1;
    } else {
        ++d.year;
        d.month = 1;
        d.day = 1;
    }
    return d;
}

inline std::string to_iso(const Date& d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

inline Date parse_iso_date(const std::string& text) {
    Date d;
    char trailing = 0;
    int got = std::sscanf(text.c_str(), "%4d-%2d-%2d%c", &d.year, &d.month, &d.day, &trailing);
    detail::require<IngestionError>(got == 3 && is_valid(d), "not an ISO-8601 date: '" + text + "'");
    return d;
}

} // namespace cropt
