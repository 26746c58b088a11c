#include "cropt/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace cropt {

void WeatherArchive::validate() const {
    detail::require(!years.empty(), "weather archive '" + location_id + "' is empty");
    for (const auto& [year, days] : years) {
        Date expected{year, 1, 1};
        for (const auto& d : days) {
            d.validate();
            detail::require<IngestionError>(d.date == expected, location_id + ": expected " +
                                                                    to_iso(expected) + ", found " +
                                                                    to_iso(d.date));
            expected = next_day(expected);
        }
        detail::require<IngestionError>(static_cast<int>(days.size()) == days_in_year(year),
                                        location_id + ": year " + std::to_string(year) +
                                            " is missing days from " + to_iso(expected) + " on");
    }
}

int WeatherArchive::first_year() const {
    detail::require(!years.empty(), "weather archive is empty");
    return years.begin()->first;
}

int WeatherArchive::last_year() const {
    detail::require(!years.empty(), "weather archive is empty");
    return years.rbegin()->first;
}

std::string StrategySpec::name() const {
    switch (label) {
    case StrategyLabel::Strategy1: return "strategy-1";
    case StrategyLabel::Strategy2: return "strategy-2";
    case StrategyLabel::Strategy3: return "strategy-3";
    case StrategyLabel::Custom: {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "custom-%02d-%02d", month, day);
        return buf;
    }
    }
    return "?";
}

void StrategySpec::validate() const {
    switch (label) {
    case StrategyLabel::Strategy1:
        detail::require(month == 3 && day == 1, "strategy-1 decides on March 1");
        return;
    case StrategyLabel::Strategy2:
        detail::require(month == 5 && day == 1, "strategy-2 decides on May 1");
        return;
    case StrategyLabel::Strategy3:
        detail::require(month == 11 && day == 1, "strategy-3 decides on November 1");
        return;
    case StrategyLabel::Custom:
        detail::require(month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(2001, month),
                        "invalid custom decision date");
        return;
    }
    throw DomainError("invalid strategy label");
}

StrategySpec StrategySpec::parse(const std::string& text) {
    if (text == "strategy-1") return strategy1();
    if (text == "strategy-2") return strategy2();
    if (text == "strategy-3") return strategy3();
    if (text.rfind("custom-", 0) == 0 && text.size() == 12 && text[9] == '-') {
        const int month = std::stoi(text.substr(7, 2));
        const int day = std::stoi(text.substr(10, 2));
        auto s = custom(month, day);
        s.validate();
        return s;
    }
    throw DomainError("unknown strategy '" + text + "' (use strategy-1/2/3 or custom-MM-DD)");
}

namespace {

// Donor days of `year` re-dated into target_year from `from` (inclusive)
// through Dec 31, with the leap-day drop/duplicate rule.
void splice_tail(std::vector<WeatherDay>& out, const std::vector<WeatherDay>& donor, int donor_year,
                 int target_year, Date from) {
    for (Date d = from; d.year == target_year; d = next_day(d)) {
        WeatherDay wd;
        if (d.month == 2 && d.day == 29 && !is_leap_year(donor_year)) {
            wd = donor[static_cast<std::size_t>(day_of_year(Date{donor_year, 2, 28})) - 1];
        } else {
            // Feb 29 of a leap donor is skipped automatically: no target date maps to it
            wd = donor[static_cast<std::size_t>(day_of_year(Date{donor_year, d.month, d.day})) - 1];
        }
        wd.date = d;
        out.push_back(wd);
    }
}

} // namespace

ScenarioSet build_scenarios(const WeatherArchive& archive, int target_year,
                            std::span<const WeatherDay> observed, const StrategySpec& strategy) {
    strategy.validate();
    const Date decision = strategy.decision_date(target_year);

    // validate the observed prefix: contiguous from Jan 1, at least up to the
    // decision date, never beyond the target year
    Date expected{target_year, 1, 1};
    for (const auto& d : observed) {
        d.validate();
        detail::require<IngestionError>(d.date == expected,
                                        "observed series: expected " + to_iso(expected) + ", found " +
                                            to_iso(d.date));
        expected = next_day(expected);
    }
    detail::require<IngestionError>(expected >= decision,
                                    "observed series ends before the decision date; missing " +
                                        to_iso(expected) + " .. " +
                                        to_iso(Date{target_year, decision.month, decision.day}));

    // fully observed year: the known-weather benchmark, a single scenario
    if (strategy.label == StrategyLabel::Strategy3 &&
        static_cast<int>(observed.size()) == days_in_year(target_year)) {
        Scenario s;
        s.id = "observed-" + std::to_string(target_year);
        s.source_year = target_year;
        s.days.assign(observed.begin(), observed.end());
        return ScenarioSet::uniform({std::move(s)});
    }

    const std::size_t prefix_len = static_cast<std::size_t>(day_of_year(decision)) - 1;

    std::vector<Scenario> scenarios;
    for (const auto& [year, days] : archive.years) {
        if (year >= target_year) continue;
        Scenario s;
        s.id = "splice-" + std::to_string(target_year) + "-from-" + std::to_string(year);
        s.source_year = year;
        s.days.assign(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(prefix_len));
        splice_tail(s.days, days, year, target_year, decision);
        scenarios.push_back(std::move(s));
    }
    detail::require(!scenarios.empty(), "archive has no years before " + std::to_string(target_year));
    return ScenarioSet::uniform(std::move(scenarios));
}

PrecipStats precip_stats(std::span<const WeatherDay> series) {
    detail::require(!series.empty(), "precip_stats needs a nonempty series");
    std::vector<double> rain(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) rain[i] = series[i].rain;

    PrecipStats st;
    for (double r : rain) st.sum += r;
    const double n = static_cast<double>(rain.size());
    st.mean = st.sum / n;
    double ss = 0;
    for (double r : rain) ss += (r - st.mean) * (r - st.mean);
    st.std = std::sqrt(ss / n);

    std::sort(rain.begin(), rain.end());
    st.max = rain.back();
    auto percentile = [&](double p) {
        const double h = p * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, rain.size() - 1);
        return rain[lo] + (h - std::floor(h)) * (rain[hi] - rain[lo]);
    };
    st.p25 = percentile(0.25);
    st.p50 = percentile(0.50);
    st.p75 = percentile(0.75);
    return st;
}

} // namespace cropt
