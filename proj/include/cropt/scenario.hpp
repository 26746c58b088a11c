#pragma once

#include "cropt/domain.hpp"

#include <map>
#include <span>
#include <string>

namespace cropt {

// Historical daily weather for one location, keyed by calendar year. Every
// stored year is complete (365/366 days).
struct WeatherArchive {
    std::string location_id;
    std::map<int, std::vector<WeatherDay>> years;

    void validate() const;
    int first_year() const;
    int last_year() const;
};

// Reads the `date,radiation,maxt,mint,rain` CSV (one file per location,
// multiple years concatenated) and validates completeness.
WeatherArchive load_weather_csv(const std::string& path, const std::string& location_id);

enum class StrategyLabel { Strategy1, Strategy2, Strategy3, Custom };

// Decision time within the target year. Strategy 1 decides on March 1 with
// the season ahead unknown, strategy 2 on May 1, strategy 3 on November 1
// with the whole season observed (the benchmark).
struct StrategySpec {
    StrategyLabel label = StrategyLabel::Strategy1;
    int month = 3;
    int day = 1;

    Date decision_date(int year) const { return Date{year, month, day}; }
    std::string name() const;

    static StrategySpec strategy1() { return {StrategyLabel::Strategy1, 3, 1}; }
    static StrategySpec strategy2() { return {StrategyLabel::Strategy2, 5, 1}; }
    static StrategySpec strategy3() { return {StrategyLabel::Strategy3, 11, 1}; }
    static StrategySpec custom(int month, int day) { return {StrategyLabel::Custom, month, day}; }
    static StrategySpec parse(const std::string& text);

    void validate() const;
};

// One scenario per archive year strictly before the target year: observed
// weather up to the decision date, the donor year's weather after it, with
// leap days dropped or duplicated so the spliced series stays calendar
// complete. Uniform probabilities. Strategy 3 with a fully observed year
// collapses to the single observed scenario.
ScenarioSet build_scenarios(const WeatherArchive& archive, int target_year,
                            std::span<const WeatherDay> observed, const StrategySpec& strategy);

struct PrecipStats {
    double mean = 0;
    double std = 0; // population standard deviation
    double sum = 0;
    double p25 = 0, p50 = 0, p75 = 0;
    double max = 0;
};

// Daily-rain summary in the style of growing-season precipitation tables;
// percentiles interpolate linearly between order statistics.
PrecipStats precip_stats(std::span<const WeatherDay> series);

} // namespace cropt
