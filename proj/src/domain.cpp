#include "cropt/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cropt {

void VariableSpec::validate() const {
    detail::require(!name.empty(), "variable name must be nonempty");
    detail::require(grid.size() >= 2, "variable '" + name + "': grid needs at least 2 levels");
    for (double v : grid)
        detail::require(std::isfinite(v), "variable '" + name + "': non-finite grid level");
    for (std::size_t i = 1; i < grid.size(); ++i)
        detail::require(grid[i - 1] < grid[i], "variable '" + name + "': grid must be strictly increasing");
}

DecisionSpace::DecisionSpace(std::vector<VariableSpec> variables) : variables_(std::move(variables)) {
    detail::require(!variables_.empty(), "decision space needs at least one variable");
    std::set<std::string> names;
    for (const auto& v : variables_) {
        v.validate();
        detail::require(names.insert(v.name).second, "duplicate variable name '" + v.name + "'");
    }
}

std::size_t DecisionSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i].name == name) return i;
    throw DomainError("no variable named '" + name + "'");
}

std::uint64_t DecisionSpace::cardinality() const {
    std::uint64_t n = 1;
    for (const auto& v : variables_) n *= v.grid.size();
    return n;
}

DecisionSpace DecisionSpace::corn_belt_default() {
    auto weekly = [](int start_doy, int count) {
        std::vector<double> g(count);
        for (int k = 0; k < count; ++k) g[k] = start_doy + 7 * k;
        return g;
    };
    std::vector<VariableSpec> vars;
    vars.push_back({"planting_date", weekly(105, 10)}); // Apr 15 .. Jun 17
    std::vector<double> n_amount(21);
    for (int k = 0; k <= 20; ++k) n_amount[k] = 20.0 * k;
    vars.push_back({"n_amount", n_amount});
    vars.push_back({"n_date", weekly(91, 10)}); // Apr 1 .. Jun 3
    vars.push_back({"density", {2, 4, 6, 8, 10, 12, 14}});
    vars.push_back({"cultivar_rm", {100, 105, 110, 115}});
    return DecisionSpace(std::move(vars));
}

void DecisionVector::validate(const DecisionSpace& space) const {
    detail::require(levels.size() == space.dims(), "decision has wrong number of variables");
    for (std::size_t i = 0; i < levels.size(); ++i)
        detail::require(levels[i] >= 0 && levels[i] < static_cast<int>(space.variable(i).grid.size()),
                        "decision index out of range for variable '" + space.variable(i).name + "'");
}

std::vector<double> DecisionVector::values(const DecisionSpace& space) const {
    validate(space);
    std::vector<double> out(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) out[i] = space.variable(i).grid[levels[i]];
    return out;
}

std::vector<double> encode(const DecisionVector& x, const DecisionSpace& space) {
    x.validate(space);
    std::vector<double> u(space.dims());
    for (std::size_t i = 0; i < space.dims(); ++i)
        u[i] = static_cast<double>(x.levels[i]) / static_cast<double>(space.variable(i).grid.size() - 1);
    return u;
}

DecisionVector decode(std::span<const double> u, const DecisionSpace& space) {
    detail::require(u.size() == space.dims(), "coordinate has wrong dimension");
    DecisionVector x;
    x.levels.resize(space.dims());
    for (std::size_t i = 0; i < space.dims(); ++i) {
        double c = u[i];
        detail::require(c >= -1e-9 && c <= 1.0 + 1e-9,
                        "coordinate " + std::to_string(c) + " outside the unit cube");
        c = std::clamp(c, 0.0, 1.0);
        const int n = static_cast<int>(space.variable(i).grid.size());
        // round half toward the lower index
        int idx = static_cast<int>(std::ceil(c * (n - 1) - 0.5));
        x.levels[i] = std::clamp(idx, 0, n - 1);
    }
    return x;
}

std::uint64_t grid_rank(const DecisionVector& x, const DecisionSpace& space) {
    x.validate(space);
    std::uint64_t rank = 0;
    for (std::size_t i = 0; i < space.dims(); ++i)
        rank = rank * space.variable(i).grid.size() + static_cast<std::uint64_t>(x.levels[i]);
    return rank;
}

DecisionVector decision_from_rank(std::uint64_t rank, const DecisionSpace& space) {
    detail::require(rank < space.cardinality(), "grid rank out of range");
    DecisionVector x;
    x.levels.resize(space.dims());
    for (std::size_t i = space.dims(); i-- > 0;) {
        const std::uint64_t len = space.variable(i).grid.size();
        x.levels[i] = static_cast<int>(rank % len);
        rank /= len;
    }
    return x;
}

void WeatherDay::validate() const {
    detail::require(is_valid(date), "invalid calendar date " + to_iso(date));
    detail::require(std::isfinite(radiation) && std::isfinite(max_temp) && std::isfinite(min_temp) &&
                        std::isfinite(rain),
                    "non-finite weather value on " + to_iso(date));
    detail::require(max_temp >= min_temp, "max_temp < min_temp on " + to_iso(date));
    detail::require(rain >= 0, "negative rain on " + to_iso(date));
    detail::require(radiation >= 0, "negative radiation on " + to_iso(date));
}

void Scenario::validate() const {
    detail::require(!days.empty(), "scenario '" + id + "' has no days");
    const int year = days.front().date.year;
    detail::require(static_cast<int>(days.size()) == days_in_year(year),
                    "scenario '" + id + "' does not cover a full calendar year");
    Date expected{year, 1, 1};
    for (const auto& d : days) {
        d.validate();
        detail::require(d.date == expected,
                        "scenario '" + id + "' has a gap or duplicate at " + to_iso(expected));
        expected = next_day(expected);
    }
}

ScenarioSet::ScenarioSet(std::vector<Scenario> scenarios, std::vector<double> probabilities)
    : scenarios_(std::move(scenarios)), probabilities_(std::move(probabilities)) {
    detail::require(!scenarios_.empty(), "scenario set must be nonempty");
    detail::require(probabilities_.size() == scenarios_.size(), "one probability per scenario required");
    double sum = 0;
    for (double p : probabilities_) {
        detail::require(p >= 0 && std::isfinite(p), "scenario probabilities must be nonnegative");
        sum += p;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "scenario probabilities must sum to 1");
    for (const auto& s : scenarios_) s.validate();
}

ScenarioSet ScenarioSet::uniform(std::vector<Scenario> scenarios) {
    const std::size_t n = scenarios.size();
    detail::require(n > 0, "scenario set must be nonempty");
    std::vector<double> p(n, 1.0 / static_cast<double>(n));
    // nudge the last weight so the sum is exactly 1 in floating point
    double sum = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) sum += p[i];
    p[n - 1] = 1.0 - sum;
    return ScenarioSet(std::move(scenarios), std::move(p));
}

void Dataset::append(EvaluationRecord record) {
    seen_.insert(record.x.levels);
    records_.push_back(std::move(record));
    if (incumbent_ == static_cast<std::size_t>(-1) || records_.back().y > records_[incumbent_].y)
        incumbent_ = records_.size() - 1;
}

std::size_t Dataset::incumbent_index() const {
    detail::require(!records_.empty(), "dataset is empty");
    return incumbent_;
}

} // namespace cropt
