#pragma once

#include "cropt/date.hpp"
#include "cropt/errors.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cropt {

// One management variable and its admissible levels. Levels carry physical
// units: day-of-year for dates, kg/ha for N amount, plants/m^2 for density,
// relative-maturity days for cultivar.
struct VariableSpec {
    std::string name;
    std::vector<double> grid; // strictly increasing, length >= 2, finite

    void validate() const;
};

// The finite design grid the optimizer searches.
class DecisionSpace {
public:
    DecisionSpace() = default;
    explicit DecisionSpace(std::vector<VariableSpec> variables);

    std::size_t dims() const { return variables_.size(); }
    const VariableSpec& variable(std::size_t i) const { return variables_[i]; }
    const std::vector<VariableSpec>& variables() const { return variables_; }
    std::size_t index_of(const std::string& name) const; // throws DomainError if absent
    std::uint64_t cardinality() const;

    // The paper's five-variable instance: planting date Apr 15 + 7k (10 levels),
    // N amount 0..400 step 20, N date Apr 1 + 7k (10 levels), plant density
    // 2..14 step 2, cultivar 100/105/110/115 RM. 58,800 grid points.
    static DecisionSpace corn_belt_default();

private:
    std::vector<VariableSpec> variables_;
};

// One grid point, stored as per-variable grid indices.
struct DecisionVector {
    std::vector<int> levels;

    std::vector<double> values(const DecisionSpace& space) const;
    bool operator==(const DecisionVector& other) const { return levels == other.levels; }

    void validate(const DecisionSpace& space) const;
};

// Maps a decision to the unit cube: coordinate i = index_i / (len_i - 1).
std::vector<double> encode(const DecisionVector& x, const DecisionSpace& space);

// Nearest-grid-index inverse of encode. Coordinates may stray outside [0,1]
// by at most 1e-9 (clamped); larger violations are a DomainError. Exact
// midpoints round toward the lower index.
DecisionVector decode(std::span<const double> u, const DecisionSpace& space);

// Mixed-radix rank of a decision in its space; bijective on the grid.
std::uint64_t grid_rank(const DecisionVector& x, const DecisionSpace& space);
DecisionVector decision_from_rank(std::uint64_t rank, const DecisionSpace& space);

struct WeatherDay {
    Date date;
    double radiation = 0; // MJ/m^2
    double max_temp = 0;  // degC
    double min_temp = 0;  // degC
    double rain = 0;      // mm

    void validate() const;
};

// One complete candidate weather realization for the target year.
struct Scenario {
    std::string id;
    int source_year = 0;
    std::vector<WeatherDay> days; // contiguous, covering one calendar year

    void validate() const;
};

class ScenarioSet {
public:
    ScenarioSet() = default;
    ScenarioSet(std::vector<Scenario> scenarios, std::vector<double> probabilities);
    static ScenarioSet uniform(std::vector<Scenario> scenarios);

    std::size_t size() const { return scenarios_.size(); }
    const Scenario& scenario(std::size_t i) const { return scenarios_[i]; }
    const std::vector<Scenario>& scenarios() const { return scenarios_; }
    const std::vector<double>& probabilities() const { return probabilities_; }

private:
    std::vector<Scenario> scenarios_;
    std::vector<double> probabilities_; // nonnegative, sum to 1 within 1e-12
};

// One optimizer evaluation: the decision, its per-scenario yields, and the
// risk-aggregated objective.
struct EvaluationRecord {
    DecisionVector x;
    std::vector<double> per_scenario;
    double y = 0;
};

// Append-only evaluation history with incumbent tracking. Ties on y keep the
// earliest record.
class Dataset {
public:
    void append(EvaluationRecord record);

    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }
    const std::vector<EvaluationRecord>& records() const { return records_; }
    const EvaluationRecord& record(std::size_t i) const { return records_[i]; }

    std::size_t incumbent_index() const;
    const EvaluationRecord& incumbent() const { return records_[incumbent_index()]; }

    bool contains(const DecisionVector& x) const { return seen_.count(x.levels) > 0; }

private:
    std::vector<EvaluationRecord> records_;
    std::size_t incumbent_ = static_cast<std::size_t>(-1);
    std::set<std::vector<int>> seen_;
};

} // namespace cropt
