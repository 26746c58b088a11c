#pragma once

#include "cropt/domain.hpp"

#include <span>

namespace cropt {

enum class RiskMode { Robust, Intermediate, Stochastic };

// Tail probability of the objective distribution. alpha = 1 optimizes the
// expected yield over all scenarios; alpha <= 1/|S| optimizes the worst
// scenario.
struct RiskSpec {
    double alpha = 1.0;

    explicit RiskSpec(double a);
    RiskSpec() = default;

    RiskMode mode(std::size_t n_scenarios) const;
};

// Discrete CVaR of the worst (low-value) alpha-tail: sort scenarios by value
// ascending, accumulate probability mass up to alpha with a fractional
// boundary atom, return the mass-weighted mean of that tail. Equals the
// weighted mean at alpha = 1 and the minimum at alpha <= mass of the single
// worst scenario. Ties in value order break by scenario index.
double cvar(std::span<const double> values, std::span<const double> probabilities, double alpha);

// CVaR of a per-scenario yield vector under the set's probabilities.
double aggregate(std::span<const double> per_scenario, const ScenarioSet& set, const RiskSpec& spec);

const char* to_string(RiskMode mode);

} // namespace cropt
