#include "cropt/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cropt {

RiskSpec::RiskSpec(double a) : alpha(a) {
    detail::require(std::isfinite(a) && a > 0 && a <= 1, "alpha must lie in (0, 1]");
}

RiskMode RiskSpec::mode(std::size_t n_scenarios) const {
    detail::require(n_scenarios > 0, "mode needs a nonempty scenario set");
    if (alpha == 1.0) return RiskMode::Stochastic; // wins the |S| = 1 tie
    if (alpha <= 1.0 / static_cast<double>(n_scenarios)) return RiskMode::Robust;
    return RiskMode::Intermediate;
}

const char* to_string(RiskMode mode) {
    switch (mode) {
    case RiskMode::Robust: return "robust";
    case RiskMode::Intermediate: return "intermediate";
    case RiskMode::Stochastic: return "stochastic";
    }
    return "?";
}

double cvar(std::span<const double> values, std::span<const double> probabilities, double alpha) {
    detail::require(!values.empty(), "cvar needs at least one value");
    detail::require(values.size() == probabilities.size(), "values/probabilities length mismatch");
    detail::require(std::isfinite(alpha) && alpha > 0 && alpha <= 1, "alpha must lie in (0, 1]");
    double mass = 0;
    for (double p : probabilities) {
        detail::require(p >= 0 && std::isfinite(p), "probabilities must be nonnegative");
        mass += p;
    }
    detail::require(std::abs(mass - 1.0) <= 1e-9, "probabilities must sum to 1");

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    double remaining = alpha;
    double acc = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        const double w = std::min(probabilities[i], remaining);
        if (k == 0 && w >= remaining) return values[i]; // whole tail inside the worst atom
        acc += w * values[i];
        remaining -= w;
        if (remaining <= 0) break;
    }
    return acc / alpha;
}

double aggregate(std::span<const double> per_scenario, const ScenarioSet& set, const RiskSpec& spec) {
    detail::require(per_scenario.size() == set.size(), "per-scenario vector must match the scenario set");
    if (set.size() == 1) return per_scenario[0];
    return cvar(per_scenario, set.probabilities(), spec.alpha);
}

} // namespace cropt
