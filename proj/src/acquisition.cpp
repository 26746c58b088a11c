#include "cropt/acquisition.hpp"

#include "cropt/lbfgs_box.hpp"
#include "cropt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cropt {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

} // namespace

void AcquisitionSpec::validate() const {
    if (family == AcquisitionFamily::UpperConfidenceBound)
        detail::require(std::isfinite(kappa) && kappa > 0, "UCB needs kappa > 0");
    detail::require(std::isfinite(xi) && xi >= 0, "xi must be nonnegative");
}

double expected_improvement(double mean, double sigma, double best, double xi) {
    const double delta = mean - best - xi;
    if (sigma == 0) return std::max(0.0, delta);
    const double z = delta / sigma;
    return delta * norm_cdf(z) + sigma * norm_pdf(z);
}

double upper_confidence_bound(double mean, double sigma, double kappa) {
    return mean + kappa * sigma;
}

double probability_of_improvement(double mean, double sigma, double best, double xi) {
    const double delta = mean - best - xi;
    if (sigma == 0) return delta > 0 ? 1.0 : (delta < 0 ? 0.0 : 0.5);
    return norm_cdf(delta / sigma);
}

double acquisition_value(const AcquisitionSpec& spec, const GpModel& model, std::span<const double> u,
                         double incumbent_y) {
    detail::require(std::isfinite(incumbent_y), "incumbent objective must be finite");
    const auto p = model.predict(u);
    const double sigma = std::sqrt(p.variance);
    switch (spec.family) {
    case AcquisitionFamily::ExpectedImprovement:
        return expected_improvement(p.mean, sigma, incumbent_y, spec.xi);
    case AcquisitionFamily::UpperConfidenceBound:
        return upper_confidence_bound(p.mean, sigma, spec.kappa);
    case AcquisitionFamily::ProbabilityOfImprovement:
        return probability_of_improvement(p.mean, sigma, incumbent_y, spec.xi);
    }
    return 0;
}

ContinuousMax maximize_acquisition_continuous(const AcquisitionSpec& spec, const GpModel& model,
                                              double incumbent_y, std::uint64_t seed, int n_starts,
                                              const std::vector<double>* incumbent_u) {
    spec.validate();
    detail::require(n_starts >= 1, "n_starts must be at least 1");
    const std::size_t d = model.dims();

    auto objective = [&](const std::vector<double>& x) {
        return acquisition_value(spec, model, x, incumbent_y);
    };

    Rng rng(seed);
    std::vector<std::vector<double>> starts;
    starts.reserve(static_cast<std::size_t>(n_starts) + 1);
    for (int s = 0; s < n_starts; ++s) {
        std::vector<double> x(d);
        for (auto& v : x) v = rng.uniform();
        starts.push_back(std::move(x));
    }
    if (incumbent_u) starts.push_back(*incumbent_u);

    ContinuousMax best;
    best.value = -std::numeric_limits<double>::infinity();
    for (const auto& x0 : starts) {
        const auto r = maximize_box_lbfgs(objective, x0);
        if (r.f > best.value) {
            best.value = r.f;
            best.point = r.x;
            best.converged = r.converged;
        }
    }
    return best;
}

namespace {

bool is_known(const Dataset& data, const std::set<std::vector<int>>* excluded,
              const DecisionVector& x) {
    return data.contains(x) || (excluded && excluded->count(x.levels) > 0);
}

// Uniformly random grid point not yet known, or nothing if none left.
std::optional<DecisionVector> random_unexplored(const DecisionSpace& space, const Dataset& data,
                                                const std::set<std::vector<int>>* excluded,
                                                Rng& rng) {
    const std::uint64_t total = space.cardinality();
    const std::uint64_t known = data.size() + (excluded ? excluded->size() : 0);
    if (known >= total) return std::nullopt;
    // Rejection sampling is fast while the grid is mostly unexplored.
    if (known * 2 < total) {
        for (int tries = 0; tries < 256; ++tries) {
            auto x = decision_from_rank(rng.integer(total), space);
            if (!is_known(data, excluded, x)) return x;
        }
    }
    std::vector<std::uint64_t> open;
    open.reserve(static_cast<std::size_t>(total - known));
    for (std::uint64_t r = 0; r < total; ++r) {
        auto x = decision_from_rank(r, space);
        if (!is_known(data, excluded, x)) open.push_back(r);
    }
    return decision_from_rank(open[rng.integer(open.size())], space);
}

} // namespace

Proposal maximize_acquisition(const AcquisitionSpec& spec, const GpModel& model,
                              const DecisionSpace& space, const Dataset& data, std::uint64_t seed,
                              int n_starts, const std::set<std::vector<int>>* excluded) {
    spec.validate();
    detail::require(n_starts >= 1, "n_starts must be at least 1");
    if (data.size() + (excluded ? excluded->size() : 0) >= space.cardinality()) return {};

    const std::size_t d = space.dims();
    const double incumbent_y = data.incumbent().y;
    const auto incumbent_u = encode(data.incumbent().x, space);

    auto objective = [&](const std::vector<double>& x) {
        return acquisition_value(spec, model, x, incumbent_y);
    };

    Rng rng(seed);
    std::vector<std::vector<double>> starts;
    for (int s = 0; s < n_starts; ++s) {
        std::vector<double> x(d);
        for (auto& v : x) v = rng.uniform();
        starts.push_back(std::move(x));
    }
    starts.push_back(incumbent_u);

    std::vector<LbfgsResult> results;
    results.reserve(starts.size());
    for (const auto& x0 : starts) results.push_back(maximize_box_lbfgs(objective, x0));

    const auto* best =
        &*std::max_element(results.begin(), results.end(),
                           [](const LbfgsResult& a, const LbfgsResult& b) { return a.f < b.f; });

    // Candidate grid points: every start's rounding, plus the floor/ceil
    // neighbors of the best continuous optimum (rounding alone can step off
    // the best grid point on coarse grids).
    std::map<std::vector<int>, double> candidates; // levels -> acquisition at the grid point
    auto consider = [&](const DecisionVector& x) {
        if (candidates.count(x.levels)) return;
        candidates.emplace(x.levels, objective(encode(x, space)));
    };
    for (const auto& r : results) consider(decode(r.x, space));
    std::vector<std::vector<int>> corner_choices(d);
    for (std::size_t i = 0; i < d; ++i) {
        const int n = static_cast<int>(space.variable(i).grid.size());
        const double t = best->x[i] * (n - 1);
        const int lo = std::clamp(static_cast<int>(std::floor(t)), 0, n - 1);
        const int hi = std::clamp(static_cast<int>(std::ceil(t)), 0, n - 1);
        corner_choices[i] = (lo == hi) ? std::vector<int>{lo} : std::vector<int>{lo, hi};
    }
    std::vector<int> levels(d, 0);
    std::vector<std::size_t> pick(d, 0);
    while (true) {
        for (std::size_t i = 0; i < d; ++i) levels[i] = corner_choices[i][pick[i]];
        consider(DecisionVector{levels});
        std::size_t i = 0;
        for (; i < d; ++i) {
            if (++pick[i] < corner_choices[i].size()) break;
            pick[i] = 0;
        }
        if (i == d) break;
    }

    // Rank candidates by acquisition (levels as deterministic tiebreak) and
    // take the best one not already evaluated.
    std::vector<std::pair<double, const std::vector<int>*>> ranked;
    ranked.reserve(candidates.size());
    for (const auto& [lv, val] : candidates) ranked.emplace_back(val, &lv);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [val, lv] : ranked) {
        DecisionVector x{*lv};
        if (!is_known(data, excluded, x)) return {x, val};
    }

    // All rounded candidates are known: fall back to a random unexplored point.
    auto x = random_unexplored(space, data, excluded, rng);
    if (!x) return {};
    return {*x, objective(encode(*x, space))};
}

const char* to_string(AcquisitionFamily family) {
    switch (family) {
    case AcquisitionFamily::ExpectedImprovement: return "expected-improvement";
    case AcquisitionFamily::UpperConfidenceBound: return "upper-confidence-bound";
    case AcquisitionFamily::ProbabilityOfImprovement: return "probability-of-improvement";
    }
    return "?";
}

AcquisitionFamily acquisition_family_from_string(const std::string& name) {
    if (name == "expected-improvement") return AcquisitionFamily::ExpectedImprovement;
    if (name == "upper-confidence-bound") return AcquisitionFamily::UpperConfidenceBound;
    if (name == "probability-of-improvement") return AcquisitionFamily::ProbabilityOfImprovement;
    throw DomainError("unknown acquisition family '" + name + "'");
}

} // namespace cropt
