#pragma once

#include "cropt/domain.hpp"
#include "cropt/gp.hpp"

#include <optional>
#include <span>
#include <string>

namespace cropt {

enum class AcquisitionFamily { ExpectedImprovement, UpperConfidenceBound, ProbabilityOfImprovement };

struct AcquisitionSpec {
    AcquisitionFamily family = AcquisitionFamily::ExpectedImprovement;
    double kappa = 2.0; // UCB weight, > 0
    double xi = 0.0;    // EI/PI exploration offset, >= 0

    void validate() const;
};

// Closed forms. EI and PI take the stated sigma -> 0 limits; sigma is a
// standard deviation, not a variance.
double expected_improvement(double mean, double sigma, double best, double xi);
double upper_confidence_bound(double mean, double sigma, double kappa);
double probability_of_improvement(double mean, double sigma, double best, double xi);

// Acquisition over the GP posterior at u, improvement measured against
// incumbent_y.
double acquisition_value(const AcquisitionSpec& spec, const GpModel& model, std::span<const double> u,
                         double incumbent_y);

struct ContinuousMax {
    std::vector<double> point;
    double value = 0;
    bool converged = false;
};

// Multi-start bound-constrained quasi-Newton search over [0,1]^d: n_starts
// seeded uniform starts plus the optional incumbent, best result wins. Never
// fails; if no start converges the best evaluated point is returned.
ContinuousMax maximize_acquisition_continuous(const AcquisitionSpec& spec, const GpModel& model,
                                              double incumbent_y, std::uint64_t seed, int n_starts,
                                              const std::vector<double>* incumbent_u = nullptr);

struct Proposal {
    std::optional<DecisionVector> point; // empty when the grid is exhausted
    double acquisition = 0;
    bool exhausted() const { return !point.has_value(); }
};

// Continuous search followed by grid rounding with a novelty ladder:
// candidates are the decoded optima of every start (plus the floor/ceil
// neighbors of the best one), ranked by acquisition at the grid point;
// points already in the dataset are skipped, then a uniformly random
// unexplored grid point, and finally the exhaustion signal. `excluded`
// optionally blacklists additional grid points (e.g. failed evaluations);
// it must be disjoint from the dataset.
Proposal maximize_acquisition(const AcquisitionSpec& spec, const GpModel& model,
                              const DecisionSpace& space, const Dataset& data, std::uint64_t seed,
                              int n_starts,
                              const std::set<std::vector<int>>* excluded = nullptr);

const char* to_string(AcquisitionFamily family);
AcquisitionFamily acquisition_family_from_string(const std::string& name);

} // namespace cropt
