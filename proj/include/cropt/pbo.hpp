#pragma once

#include "cropt/acquisition.hpp"
#include "cropt/gp.hpp"
#include "cropt/risk.hpp"
#include "cropt/simulator.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace cropt {

// Kernel, acquisition, and seed of one BO instance. The N instances differ
// so the ensemble is robust to any single kernel/acquisition choice.
struct BoInstanceConfig {
    KernelSpec kernel;
    AcquisitionSpec acquisition;
    std::uint64_t seed = 0;
};

enum class SharingMode {
    // instance n sees instances 1..n-1 of the same iteration (the literal
    // loop nesting)
    SequentialWithinIteration,
    // all instances of iteration t fit against the dataset as of the start
    // of t; results land at the iteration barrier
    SnapshotPerIteration,
};

struct PboConfig {
    int n_instances = 4;
    int max_iterations = 50;
    RiskSpec risk{1.0};
    std::vector<BoInstanceConfig> instances; // length n_instances
    int initial_design_size = 0;             // 0: max(5, 2*dims)
    SharingMode sharing_mode = SharingMode::SequentialWithinIteration;
    std::uint64_t init_seed = 1;
    int n_starts = 16;
    int refit_every = 0; // lengthscale refit cadence; 0 disables
    int scenario_jobs = 1;

    void validate(const DecisionSpace& space) const;

    // (squared-exponential, EI), (matern-5/2, EI), (matern-5/2, UCB k=2),
    // (squared-exponential, PI xi=0.01), cycling when N > 4.
    static std::vector<BoInstanceConfig> default_instances(std::size_t dims, int n,
                                                           std::uint64_t base_seed);
    int resolved_initial_design(const DecisionSpace& space) const;
};

struct FailedProposal {
    int iteration = 0;
    int instance = 0;
    DecisionVector x;
    std::string error;
};

struct PboResult {
    EvaluationRecord best;
    Dataset dataset;
    std::vector<double> trace; // incumbent objective after each iteration
    std::uint64_t evaluation_count = 0;
    bool grid_exhausted = false;
    std::vector<FailedProposal> failures;
};

// Runs the optimizer loop: seeded Latin-hypercube initial design, then for
// each iteration and each BO instance fit -> propose -> evaluate all
// scenarios -> CVaR-aggregate -> append and update the incumbent. A failed
// scenario evaluation drops the proposal; an iteration where at least half
// the instances fail aborts the run.
PboResult run_pbo(const PboConfig& config, const DecisionSpace& space, const ScenarioSet& scenarios,
                  const Evaluator& evaluator);

// Everything needed to reproduce and audit a run: config echo, space,
// scenario ids and probabilities, all evaluations, trace, and the incumbent.
nlohmann::ordered_json run_manifest(const PboConfig& config, const DecisionSpace& space,
                                    const ScenarioSet& scenarios, const PboResult& result);

nlohmann::ordered_json kernel_to_json(const KernelSpec& k);
nlohmann::ordered_json acquisition_to_json(const AcquisitionSpec& a);

const char* to_string(SharingMode mode);
SharingMode sharing_mode_from_string(const std::string& name);

} // namespace cropt
