#pragma once

#include "cropt/pbo.hpp"
#include "cropt/scenario.hpp"
#include "cropt/simulator.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cropt {

// Risk level as written in the config: a number in (0,1] or the literal
// "robust", which expands to 1/|S| once the scenario set is known.
struct AlphaSpec {
    bool robust = false;
    double value = 1.0;

    double resolve(std::size_t n_scenarios) const;
    std::string label() const;
    static AlphaSpec parse(const nlohmann::ordered_json& j);
};

struct EvaluatorConfig {
    enum class Kind { Surrogate, External };
    Kind kind = Kind::Surrogate;
    std::string surrogate_params_file; // empty: built-in reference parameters
    ExternalAdapterConfig external;
};

// Per-cell PBO settings; risk and seeds are filled in per experiment cell.
struct PboTemplate {
    int n_instances = 4;
    int max_iterations = 50;
    int initial_design_size = 0; // 0: max(5, 2*dims)
    SharingMode sharing_mode = SharingMode::SequentialWithinIteration;
    int n_starts = 16;
    int refit_every = 0;
    // optional explicit kernel/acquisition pairs; seeds still derive from the cell
    std::vector<std::pair<KernelSpec, AcquisitionSpec>> instances;

    PboConfig instantiate(const DecisionSpace& space, const RiskSpec& risk,
                          std::uint64_t cell_seed, int scenario_jobs) const;
};

struct ExperimentConfig {
    DecisionSpace space; // defaults to the corn-belt grid
    std::string weather_dir = "weather";
    std::vector<std::string> locations;
    std::vector<int> test_years;
    std::vector<StrategySpec> strategies;
    std::vector<AlphaSpec> alphas;
    PboTemplate pbo;
    EvaluatorConfig evaluator;
    DecisionVector baseline;
    std::map<std::string, std::string> group_of; // location -> frequency-table group
    std::string output_dir = "out";
    std::uint64_t master_seed = 1;
    int jobs = 1;

    std::string group_for(const std::string& location) const;
    static DecisionVector default_baseline(const DecisionSpace& space);
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& cfg);

} // namespace cropt
