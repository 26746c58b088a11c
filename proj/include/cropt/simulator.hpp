#pragma once

#include "cropt/domain.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace cropt {

// Crop-model contract. Implementations must be pure per (x, s): repeated
// calls return identical, finite, nonnegative yields.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual double evaluate(const DecisionVector& x, const Scenario& s) const = 0;
};

// Parameters of the deterministic closed-form yield model. The reference
// values live in data/surrogate_params.json; reference() mirrors that file.
struct SurrogateParams {
    double base_yield = 230.0; // bu/ac at all response factors = 1

    // maturity: GDD requirement per relative-maturity day, yield potential
    // slope, and the shortfall cliff
    double gdd_base_temp = 10.0;
    double gdd_ceiling_temp = 30.0;
    double gdd_requirement_intercept = 600.0;
    double gdd_requirement_per_rm = 8.0;
    int season_end_doy = 304; // Oct 31
    double rm_potential_gain = 0.10;
    double rm_reference = 100.0;
    double rm_span = 15.0;
    double frost_cliff = 3.0;

    // water: Gaussian response to rain in the 60 days after planting
    int water_window_days = 60;
    double water_optimum_mm = 220.0;
    double water_width_mm = 160.0;
    double water_floor = 0.15;

    // nitrogen: Michaelis-Menten in effective amount; leaching from rain
    // between fertilizing and planting+30d; timing optimum shifts earlier
    // in wet springs
    double soil_n = 40.0;
    double n_half_saturation = 120.0;
    double n_floor = 0.25;
    double leach_rate_per_mm = 0.0012;
    int leach_window_days = 30;
    double timing_gap_optimum = 10.0;  // days after planting when dry
    double timing_wet_shift = 22.0;    // days earlier per water_optimum of early rain
    double timing_width_days = 38.0;
    double timing_floor = 0.55;

    // density: concave quadratic, optimum shifted upward by water
    double density_optimum_base = 8.5; // plants/m^2
    double density_optimum_water_shift = 3.0;
    double density_curvature = 0.006;

    std::string yield_unit = "bu/ac";

    static SurrogateParams reference();
    static SurrogateParams from_json_file(const std::string& path);
    std::string to_json() const;
};

// Deterministic desk-scale crop model. Yield is the base yield scaled by
// maturity, water, nitrogen, and density response factors, each bounded in
// [0, 1.5]; everything derives from the scenario's daily series and the
// decision's physical values.
double surrogate_yield(const DecisionVector& x, const Scenario& s, const SurrogateParams& p,
                       const DecisionSpace& space);

class SurrogateEvaluator final : public Evaluator {
public:
    SurrogateEvaluator(SurrogateParams params, const DecisionSpace& space);

    double evaluate(const DecisionVector& x, const Scenario& s) const override;
    const SurrogateParams& params() const { return params_; }

private:
    struct ScenarioSeries; // prefix sums per scenario, built once

    const ScenarioSeries& series_for(const Scenario& s) const;

    SurrogateParams params_;
    DecisionSpace space_;
    std::size_t i_planting_, i_n_amount_, i_n_date_, i_density_, i_cultivar_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::string, std::shared_ptr<const ScenarioSeries>> cache_;
};

// Template-substitution adapter for file-driven external crop models.
struct ExternalAdapterConfig {
    std::string template_path;        // input template with {{name}} placeholders
    std::vector<std::string> command; // argv; placeholders substituted per call
    std::string output_rule;          // "csv:<file>:<column>" or "regex:<pattern>"
    double timeout_seconds = 120.0;
    std::string cache_dir;            // empty disables caching
    std::string work_root;            // empty: system temp

    void validate() const;
};

class ExternalEvaluator final : public Evaluator {
public:
    explicit ExternalEvaluator(ExternalAdapterConfig config, const DecisionSpace& space);

    double evaluate(const DecisionVector& x, const Scenario& s) const override;

    // Number of external processes actually launched (cache misses).
    std::uint64_t invocations() const { return invocations_.load(); }

private:
    std::string cache_key(const DecisionVector& x, const Scenario& s) const;

    ExternalAdapterConfig config_;
    DecisionSpace space_;
    std::string template_text_;
    std::uint64_t template_hash_ = 0;
    mutable std::atomic<std::uint64_t> invocations_{0};
};

} // namespace cropt
