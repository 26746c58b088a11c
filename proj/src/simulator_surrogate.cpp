#include "cropt/simulator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cropt {

namespace {

using json = nlohmann::ordered_json;

double clamp_factor(double f) { return std::clamp(f, 0.0, 1.5); }

struct Derived {
    // prefix sums indexed by day-of-year (1-based; [0] = 0)
    std::vector<double> rain_cum;
    std::vector<double> gdd_cum;
};

Derived derive(const Scenario& s, const SurrogateParams& p) {
    Derived d;
    const std::size_t n = s.days.size();
    d.rain_cum.resize(n + 1, 0.0);
    d.gdd_cum.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& day = s.days[i];
        d.rain_cum[i + 1] = d.rain_cum[i] + day.rain;
        const double mean = 0.5 * (day.max_temp + day.min_temp);
        const double unit = std::max(0.0, std::min(mean, p.gdd_ceiling_temp) - p.gdd_base_temp);
        d.gdd_cum[i + 1] = d.gdd_cum[i] + unit;
    }
    return d;
}

// sum over day-of-year range [from, to), clipped to the series
double range_sum(const std::vector<double>& cum, int from, int to) {
    const int n = static_cast<int>(cum.size()) - 1;
    from = std::clamp(from, 1, n + 1);
    to = std::clamp(to, 1, n + 1);
    if (to <= from) return 0.0;
    return cum[to - 1] - cum[from - 1];
}

struct Factors {
    double maturity, water, nitrogen, density;
};

Factors response_factors(double planting_doy, double n_amount, double n_doy, double density,
                         double cultivar_rm, const Derived& d, const SurrogateParams& p,
                         const std::string& scenario_id) {
    const int n_days = static_cast<int>(d.rain_cum.size()) - 1;
    const int planting = static_cast<int>(planting_doy);
    if (planting + p.water_window_days > n_days || planting >= p.season_end_doy)
        throw EvaluationError("scenario '" + scenario_id + "' too short for planting day " +
                              std::to_string(planting));

    // maturity: thermal time from planting to season end vs. cultivar demand
    const double gdd_avail = range_sum(d.gdd_cum, planting, p.season_end_doy + 1);
    const double gdd_req = p.gdd_requirement_intercept + p.gdd_requirement_per_rm * cultivar_rm;
    const double ratio = gdd_avail / gdd_req;
    const double attained = ratio >= 1.0 ? 1.0 : std::max(0.0, 1.0 - p.frost_cliff * (1.0 - ratio));
    const double potential = 1.0 + p.rm_potential_gain * (cultivar_rm - p.rm_reference) / p.rm_span;
    const double g_mat = clamp_factor(potential * attained);

    // water: rain in the window after planting, unimodal response
    const double w = range_sum(d.rain_cum, planting, planting + p.water_window_days);
    const double wz = (w - p.water_optimum_mm) / p.water_width_mm;
    const double g_water = clamp_factor(p.water_floor + (1.0 - p.water_floor) * std::exp(-wz * wz));

    // nitrogen: leaching over [fertilizing, planting+30d), timing optimum
    // moves earlier as the post-planting window gets wetter
    const int n_day = static_cast<int>(n_doy);
    const double leach_rain = range_sum(d.rain_cum, n_day, planting + p.leach_window_days);
    const double retained = std::exp(-p.leach_rate_per_mm * leach_rain);
    const double gap = n_doy - planting_doy;
    const double gap_opt = p.timing_gap_optimum - p.timing_wet_shift * (w / p.water_optimum_mm);
    const double tz = (gap - gap_opt) / p.timing_width_days;
    const double timing = p.timing_floor + (1.0 - p.timing_floor) * std::exp(-tz * tz);
    const double n_eff = n_amount * retained * timing + p.soil_n;
    const double mm = n_eff / (p.n_half_saturation + n_eff);
    const double g_n = clamp_factor(p.n_floor + (1.0 - p.n_floor) * mm);

    // density: concave quadratic, optimum pushed up by available water
    const double d_opt = p.density_optimum_base +
                         p.density_optimum_water_shift * std::clamp(w / p.water_optimum_mm - 1.0, -1.0, 1.0);
    const double g_dens = clamp_factor(1.0 - p.density_curvature * (density - d_opt) * (density - d_opt));

    return {g_mat, g_water, g_n, g_dens};
}

void assign_params(SurrogateParams& p, const json& j) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("base_yield", p.base_yield);
    get("gdd_base_temp", p.gdd_base_temp);
    get("gdd_ceiling_temp", p.gdd_ceiling_temp);
    get("gdd_requirement_intercept", p.gdd_requirement_intercept);
    get("gdd_requirement_per_rm", p.gdd_requirement_per_rm);
    get("season_end_doy", p.season_end_doy);
    get("rm_potential_gain", p.rm_potential_gain);
    get("rm_reference", p.rm_reference);
    get("rm_span", p.rm_span);
    get("frost_cliff", p.frost_cliff);
    get("water_window_days", p.water_window_days);
    get("water_optimum_mm", p.water_optimum_mm);
    get("water_width_mm", p.water_width_mm);
    get("water_floor", p.water_floor);
    get("soil_n", p.soil_n);
    get("n_half_saturation", p.n_half_saturation);
    get("n_floor", p.n_floor);
    get("leach_rate_per_mm", p.leach_rate_per_mm);
    get("leach_window_days", p.leach_window_days);
    get("timing_gap_optimum", p.timing_gap_optimum);
    get("timing_wet_shift", p.timing_wet_shift);
    get("timing_width_days", p.timing_width_days);
    get("timing_floor", p.timing_floor);
    get("density_optimum_base", p.density_optimum_base);
    get("density_optimum_water_shift", p.density_optimum_water_shift);
    get("density_curvature", p.density_curvature);
    get("yield_unit", p.yield_unit);
}

} // namespace

SurrogateParams SurrogateParams::reference() { return SurrogateParams{}; }

SurrogateParams SurrogateParams::from_json_file(const std::string& path) {
    std::ifstream in(path);
    detail::require<IngestionError>(in.good(), "cannot open surrogate parameter file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IngestionError("bad surrogate parameter file '" + path + "': " + e.what());
    }
    SurrogateParams p;
    assign_params(p, j);
    return p;
}

std::string SurrogateParams::to_json() const {
    json j;
    j["base_yield"] = base_yield;
    j["gdd_base_temp"] = gdd_base_temp;
    j["gdd_ceiling_temp"] = gdd_ceiling_temp;
    j["gdd_requirement_intercept"] = gdd_requirement_intercept;
    j["gdd_requirement_per_rm"] = gdd_requirement_per_rm;
    j["season_end_doy"] = season_end_doy;
    j["rm_potential_gain"] = rm_potential_gain;
    j["rm_reference"] = rm_reference;
    j["rm_span"] = rm_span;
    j["frost_cliff"] = frost_cliff;
    j["water_window_days"] = water_window_days;
    j["water_optimum_mm"] = water_optimum_mm;
    j["water_width_mm"] = water_width_mm;
    j["water_floor"] = water_floor;
    j["soil_n"] = soil_n;
    j["n_half_saturation"] = n_half_saturation;
    j["n_floor"] = n_floor;
    j["leach_rate_per_mm"] = leach_rate_per_mm;
    j["leach_window_days"] = leach_window_days;
    j["timing_gap_optimum"] = timing_gap_optimum;
    j["timing_wet_shift"] = timing_wet_shift;
    j["timing_width_days"] = timing_width_days;
    j["timing_floor"] = timing_floor;
    j["density_optimum_base"] = density_optimum_base;
    j["density_optimum_water_shift"] = density_optimum_water_shift;
    j["density_curvature"] = density_curvature;
    j["yield_unit"] = yield_unit;
    return j.dump(2) + "\n";
}

double surrogate_yield(const DecisionVector& x, const Scenario& s, const SurrogateParams& p,
                       const DecisionSpace& space) {
    const auto v = x.values(space);
    const Derived d = derive(s, p);
    const auto f = response_factors(v[space.index_of("planting_date")], v[space.index_of("n_amount")],
                                    v[space.index_of("n_date")], v[space.index_of("density")],
                                    v[space.index_of("cultivar_rm")], d, p, s.id);
    return p.base_yield * f.maturity * f.water * f.nitrogen * f.density;
}

struct SurrogateEvaluator::ScenarioSeries : Derived {};

SurrogateEvaluator::SurrogateEvaluator(SurrogateParams params, const DecisionSpace& space)
    : params_(std::move(params)), space_(space) {
    i_planting_ = space_.index_of("planting_date");
    i_n_amount_ = space_.index_of("n_amount");
    i_n_date_ = space_.index_of("n_date");
    i_density_ = space_.index_of("density");
    i_cultivar_ = space_.index_of("cultivar_rm");
}

const SurrogateEvaluator::ScenarioSeries& SurrogateEvaluator::series_for(const Scenario& s) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(s.id);
    if (it == cache_.end()) {
        auto series = std::make_shared<ScenarioSeries>();
        static_cast<Derived&>(*series) = derive(s, params_);
        it = cache_.emplace(s.id, std::move(series)).first;
    }
    return *it->second;
}

double SurrogateEvaluator::evaluate(const DecisionVector& x, const Scenario& s) const {
    x.validate(space_);
    const auto& series = series_for(s);
    auto g = [&](std::size_t i) { return space_.variable(i).grid[x.levels[i]]; };
    const auto f = response_factors(g(i_planting_), g(i_n_amount_), g(i_n_date_), g(i_density_),
                                    g(i_cultivar_), series, params_, s.id);
    return params_.base_yield * f.maturity * f.water * f.nitrogen * f.density;
}

} // namespace cropt
