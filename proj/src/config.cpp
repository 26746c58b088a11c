#include "cropt/config.hpp"

#include "cropt/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace cropt {

using json = nlohmann::ordered_json;

double AlphaSpec::resolve(std::size_t n_scenarios) const {
    detail::require(n_scenarios > 0, "cannot resolve alpha without scenarios");
    return robust ? 1.0 / static_cast<double>(n_scenarios) : value;
}

std::string AlphaSpec::label() const {
    if (robust) return "robust";
    return json(value).dump();
}

AlphaSpec AlphaSpec::parse(const json& j) {
    AlphaSpec a;
    if (j.is_string()) {
        detail::require<ConfigError>(j.get<std::string>() == "robust",
                                     "alpha must be a number in (0,1] or \"robust\"");
        a.robust = true;
        return a;
    }
    detail::require<ConfigError>(j.is_number(), "alpha must be a number in (0,1] or \"robust\"");
    a.value = j.get<double>();
    detail::require<ConfigError>(std::isfinite(a.value) && a.value > 0 && a.value <= 1,
                                 "alpha " + j.dump() + " outside (0, 1]");
    return a;
}

PboConfig PboTemplate::instantiate(const DecisionSpace& space, const RiskSpec& risk,
                                   std::uint64_t cell_seed, int scenario_jobs) const {
    PboConfig cfg;
    cfg.n_instances = n_instances;
    cfg.max_iterations = max_iterations;
    cfg.risk = risk;
    cfg.initial_design_size = initial_design_size;
    cfg.sharing_mode = sharing_mode;
    cfg.n_starts = n_starts;
    cfg.refit_every = refit_every;
    cfg.scenario_jobs = scenario_jobs;
    cfg.init_seed = seed_combine(cell_seed, "initial-design");
    if (instances.empty()) {
        cfg.instances = PboConfig::default_instances(space.dims(), n_instances, cell_seed);
    } else {
        detail::require<ConfigError>(instances.size() == static_cast<std::size_t>(n_instances),
                                     "pbo.instances length must equal n_instances");
        for (std::size_t i = 0; i < instances.size(); ++i)
            cfg.instances.push_back(
                {instances[i].first, instances[i].second, seed_combine(cell_seed, i + 1)});
    }
    return cfg;
}

std::string ExperimentConfig::group_for(const std::string& location) const {
    const auto it = group_of.find(location);
    return it == group_of.end() ? location : it->second;
}

DecisionVector ExperimentConfig::default_baseline(const DecisionSpace& space) {
    // conventional management near the middle of each range
    DecisionVector x;
    x.levels.resize(space.dims());
    for (std::size_t i = 0; i < space.dims(); ++i)
        x.levels[i] = static_cast<int>(space.variable(i).grid.size() / 2);
    return x;
}

namespace {

KernelSpec kernel_from_json(const json& j, std::size_t dims) {
    KernelSpec k = KernelSpec::defaults(dims);
    if (j.contains("family")) k.family = kernel_family_from_string(j.at("family").get<std::string>());
    if (j.contains("lengthscales")) {
        const auto& ls = j.at("lengthscales");
        if (ls.is_number()) {
            k.lengthscales.assign(dims, ls.get<double>());
        } else {
            k.lengthscales = ls.get<std::vector<double>>();
        }
    }
    if (j.contains("signal_variance")) k.signal_variance = j.at("signal_variance").get<double>();
    if (j.contains("noise_variance")) k.noise_variance = j.at("noise_variance").get<double>();
    k.validate(dims);
    return k;
}

AcquisitionSpec acquisition_from_json(const json& j) {
    AcquisitionSpec a;
    if (j.contains("family"))
        a.family = acquisition_family_from_string(j.at("family").get<std::string>());
    if (j.contains("kappa")) a.kappa = j.at("kappa").get<double>();
    if (j.contains("xi")) a.xi = j.at("xi").get<double>();
    a.validate();
    return a;
}

DecisionSpace space_from_json(const json& j) {
    std::vector<VariableSpec> vars;
    for (const auto& v : j) {
        detail::require<ConfigError>(v.contains("name") && v.contains("grid"),
                                     "space variables need 'name' and 'grid'");
        vars.push_back({v.at("name").get<std::string>(), v.at("grid").get<std::vector<double>>()});
    }
    return DecisionSpace(std::move(vars));
}

// baseline given either as {"variable": physical value, ...} or {"levels": [...]}
DecisionVector baseline_from_json(const json& j, const DecisionSpace& space) {
    DecisionVector x = ExperimentConfig::default_baseline(space);
    if (j.contains("levels")) {
        x.levels = j.at("levels").get<std::vector<int>>();
        x.validate(space);
        return x;
    }
    for (const auto& [name, value] : j.items()) {
        const std::size_t i = space.index_of(name);
        const auto& grid = space.variable(i).grid;
        const double target = value.get<double>();
        std::size_t nearest = 0;
        for (std::size_t g = 1; g < grid.size(); ++g)
            if (std::abs(grid[g] - target) < std::abs(grid[nearest] - target)) nearest = g;
        detail::require<ConfigError>(std::abs(grid[nearest] - target) < 1e-9,
                                     "baseline value " + value.dump() + " is not a grid level of '" +
                                         name + "'");
        x.levels[i] = static_cast<int>(nearest);
    }
    return x;
}

} // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    try {
        ExperimentConfig cfg;
        cfg.space = j.contains("space") ? space_from_json(j.at("space"))
                                        : DecisionSpace::corn_belt_default();
        if (j.contains("weather_dir")) cfg.weather_dir = j.at("weather_dir").get<std::string>();
        detail::require<ConfigError>(j.contains("locations") && !j.at("locations").empty(),
                                     "config needs a nonempty 'locations' list");
        cfg.locations = j.at("locations").get<std::vector<std::string>>();
        detail::require<ConfigError>(j.contains("test_years") && !j.at("test_years").empty(),
                                     "config needs a nonempty 'test_years' list");
        cfg.test_years = j.at("test_years").get<std::vector<int>>();

        if (j.contains("strategies")) {
            for (const auto& s : j.at("strategies"))
                cfg.strategies.push_back(StrategySpec::parse(s.get<std::string>()));
        } else {
            cfg.strategies = {StrategySpec::strategy1(), StrategySpec::strategy2(),
                              StrategySpec::strategy3()};
        }
        if (j.contains("alphas")) {
            for (const auto& a : j.at("alphas")) cfg.alphas.push_back(AlphaSpec::parse(a));
        } else {
            cfg.alphas = {AlphaSpec{true, 0}, AlphaSpec{false, 0.25}, AlphaSpec{false, 0.5},
                          AlphaSpec{false, 0.75}, AlphaSpec{false, 1.0}};
        }

        if (j.contains("pbo")) {
            const auto& p = j.at("pbo");
            if (p.contains("n_instances")) cfg.pbo.n_instances = p.at("n_instances").get<int>();
            if (p.contains("max_iterations")) cfg.pbo.max_iterations = p.at("max_iterations").get<int>();
            if (p.contains("initial_design_size"))
                cfg.pbo.initial_design_size = p.at("initial_design_size").get<int>();
            if (p.contains("sharing_mode"))
                cfg.pbo.sharing_mode = sharing_mode_from_string(p.at("sharing_mode").get<std::string>());
            if (p.contains("n_starts")) cfg.pbo.n_starts = p.at("n_starts").get<int>();
            if (p.contains("refit_every")) cfg.pbo.refit_every = p.at("refit_every").get<int>();
            if (p.contains("instances")) {
                for (const auto& inst : p.at("instances"))
                    cfg.pbo.instances.emplace_back(
                        kernel_from_json(inst.value("kernel", json::object()), cfg.space.dims()),
                        acquisition_from_json(inst.value("acquisition", json::object())));
            }
        }

        if (j.contains("evaluator")) {
            const auto& e = j.at("evaluator");
            const auto type = e.value("type", std::string("surrogate"));
            if (type == "surrogate") {
                cfg.evaluator.kind = EvaluatorConfig::Kind::Surrogate;
                cfg.evaluator.surrogate_params_file = e.value("params_file", std::string());
            } else if (type == "external") {
                cfg.evaluator.kind = EvaluatorConfig::Kind::External;
                detail::require<ConfigError>(e.contains("template") && e.contains("command") &&
                                                 e.contains("output_rule"),
                                             "external evaluator needs template, command, output_rule");
                cfg.evaluator.external.template_path = e.at("template").get<std::string>();
                cfg.evaluator.external.command = e.at("command").get<std::vector<std::string>>();
                cfg.evaluator.external.output_rule = e.at("output_rule").get<std::string>();
                cfg.evaluator.external.timeout_seconds = e.value("timeout_seconds", 120.0);
                cfg.evaluator.external.cache_dir = e.value("cache_dir", std::string());
                cfg.evaluator.external.validate();
            } else {
                throw ConfigError("evaluator type must be 'surrogate' or 'external'");
            }
        }

        cfg.baseline = j.contains("baseline_decision")
                           ? baseline_from_json(j.at("baseline_decision"), cfg.space)
                           : ExperimentConfig::default_baseline(cfg.space);

        if (j.contains("location_groups")) {
            for (const auto& [group, locs] : j.at("location_groups").items())
                for (const auto& loc : locs) cfg.group_of[loc.get<std::string>()] = group;
        }

        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
        detail::require<ConfigError>(cfg.jobs >= 1, "jobs must be at least 1");
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    detail::require<ConfigError>(in.good(), "cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return experiment_config_from_json(j);
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    json vars = json::array();
    for (const auto& v : cfg.space.variables())
        vars.push_back(json{{"name", v.name}, {"grid", v.grid}});

    json strategies = json::array();
    for (const auto& s : cfg.strategies) strategies.push_back(s.name());
    json alphas = json::array();
    for (const auto& a : cfg.alphas) {
        if (a.robust) {
            alphas.push_back("robust");
        } else {
            alphas.push_back(a.value);
        }
    }

    json pbo{{"n_instances", cfg.pbo.n_instances},
             {"max_iterations", cfg.pbo.max_iterations},
             {"initial_design_size", cfg.pbo.initial_design_size},
             {"sharing_mode", to_string(cfg.pbo.sharing_mode)},
             {"n_starts", cfg.pbo.n_starts},
             {"refit_every", cfg.pbo.refit_every}};
    if (!cfg.pbo.instances.empty()) {
        json insts = json::array();
        for (const auto& [k, a] : cfg.pbo.instances)
            insts.push_back(json{{"kernel", kernel_to_json(k)}, {"acquisition", acquisition_to_json(a)}});
        pbo["instances"] = insts;
    }

    json evaluator;
    if (cfg.evaluator.kind == EvaluatorConfig::Kind::Surrogate) {
        evaluator = json{{"type", "surrogate"}};
        if (!cfg.evaluator.surrogate_params_file.empty())
            evaluator["params_file"] = cfg.evaluator.surrogate_params_file;
    } else {
        evaluator = json{{"type", "external"},
                         {"template", cfg.evaluator.external.template_path},
                         {"command", cfg.evaluator.external.command},
                         {"output_rule", cfg.evaluator.external.output_rule},
                         {"timeout_seconds", cfg.evaluator.external.timeout_seconds},
                         {"cache_dir", cfg.evaluator.external.cache_dir}};
    }

    json groups = json::object();
    {
        std::map<std::string, std::vector<std::string>> by_group;
        for (const auto& [loc, group] : cfg.group_of) by_group[group].push_back(loc);
        for (const auto& [group, locs] : by_group) groups[group] = locs;
    }

    // output_dir and jobs shape the run, not its results; keeping them out of
    // the echo makes reports from different output locations byte-comparable
    return json{{"space", vars},
                {"weather_dir", cfg.weather_dir},
                {"locations", cfg.locations},
                {"test_years", cfg.test_years},
                {"strategies", strategies},
                {"alphas", alphas},
                {"pbo", pbo},
                {"evaluator", evaluator},
                {"baseline_decision", json{{"levels", cfg.baseline.levels}}},
                {"location_groups", groups},
                {"master_seed", cfg.master_seed}};
}

} // namespace cropt
