#include "cropt/experiment.hpp"
#include "cropt/pbo.hpp"
#include "cropt/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <span>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitEnvironment = 4;

struct CommonFlags {
    std::string config_path;
    std::string output_dir;
    std::string evaluator;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--output", flags.output_dir, "output directory (overrides config)");
    cmd->add_option("--evaluator", flags.evaluator, "surrogate|external (overrides config)")
        ->check(CLI::IsMember({"surrogate", "external"}));
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--jobs", flags.jobs, "max concurrent experiment cells");
}

cropt::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    auto cfg = cropt::load_experiment_config(flags.config_path);
    if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
    if (flags.seed_set) cfg.master_seed = flags.seed;
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    if (flags.evaluator == "surrogate") {
        cfg.evaluator.kind = cropt::EvaluatorConfig::Kind::Surrogate;
    } else if (flags.evaluator == "external") {
        if (cfg.evaluator.external.template_path.empty())
            throw cropt::ConfigError("--evaluator external requires an external adapter config");
        cfg.evaluator.kind = cropt::EvaluatorConfig::Kind::External;
    }
    return cfg;
}

int cmd_experiment(const CommonFlags& flags) {
    const auto cfg = load_with_overrides(flags);
    const json report = cropt::run_experiment(cfg);
    cropt::write_report_files(report, cfg.output_dir);
    for (const auto& v : cfg.space.variables())
        std::cout << cropt::render_frequency_table(report, v.name) << '\n';
    std::cout << "report written to " << (fs::path(cfg.output_dir) / "report.json").string() << '\n';
    if (cropt::report_has_failures(report)) {
        std::cerr << "warning: some cells failed; see report.json\n";
        return kExitPartial;
    }
    return kExitOk;
}

int cmd_optimize(const CommonFlags& flags, const std::string& location_flag, int year_flag,
                 const std::string& strategy_flag, const std::string& alpha_flag) {
    auto cfg = load_with_overrides(flags);
    const std::string location = location_flag.empty() ? cfg.locations.front() : location_flag;
    const int year = year_flag > 0 ? year_flag : cfg.test_years.front();
    const auto strategy =
        strategy_flag.empty() ? cfg.strategies.front() : cropt::StrategySpec::parse(strategy_flag);
    cropt::AlphaSpec alpha = cfg.alphas.front();
    if (!alpha_flag.empty()) {
        json parsed(alpha_flag);
        if (alpha_flag != "robust") {
            try {
                std::size_t used = 0;
                parsed = std::stod(alpha_flag, &used);
                if (used != alpha_flag.size()) throw std::invalid_argument(alpha_flag);
            } catch (const std::exception&) {
                throw cropt::ConfigError("--alpha must be a number in (0,1] or 'robust'");
            }
        }
        alpha = cropt::AlphaSpec::parse(parsed);
    }

    cfg.locations = {location};
    cfg.test_years = {year};
    cfg.strategies = {strategy};
    cfg.alphas = {alpha};

    const auto path = fs::path(cfg.weather_dir) / (location + ".csv");
    if (!fs::exists(path)) throw cropt::ArchiveError("missing weather archive " + path.string());
    const auto archive = cropt::load_weather_csv(path.string(), location);
    const auto observed_it = archive.years.find(year);
    if (observed_it == archive.years.end())
        throw cropt::ArchiveError("archive '" + location + "' lacks test year " + std::to_string(year));
    if (archive.first_year() >= year)
        throw cropt::ArchiveError("archive '" + location + "' has no years before " +
                                  std::to_string(year));
    const std::size_t observed_days =
        strategy.label == cropt::StrategyLabel::Strategy3
            ? observed_it->second.size()
            : static_cast<std::size_t>(cropt::day_of_year(strategy.decision_date(year))) - 1;
    const std::span<const cropt::WeatherDay> prefix(observed_it->second.data(), observed_days);
    const auto scenarios = cropt::build_scenarios(archive, year, prefix, strategy);

    const cropt::RiskSpec risk(alpha.resolve(scenarios.size()));
    std::uint64_t seed = cropt::seed_combine(cfg.master_seed, location);
    seed = cropt::seed_combine(seed, static_cast<std::uint64_t>(year));
    seed = cropt::seed_combine(seed, strategy.name());
    const auto pbo_cfg = cfg.pbo.instantiate(cfg.space, risk, seed, cfg.jobs);

    std::unique_ptr<cropt::Evaluator> evaluator;
    if (cfg.evaluator.kind == cropt::EvaluatorConfig::Kind::Surrogate) {
        const auto params = cfg.evaluator.surrogate_params_file.empty()
                                ? cropt::SurrogateParams::reference()
                                : cropt::SurrogateParams::from_json_file(cfg.evaluator.surrogate_params_file);
        evaluator = std::make_unique<cropt::SurrogateEvaluator>(params, cfg.space);
    } else {
        evaluator = std::make_unique<cropt::ExternalEvaluator>(cfg.evaluator.external, cfg.space);
    }

    const auto result = cropt::run_pbo(pbo_cfg, cfg.space, scenarios, *evaluator);
    const json manifest = cropt::run_manifest(pbo_cfg, cfg.space, scenarios, result);

    fs::create_directories(cfg.output_dir);
    const auto manifest_path = fs::path(cfg.output_dir) / "run_manifest.json";
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';

    std::cout << "best objective (" << cropt::to_string(risk.mode(scenarios.size())) << ", alpha "
              << risk.alpha << "): " << result.best.y << '\n';
    const auto values = result.best.x.values(cfg.space);
    for (std::size_t i = 0; i < cfg.space.dims(); ++i)
        std::cout << "  " << cfg.space.variable(i).name << " = " << values[i] << '\n';
    std::cout << "simulator calls: " << result.evaluation_count << '\n'
              << "manifest written to " << manifest_path.string() << '\n';
    return kExitOk;
}

int cmd_stats(const CommonFlags& flags) {
    const auto cfg = load_with_overrides(flags);
    json report{{"format", "cropt-experiment/1"},
                {"config", cropt::experiment_config_to_json(cfg)},
                {"cells", json::array()},
                {"weather_stats", json::array()}};
    auto& stats = report.at("weather_stats");
    for (const auto& loc : cfg.locations) {
        const auto path = fs::path(cfg.weather_dir) / (loc + ".csv");
        if (!fs::exists(path)) throw cropt::ArchiveError("missing weather archive " + path.string());
        const auto archive = cropt::load_weather_csv(path.string(), loc);
        for (int year : cfg.test_years) {
            const auto it = archive.years.find(year);
            if (it == archive.years.end())
                throw cropt::ArchiveError("archive '" + loc + "' lacks year " + std::to_string(year));
            const auto st = cropt::precip_stats(it->second);
            stats.push_back(json{{"location", loc},
                                 {"year", year},
                                 {"mean", st.mean},
                                 {"std", st.std},
                                 {"sum", st.sum},
                                 {"p25", st.p25},
                                 {"p50", st.p50},
                                 {"p75", st.p75},
                                 {"max", st.max}});
        }
    }
    fs::create_directories(cfg.output_dir);
    std::ofstream out(fs::path(cfg.output_dir) / "weather_stats.csv",
                      std::ios::binary | std::ios::trunc);
    out << "location,year,mean,std,sum,p25,p50,p75,max\n";
    for (const auto& row : stats) {
        out << row.at("location").get<std::string>() << ',' << row.at("year").get<int>() << ','
            << row.at("mean").dump() << ',' << row.at("std").dump() << ',' << row.at("sum").dump()
            << ',' << row.at("p25").dump() << ',' << row.at("p50").dump() << ','
            << row.at("p75").dump() << ',' << row.at("max").dump() << '\n';
    }
    std::cout << "weather_stats.csv written to " << cfg.output_dir << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scenario-based risk-aware optimization of farm management decisions"};
    app.require_subcommand(1);

    CommonFlags experiment_flags, optimize_flags, stats_flags;
    std::string opt_location, opt_strategy, opt_alpha;
    int opt_year = 0;
    std::string replay_manifest, replay_output;

    auto* experiment = app.add_subcommand("experiment", "run the full study grid");
    add_common(experiment, experiment_flags);

    auto* optimize = app.add_subcommand("optimize", "single optimization run");
    add_common(optimize, optimize_flags);
    optimize->add_option("--location", opt_location, "location id (default: first in config)");
    optimize->add_option("--year", opt_year, "test year (default: first in config)");
    optimize->add_option("--strategy", opt_strategy, "strategy-1|strategy-2|strategy-3|custom-MM-DD");
    optimize->add_option("--alpha", opt_alpha, "risk level in (0,1] or 'robust'");

    auto* stats = app.add_subcommand("stats", "weather summary tables");
    add_common(stats, stats_flags);

    auto* replay = app.add_subcommand("replay", "regenerate tables from a stored report");
    replay->add_option("--manifest", replay_manifest, "path to report.json")->required();
    replay->add_option("--output", replay_output, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (experiment->parsed()) return cmd_experiment(experiment_flags);
        if (optimize->parsed())
            return cmd_optimize(optimize_flags, opt_location, opt_year, opt_strategy, opt_alpha);
        if (stats->parsed()) return cmd_stats(stats_flags);
        if (replay->parsed()) {
            cropt::replay_report(replay_manifest, replay_output);
            std::cout << "tables regenerated in " << replay_output << '\n';
            return kExitOk;
        }
    } catch (const cropt::ArchiveError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitEnvironment;
    } catch (const cropt::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cropt::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}
