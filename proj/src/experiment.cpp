#include "cropt/experiment.hpp"

#include "cropt/parallel.hpp"
#include "cropt/rng.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

namespace cropt {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// numbers in CSV cells use the JSON shortest-round-trip form so that
// experiment and replay emit identical bytes
std::string num(const json& v) { return v.dump(); }

struct Cell {
    std::string location;
    int year;
    std::size_t strategy_idx;
    std::size_t alpha_idx;
};

// alpha is deliberately left out: cells that differ only in risk level share
// seeds, so their runs are comparable and coincide when |S| = 1
std::uint64_t cell_seed(const ExperimentConfig& cfg, const Cell& c) {
    std::uint64_t s = seed_combine(cfg.master_seed, c.location);
    s = seed_combine(s, static_cast<std::uint64_t>(c.year));
    s = seed_combine(s, cfg.strategies[c.strategy_idx].name());
    return s;
}

std::unique_ptr<Evaluator> make_evaluator(const ExperimentConfig& cfg, const DecisionSpace& space) {
    if (cfg.evaluator.kind == EvaluatorConfig::Kind::Surrogate) {
        const auto params = cfg.evaluator.surrogate_params_file.empty()
                                ? SurrogateParams::reference()
                                : SurrogateParams::from_json_file(cfg.evaluator.surrogate_params_file);
        return std::make_unique<SurrogateEvaluator>(params, space);
    }
    return std::make_unique<ExternalEvaluator>(cfg.evaluator.external, space);
}

Scenario observed_scenario(const WeatherArchive& archive, int year) {
    const auto it = archive.years.find(year);
    detail::require<ArchiveError>(it != archive.years.end(), "archive '" + archive.location_id +
                                                                 "' lacks target year " +
                                                                 std::to_string(year));
    Scenario s;
    s.id = "observed-" + std::to_string(year);
    s.source_year = year;
    s.days = it->second;
    return s;
}

json run_cell(const ExperimentConfig& cfg, const WeatherArchive& archive, const Cell& c) {
    const auto& strategy = cfg.strategies[c.strategy_idx];
    const auto& alpha_spec = cfg.alphas[c.alpha_idx];
    const std::uint64_t seed = cell_seed(cfg, c);

    json cell{{"location", c.location},
              {"year", c.year},
              {"strategy", strategy.name()},
              {"alpha_label", alpha_spec.label()},
              {"seed", seed},
              {"ok", false}};
    try {
        const Scenario observed = observed_scenario(archive, c.year);
        const std::size_t observed_days =
            strategy.label == StrategyLabel::Strategy3
                ? observed.days.size()
                : static_cast<std::size_t>(day_of_year(strategy.decision_date(c.year))) - 1;
        const std::span<const WeatherDay> prefix(observed.days.data(), observed_days);
        const ScenarioSet scenarios = build_scenarios(archive, c.year, prefix, strategy);

        const RiskSpec risk(alpha_spec.resolve(scenarios.size()));
        const PboConfig pbo = cfg.pbo.instantiate(cfg.space, risk, seed, 1);
        const auto evaluator = make_evaluator(cfg, cfg.space);

        const PboResult result = run_pbo(pbo, cfg.space, scenarios, *evaluator);

        const double realized = evaluator->evaluate(result.best.x, observed);
        const double baseline_realized = evaluator->evaluate(cfg.baseline, observed);

        cell["ok"] = true;
        cell["alpha_value"] = risk.alpha;
        cell["risk_mode"] = to_string(risk.mode(scenarios.size()));
        cell["n_scenarios"] = scenarios.size();
        cell["chosen_levels"] = result.best.x.levels;
        cell["chosen_values"] = result.best.x.values(cfg.space);
        cell["objective"] = result.best.y;
        cell["realized_yield"] = realized;
        cell["baseline_yield"] = baseline_realized;
        if (baseline_realized > 0)
            cell["improvement_pct"] = 100.0 * (realized - baseline_realized) / baseline_realized;
        cell["evaluation_count"] = result.evaluation_count;
        cell["trace"] = result.trace;
        cell["grid_exhausted"] = result.grid_exhausted;
    } catch (const std::exception& e) {
        cell["error"] = e.what();
    }
    return cell;
}

} // namespace

json run_experiment(const ExperimentConfig& cfg) {
    // fail fast on missing archives before any optimization
    std::map<std::string, WeatherArchive> archives;
    for (const auto& loc : cfg.locations) {
        const auto path = fs::path(cfg.weather_dir) / (loc + ".csv");
        if (!fs::exists(path))
            throw ArchiveError("missing weather archive " + path.string());
        archives.emplace(loc, load_weather_csv(path.string(), loc));
    }
    for (const auto& loc : cfg.locations) {
        const auto& archive = archives.at(loc);
        for (int year : cfg.test_years) {
            detail::require<ArchiveError>(archive.years.count(year) > 0,
                                          "archive '" + loc + "' lacks test year " +
                                              std::to_string(year));
            detail::require<ArchiveError>(archive.first_year() < year,
                                          "archive '" + loc + "' has no years before " +
                                              std::to_string(year));
        }
    }

    std::vector<Cell> cells;
    for (const auto& loc : cfg.locations)
        for (int year : cfg.test_years)
            for (std::size_t s = 0; s < cfg.strategies.size(); ++s)
                for (std::size_t a = 0; a < cfg.alphas.size(); ++a)
                    cells.push_back({loc, year, s, a});

    std::vector<json> results(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
        results[i] = run_cell(cfg, archives.at(cells[i].location), cells[i]);
    });

    json weather_stats = json::array();
    for (const auto& loc : cfg.locations) {
        for (int year : cfg.test_years) {
            const auto& days = archives.at(loc).years.at(year);
            const auto st = precip_stats(days);
            weather_stats.push_back(json{{"location", loc},
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

    json report{{"format", "cropt-experiment/1"},
                {"config", experiment_config_to_json(cfg)},
                {"cells", results},
                {"weather_stats", weather_stats}};
    return report;
}

bool report_has_failures(const json& report) {
    for (const auto& cell : report.at("cells"))
        if (!cell.at("ok").get<bool>()) return true;
    return false;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    detail::require<ArchiveError>(out.good(), "cannot write " + path.string());
}

std::string improvement_csv(const json& report) {
    std::ostringstream out;
    out << "location,year,strategy,alpha,objective,realized_yield,baseline_yield,improvement_pct\n";
    for (const auto& cell : report.at("cells")) {
        if (!cell.at("ok").get<bool>()) continue;
        out << cell.at("location").get<std::string>() << ',' << cell.at("year").get<int>() << ','
            << cell.at("strategy").get<std::string>() << ','
            << cell.at("alpha_label").get<std::string>() << ',' << num(cell.at("objective")) << ','
            << num(cell.at("realized_yield")) << ',' << num(cell.at("baseline_yield")) << ','
            << (cell.contains("improvement_pct") ? num(cell.at("improvement_pct")) : std::string())
            << '\n';
    }
    return out.str();
}

std::string weather_stats_csv(const json& report) {
    std::ostringstream out;
    out << "location,year,mean,std,sum,p25,p50,p75,max\n";
    for (const auto& row : report.at("weather_stats")) {
        out << row.at("location").get<std::string>() << ',' << row.at("year").get<int>() << ','
            << num(row.at("mean")) << ',' << num(row.at("std")) << ',' << num(row.at("sum")) << ','
            << num(row.at("p25")) << ',' << num(row.at("p50")) << ',' << num(row.at("p75")) << ','
            << num(row.at("max")) << '\n';
    }
    return out.str();
}

std::map<std::string, std::string> groups_from_report(const json& report) {
    std::map<std::string, std::string> group_of;
    const auto& cfgj = report.at("config");
    if (cfgj.contains("location_groups")) {
        for (const auto& [group, locs] : cfgj.at("location_groups").items())
            for (const auto& loc : locs) group_of[loc.get<std::string>()] = group;
    }
    return group_of;
}

} // namespace

json decision_frequency_table(const json& report, const std::string& variable) {
    const auto& cfgj = report.at("config");
    const auto group_of = groups_from_report(report);
    auto group_for = [&](const std::string& loc) {
        const auto it = group_of.find(loc);
        return it == group_of.end() ? loc : it->second;
    };

    std::size_t var_idx = static_cast<std::size_t>(-1);
    json grid;
    for (std::size_t i = 0; i < cfgj.at("space").size(); ++i) {
        if (cfgj.at("space")[i].at("name").get<std::string>() == variable) {
            var_idx = i;
            grid = cfgj.at("space")[i].at("grid");
        }
    }
    detail::require(var_idx != static_cast<std::size_t>(-1),
                    "no variable named '" + variable + "' in the report");

    const auto strategies = cfgj.at("strategies").get<std::vector<std::string>>();

    // (group, year, strategy, level) -> count; (group, year, strategy) -> total
    std::map<std::tuple<std::string, int, std::string, int>, int> counts;
    std::map<std::tuple<std::string, int, std::string>, int> totals;
    for (const auto& cell : report.at("cells")) {
        if (!cell.at("ok").get<bool>()) continue;
        const auto group = group_for(cell.at("location").get<std::string>());
        const int year = cell.at("year").get<int>();
        const auto strategy = cell.at("strategy").get<std::string>();
        const int level = cell.at("chosen_levels")[var_idx].get<int>();
        ++counts[{group, year, strategy, level}];
        ++totals[{group, year, strategy}];
    }

    std::vector<std::pair<std::string, int>> group_years;
    for (const auto& [key, total] : totals) {
        (void)total;
        const std::pair<std::string, int> gy{std::get<0>(key), std::get<1>(key)};
        if (group_years.empty() || group_years.back() != gy) group_years.push_back(gy);
    }

    // groups whose cells all failed are omitted, with a warning
    json warnings = json::array();
    {
        std::set<std::pair<std::string, int>> with_rows(group_years.begin(), group_years.end());
        std::set<std::pair<std::string, int>> seen;
        for (const auto& cell : report.at("cells")) {
            const std::pair<std::string, int> gy{group_for(cell.at("location").get<std::string>()),
                                                 cell.at("year").get<int>()};
            if (!with_rows.count(gy) && seen.insert(gy).second)
                warnings.push_back("no successful cells for group '" + gy.first + "', year " +
                                   std::to_string(gy.second) + "; rows omitted");
        }
    }

    json rows = json::array();
    for (const auto& [group, year] : group_years) {
        for (std::size_t level = 0; level < grid.size(); ++level) {
            json row{{"group", group}, {"year", year}, {"level", grid[level]}};
            for (const auto& strategy : strategies) {
                const auto t = totals.find({group, year, strategy});
                double pct = 0;
                if (t != totals.end() && t->second > 0) {
                    const auto c = counts.find({group, year, strategy, static_cast<int>(level)});
                    pct = c == counts.end() ? 0.0
                                            : 100.0 * static_cast<double>(c->second) /
                                                  static_cast<double>(t->second);
                }
                row[strategy] = pct;
            }
            rows.push_back(std::move(row));
        }
    }
    json table{{"variable", variable}, {"strategies", strategies}, {"rows", rows}};
    if (!warnings.empty()) table["warnings"] = warnings;
    return table;
}

std::string render_frequency_table(const json& report, const std::string& variable) {
    const auto table = decision_frequency_table(report, variable);
    const auto strategies = table.at("strategies").get<std::vector<std::string>>();
    std::ostringstream out;
    out << "optimal " << variable << " frequency, (";
    for (std::size_t i = 0; i < strategies.size(); ++i) out << (i ? ", " : "") << strategies[i];
    out << ") percentages\n";
    std::string last_key;
    for (const auto& row : table.at("rows")) {
        const std::string key = row.at("group").get<std::string>() + " " +
                                std::to_string(row.at("year").get<int>());
        bool all_zero = true;
        std::ostringstream triple;
        triple << '(';
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            const double pct = row.at(strategies[i]).get<double>();
            if (pct != 0) all_zero = false;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%g", pct);
            triple << (i ? "," : "") << buf;
        }
        triple << ')';
        if (key != last_key) {
            out << key << ":\n";
            last_key = key;
        }
        out << "  " << num(row.at("level")) << ": " << (all_zero ? "-" : triple.str()) << '\n';
    }
    return out.str();
}

namespace {

std::string freq_csv(const json& table) {
    const auto strategies = table.at("strategies").get<std::vector<std::string>>();
    std::ostringstream out;
    out << "group,year,level";
    for (const auto& s : strategies) out << ',' << s;
    out << '\n';
    for (const auto& row : table.at("rows")) {
        out << row.at("group").get<std::string>() << ',' << row.at("year").get<int>() << ','
            << num(row.at("level"));
        for (const auto& s : strategies) out << ',' << num(row.at(s));
        out << '\n';
    }
    return out.str();
}

} // namespace

void write_report_files(const json& report, const std::string& output_dir) {
    fs::create_directories(output_dir);
    const fs::path dir(output_dir);
    write_text(dir / "report.json", report.dump(2) + "\n");
    write_text(dir / "improvement.csv", improvement_csv(report));
    write_text(dir / "weather_stats.csv", weather_stats_csv(report));
    for (const auto& v : report.at("config").at("space"))
        write_text(dir / ("freq_" + v.at("name").get<std::string>() + ".csv"),
                   freq_csv(decision_frequency_table(report, v.at("name").get<std::string>())));
}

json load_report(const std::string& report_path) {
    std::ifstream in(report_path);
    detail::require<ConfigError>(in.good(), "cannot open report '" + report_path + "'");
    json report;
    try {
        in >> report;
    } catch (const json::exception& e) {
        throw ConfigError("report '" + report_path + "' is not valid JSON: " + e.what());
    }
    detail::require<ConfigError>(report.value("format", std::string()) == "cropt-experiment/1",
                                 "'" + report_path + "' is not an experiment report");
    return report;
}

void replay_report(const std::string& report_path, const std::string& output_dir) {
    const json report = load_report(report_path);
    fs::create_directories(output_dir);
    const fs::path dir(output_dir);
    write_text(dir / "improvement.csv", improvement_csv(report));
    write_text(dir / "weather_stats.csv", weather_stats_csv(report));
    for (const auto& v : report.at("config").at("space"))
        write_text(dir / ("freq_" + v.at("name").get<std::string>() + ".csv"),
                   freq_csv(decision_frequency_table(report, v.at("name").get<std::string>())));
}

} // namespace cropt
