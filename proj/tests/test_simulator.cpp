#include "cropt/simulator.hpp"

#include "cropt/rng.hpp"
#include "support/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace cropt;
namespace fs = std::filesystem;

namespace {

const DecisionSpace& space() {
    static const DecisionSpace s = DecisionSpace::corn_belt_default();
    return s;
}

Scenario reference_scenario() {
    const auto archive = testing::synth_archive("ref", 2005, 2005, 42);
    return testing::scenario_from_year(archive, 2005, "ref-2005");
}

Scenario wet_scenario() {
    auto s = reference_scenario();
    s.id = "wet";
    for (auto& d : s.days)
        if (d.date.month >= 4 && d.date.month <= 8) d.rain *= 2.2;
    return s;
}

// Straight-line recomputation of the closed forms from the parameter values,
// written independently of the library implementation.
double spreadsheet_yield(const std::vector<double>& v, const Scenario& s, const SurrogateParams& p) {
    const int planting = static_cast<int>(v[0]);
    const double n_amount = v[1];
    const int n_day = static_cast<int>(v[2]);
    const double density = v[3];
    const double rm = v[4];

    auto rain_between = [&](int from, int to) { // day-of-year range [from, to)
        double sum = 0;
        for (int doy = std::max(1, from); doy < to && doy <= static_cast<int>(s.days.size()); ++doy)
            sum += s.days[static_cast<std::size_t>(doy) - 1].rain;
        return sum;
    };
    double gdd = 0;
    for (int doy = planting; doy <= p.season_end_doy && doy <= static_cast<int>(s.days.size()); ++doy) {
        const auto& d = s.days[static_cast<std::size_t>(doy) - 1];
        gdd += std::max(0.0, std::min(0.5 * (d.max_temp + d.min_temp), p.gdd_ceiling_temp) -
                                 p.gdd_base_temp);
    }

    const double ratio = gdd / (p.gdd_requirement_intercept + p.gdd_requirement_per_rm * rm);
    const double attained = ratio >= 1 ? 1.0 : std::max(0.0, 1.0 - p.frost_cliff * (1.0 - ratio));
    const double potential = 1.0 + p.rm_potential_gain * (rm - p.rm_reference) / p.rm_span;
    const double g_mat = std::clamp(potential * attained, 0.0, 1.5);

    const double w = rain_between(planting, planting + p.water_window_days);
    const double wz = (w - p.water_optimum_mm) / p.water_width_mm;
    const double g_water =
        std::clamp(p.water_floor + (1 - p.water_floor) * std::exp(-wz * wz), 0.0, 1.5);

    const double leach = rain_between(n_day, planting + p.leach_window_days);
    const double gap_opt = p.timing_gap_optimum - p.timing_wet_shift * (w / p.water_optimum_mm);
    const double tz = ((v[2] - v[0]) - gap_opt) / p.timing_width_days;
    const double n_eff = n_amount * std::exp(-p.leach_rate_per_mm * leach) *
                             (p.timing_floor + (1 - p.timing_floor) * std::exp(-tz * tz)) +
                         p.soil_n;
    const double g_n =
        std::clamp(p.n_floor + (1 - p.n_floor) * n_eff / (p.n_half_saturation + n_eff), 0.0, 1.5);

    const double d_opt =
        p.density_optimum_base +
        p.density_optimum_water_shift * std::clamp(w / p.water_optimum_mm - 1.0, -1.0, 1.0);
    const double g_dens =
        std::clamp(1.0 - p.density_curvature * (density - d_opt) * (density - d_opt), 0.0, 1.5);

    return p.base_yield * g_mat * g_water * g_n * g_dens;
}

} // namespace

TEST_CASE("reference parameter file mirrors the built-in defaults") {
    const char* path = std::getenv("CROPT_PARAMS");
    const std::string file = path ? path : "../data/surrogate_params.json";
    if (!fs::exists(file)) {
        WARN_MESSAGE(false, "surrogate_params.json not found; set CROPT_PARAMS");
        return;
    }
    const auto from_file = SurrogateParams::from_json_file(file);
    const auto builtin = SurrogateParams::reference();
    CHECK(from_file.to_json() == builtin.to_json());
}

TEST_CASE("zero N never out-yields 200 kg/ha") {
    const auto scenarios = {reference_scenario(), wet_scenario()};
    SurrogateEvaluator eval(SurrogateParams::reference(), space());
    for (const auto& s : scenarios) {
        for (int planting = 0; planting < 10; planting += 3) {
            DecisionVector none{{planting, 0, 4, 3, 2}};
            DecisionVector fed{{planting, 10, 4, 3, 2}}; // 200 kg/ha
            CHECK(eval.evaluate(none, s) <= eval.evaluate(fed, s));
        }
    }
}

TEST_CASE("density 2 under-yields the parameterized optimum in wet weather") {
    SurrogateEvaluator eval(SurrogateParams::reference(), space());
    const auto wet = wet_scenario();
    DecisionVector sparse{{2, 10, 4, 0, 2}};  // density 2
    DecisionVector tuned = sparse;
    tuned.levels[3] = 4; // density 10, near the wet-shifted optimum
    CHECK(eval.evaluate(sparse, wet) < eval.evaluate(tuned, wet));
}

TEST_CASE("closed forms match an independent recomputation at sampled grid points") {
    const auto s = reference_scenario();
    const auto p = SurrogateParams::reference();
    SurrogateEvaluator eval(p, space());
    Rng rng(2024);
    for (int i = 0; i < 10; ++i) {
        DecisionVector x{{static_cast<int>(rng.integer(10)), static_cast<int>(rng.integer(21)),
                          static_cast<int>(rng.integer(10)), static_cast<int>(rng.integer(7)),
                          static_cast<int>(rng.integer(4))}};
        const double direct = surrogate_yield(x, s, p, space());
        const double cached = eval.evaluate(x, s);
        const double oracle = spreadsheet_yield(x.values(space()), s, p);
        CHECK(direct == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(cached == direct);
    }
}

TEST_CASE("yield stays within [0, 1.5 * base]") {
    const auto p = SurrogateParams::reference();
    SurrogateEvaluator eval(p, space());
    const auto scenarios = {reference_scenario(), wet_scenario()};
    Rng rng(5);
    for (const auto& s : scenarios) {
        for (int i = 0; i < 200; ++i) {
            DecisionVector x{{static_cast<int>(rng.integer(10)), static_cast<int>(rng.integer(21)),
                              static_cast<int>(rng.integer(10)), static_cast<int>(rng.integer(7)),
                              static_cast<int>(rng.integer(4))}};
            const double y = eval.evaluate(x, s);
            CHECK(y >= 0.0);
            CHECK(y <= 1.5 * p.base_yield);
        }
    }
}

TEST_CASE("rain response is positive when dry, negative when waterlogged") {
    const auto p = SurrogateParams::reference();
    SurrogateEvaluator eval(p, space());
    DecisionVector x{{0, 20, 2, 4, 2}}; // early planting, max N

    auto with_rain_scale = [&](double scale, const char* id) {
        auto s = reference_scenario();
        s.id = id;
        const int planting = 105;
        for (auto& d : s.days) {
            const int doy = day_of_year(d.date);
            if (doy >= planting && doy < planting + p.water_window_days) d.rain *= scale;
        }
        return s;
    };

    // scale chosen so the window rain sits in the dry regime, then bump it
    const double dry_base = eval.evaluate(x, with_rain_scale(0.25, "dry0"));
    const double dry_more = eval.evaluate(x, with_rain_scale(0.45, "dry1"));
    CHECK(dry_more > dry_base);

    const double wet_base = eval.evaluate(x, with_rain_scale(3.0, "wet0"));
    const double wet_more = eval.evaluate(x, with_rain_scale(3.6, "wet1"));
    CHECK(wet_more < wet_base);
}

TEST_CASE("scenario too short for the season is an evaluation error") {
    SurrogateEvaluator eval(SurrogateParams::reference(), space());
    auto s = reference_scenario();
    s.id = "short";
    s.days.resize(150); // cut before planting+60
    DecisionVector x{{5, 10, 4, 3, 2}};
    CHECK_THROWS_AS(eval.evaluate(x, s), EvaluationError);
}

TEST_CASE("external adapter: constant stub") {
    const auto dir = fs::temp_directory_path() / "cropt-ext-const";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream tpl(dir / "input.tpl");
        tpl << "planting={{planting_date}} weather={{weather_file}}\n";
        std::ofstream script(dir / "model.sh");
        script << "#!/bin/sh\necho yield 100\n";
    }
    fs::permissions(dir / "model.sh", fs::perms::owner_all);

    ExternalAdapterConfig cfg;
    cfg.template_path = (dir / "input.tpl").string();
    cfg.command = {(dir / "model.sh").string()};
    cfg.output_rule = "regex:yield ([0-9.]+)";
    cfg.work_root = (dir / "work").string();
    ExternalEvaluator eval(cfg, space());

    const auto s = reference_scenario();
    DecisionVector x{{0, 0, 0, 0, 0}};
    CHECK(eval.evaluate(x, s) == 100.0);
    DecisionVector z{{3, 5, 2, 1, 1}};
    CHECK(eval.evaluate(z, s) == 100.0);
    CHECK(eval.invocations() == 2);
}

TEST_CASE("external adapter: substituted values round-trip through the template") {
    const auto dir = fs::temp_directory_path() / "cropt-ext-echo";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream tpl(dir / "input.tpl");
        tpl << "{{planting_date}} {{n_amount}} {{n_date}} {{density}} {{cultivar_rm}}\n";
        std::ofstream script(dir / "model.sh");
        // sums the five injected decision values from the instantiated input
        script << "#!/bin/sh\nawk '{print \"total:\" $1+$2+$3+$4+$5}' \"$1\"\n";
    }
    fs::permissions(dir / "model.sh", fs::perms::owner_all);

    ExternalAdapterConfig cfg;
    cfg.template_path = (dir / "input.tpl").string();
    cfg.command = {(dir / "model.sh").string(), "{{input_file}}"};
    cfg.output_rule = "regex:total:([0-9.]+)";
    cfg.work_root = (dir / "work").string();
    ExternalEvaluator eval(cfg, space());

    const auto s = reference_scenario();
    DecisionVector x{{3, 9, 4, 3, 2}}; // 126 + 180 + 119 + 8 + 110 = 543
    CHECK(eval.evaluate(x, s) == doctest::Approx(543.0));
}

TEST_CASE("external adapter: csv output rule") {
    const auto dir = fs::temp_directory_path() / "cropt-ext-csv";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream tpl(dir / "input.tpl");
        tpl << "n={{n_amount}}\n";
        std::ofstream script(dir / "model.sh");
        script << "#!/bin/sh\nprintf 'site,yield\\nhere,123.5\\n' > out.csv\n";
    }
    fs::permissions(dir / "model.sh", fs::perms::owner_all);

    ExternalAdapterConfig cfg;
    cfg.template_path = (dir / "input.tpl").string();
    cfg.command = {(dir / "model.sh").string()};
    cfg.output_rule = "csv:out.csv:yield";
    cfg.work_root = (dir / "work").string();
    ExternalEvaluator eval(cfg, space());
    CHECK(eval.evaluate(DecisionVector{{0, 0, 0, 0, 0}}, reference_scenario()) == 123.5);
}

TEST_CASE("external adapter: timeout, bad exit, and parse failure") {
    const auto dir = fs::temp_directory_path() / "cropt-ext-err";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream tpl(dir / "input.tpl");
        tpl << "x\n";
        std::ofstream sleeper(dir / "sleeper.sh");
        sleeper << "#!/bin/sh\nsleep 30\n";
        std::ofstream failer(dir / "failer.sh");
        failer << "#!/bin/sh\necho broken >&2\nexit 3\n";
        std::ofstream garbled(dir / "garbled.sh");
        garbled << "#!/bin/sh\necho 'no numbers here'\n";
    }
    for (const char* f : {"sleeper.sh", "failer.sh", "garbled.sh"})
        fs::permissions(dir / f, fs::perms::owner_all);

    ExternalAdapterConfig cfg;
    cfg.template_path = (dir / "input.tpl").string();
    cfg.output_rule = "regex:yield ([0-9.]+)";
    cfg.work_root = (dir / "work").string();
    const auto s = reference_scenario();
    const DecisionVector x{{0, 0, 0, 0, 0}};

    cfg.command = {(dir / "sleeper.sh").string()};
    cfg.timeout_seconds = 0.2;
    CHECK_THROWS_AS(ExternalEvaluator(cfg, space()).evaluate(x, s), EvaluationError);

    cfg.command = {(dir / "failer.sh").string()};
    cfg.timeout_seconds = 30;
    CHECK_THROWS_WITH_AS(ExternalEvaluator(cfg, space()).evaluate(x, s),
                         doctest::Contains("broken"), EvaluationError);

    cfg.command = {(dir / "garbled.sh").string()};
    CHECK_THROWS_AS(ExternalEvaluator(cfg, space()).evaluate(x, s), EvaluationError);
}

TEST_CASE("external adapter: cache suppresses re-invocation") {
    const auto dir = fs::temp_directory_path() / "cropt-ext-cache";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream tpl(dir / "input.tpl");
        tpl << "n={{n_amount}}\n";
        std::ofstream script(dir / "model.sh");
        script << "#!/bin/sh\necho yield 55.25\n";
    }
    fs::permissions(dir / "model.sh", fs::perms::owner_all);

    ExternalAdapterConfig cfg;
    cfg.template_path = (dir / "input.tpl").string();
    cfg.command = {(dir / "model.sh").string()};
    cfg.output_rule = "regex:yield ([0-9.]+)";
    cfg.cache_dir = (dir / "cache").string();
    cfg.work_root = (dir / "work").string();

    ExternalEvaluator eval(cfg, space());
    const auto s = reference_scenario();
    const DecisionVector x{{1, 2, 3, 4, 1}};
    CHECK(eval.evaluate(x, s) == 55.25);
    CHECK(eval.evaluate(x, s) == 55.25);
    CHECK(eval.invocations() == 1); // second call served from cache

    // the cache is content-addressed on disk: a fresh evaluator reuses it
    ExternalEvaluator again(cfg, space());
    CHECK(again.evaluate(x, s) == 55.25);
    CHECK(again.invocations() == 0);

    // different decision misses
    CHECK(again.evaluate(DecisionVector{{0, 0, 0, 0, 0}}, s) == 55.25);
    CHECK(again.invocations() == 1);
}
