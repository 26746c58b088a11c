#include "cropt/pbo.hpp"

#include "cropt/risk.hpp"
#include "support/synth.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

using namespace cropt;
using json = nlohmann::ordered_json;

namespace {

ScenarioSet toy_scenarios(int count, std::uint64_t seed = 99) {
    const auto archive = testing::synth_archive("toy", 2000, 2000 + count - 1, seed);
    std::vector<Scenario> scen;
    for (int y = 2000; y < 2000 + count; ++y)
        scen.push_back(testing::scenario_from_year(archive, y, "s" + std::to_string(y)));
    return ScenarioSet::uniform(std::move(scen));
}

// Deterministic, cheap stand-in: a smooth bowl over the encoded cube with a
// per-scenario offset.
class BowlEvaluator final : public Evaluator {
public:
    explicit BowlEvaluator(const DecisionSpace& space) : space_(space) {}

    double evaluate(const DecisionVector& x, const Scenario& s) const override {
        const auto u = encode(x, space_);
        double v = 100.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = u[i] - 0.65;
            v -= 40.0 * d * d;
        }
        return v + 3.0 * (s.source_year % 5);
    }

private:
    DecisionSpace space_;
};

class FlakyEvaluator final : public Evaluator {
public:
    FlakyEvaluator(const DecisionSpace& space, std::vector<int> bad_point)
        : inner_(space), bad_(std::move(bad_point)) {}
    double evaluate(const DecisionVector& x, const Scenario& s) const override {
        if (x.levels == bad_) throw EvaluationError("synthetic failure");
        return inner_.evaluate(x, s);
    }

private:
    BowlEvaluator inner_;
    std::vector<int> bad_;
};

class AlwaysFails final : public Evaluator {
public:
    double evaluate(const DecisionVector&, const Scenario&) const override {
        throw EvaluationError("down for maintenance");
    }
};

PboConfig small_config(const DecisionSpace& space, double alpha, std::uint64_t seed, int n = 2,
                       int iters = 6) {
    PboConfig cfg;
    cfg.n_instances = n;
    cfg.max_iterations = iters;
    cfg.risk = RiskSpec(alpha);
    cfg.instances = PboConfig::default_instances(space.dims(), n, seed);
    cfg.init_seed = seed_combine(seed, "init");
    cfg.n_starts = 8;
    return cfg;
}

bool same_results(const PboResult& a, const PboResult& b) {
    if (a.trace != b.trace) return false;
    if (a.evaluation_count != b.evaluation_count) return false;
    if (a.dataset.size() != b.dataset.size()) return false;
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        if (!(a.dataset.record(i).x == b.dataset.record(i).x)) return false;
        if (a.dataset.record(i).y != b.dataset.record(i).y) return false;
        if (a.dataset.record(i).per_scenario != b.dataset.record(i).per_scenario) return false;
    }
    return a.best.x == b.best.x && a.best.y == b.best.y;
}

} // namespace

TEST_CASE("two-level space with one instance is solved exhaustively") {
    const DecisionSpace space({{"x", {0, 1}}});
    const auto scenarios = toy_scenarios(1);
    const BowlEvaluator eval(space);

    PboConfig cfg = small_config(space, 1.0, 7, 1, 1);
    cfg.initial_design_size = 1;
    const auto result = run_pbo(cfg, space, scenarios, eval);

    CHECK(result.dataset.size() == 2);
    CHECK(result.grid_exhausted == false);
    // true argmax: level 1 (encoded 1.0 is closer to 0.65)
    CHECK(result.best.x.levels == std::vector<int>{1});
    const double expected =
        eval.evaluate(DecisionVector{{1}}, scenarios.scenario(0));
    CHECK(result.best.y == expected);
}

TEST_CASE("single scenario: robust and stochastic runs coincide") {
    const DecisionSpace space({{"x", {0, 1, 2, 3, 4}}, {"y", {0, 1, 2}}});
    const auto scenarios = toy_scenarios(1);
    const BowlEvaluator eval(space);

    const auto robust = run_pbo(small_config(space, 1.0, 11), space, scenarios, eval);
    const auto stochastic = run_pbo(small_config(space, 1.0 / 1.0, 11), space, scenarios, eval);
    CHECK(same_results(robust, stochastic));
}

TEST_CASE("identical configs replay bit-identically") {
    const DecisionSpace space = DecisionSpace::corn_belt_default();
    const auto scenarios = toy_scenarios(4);
    const BowlEvaluator eval(space);

    for (SharingMode mode :
         {SharingMode::SequentialWithinIteration, SharingMode::SnapshotPerIteration}) {
        PboConfig cfg = small_config(space, 0.5, 12345, 3, 4);
        cfg.sharing_mode = mode;
        const auto a = run_pbo(cfg, space, scenarios, eval);
        const auto b = run_pbo(cfg, space, scenarios, eval);
        CHECK(same_results(a, b));
    }
}

TEST_CASE("budget, trace monotonicity, and objective audit") {
    const DecisionSpace space = DecisionSpace::corn_belt_default();
    const auto scenarios = toy_scenarios(5);
    const BowlEvaluator eval(space);

    PboConfig cfg = small_config(space, 0.4, 31415, 4, 5);
    const auto result = run_pbo(cfg, space, scenarios, eval);

    // simulator calls = (initial design + accepted proposals) * |S|
    CHECK(result.evaluation_count == result.dataset.size() * scenarios.size());
    CHECK(result.dataset.size() == 10 + 4 * 5); // max(5, 2*5) initial + N*T proposals
    CHECK(result.failures.empty());

    double prev = -1e300;
    for (double v : result.trace) {
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(result.best.y == result.trace.back());

    const RiskSpec risk(0.4);
    for (const auto& rec : result.dataset.records()) {
        CHECK(rec.y == aggregate(rec.per_scenario, scenarios, risk));
        // robust <= recorded objective <= stochastic for each record
        const double worst = aggregate(rec.per_scenario, scenarios, RiskSpec(1e-9));
        const double expectation = aggregate(rec.per_scenario, scenarios, RiskSpec(1.0));
        CHECK(rec.y >= worst - 1e-12);
        CHECK(rec.y <= expectation + 1e-12);
    }
}

TEST_CASE("proposals are never re-evaluated") {
    const DecisionSpace space({{"x", {0, 1, 2, 3, 4, 5, 6}}, {"y", {0, 1, 2, 3}}});
    const auto scenarios = toy_scenarios(2);
    const BowlEvaluator eval(space);
    for (SharingMode mode :
         {SharingMode::SequentialWithinIteration, SharingMode::SnapshotPerIteration}) {
        PboConfig cfg = small_config(space, 1.0, 2718, 3, 5);
        cfg.sharing_mode = mode;
        const auto result = run_pbo(cfg, space, scenarios, eval);
        std::set<std::vector<int>> seen;
        for (const auto& rec : result.dataset.records())
            CHECK(seen.insert(rec.x.levels).second);
    }
}

TEST_CASE("exhausting the grid ends the run early with a completion flag") {
    const DecisionSpace space({{"x", {0, 1, 2}}, {"y", {0, 1}}}); // 6 points
    const auto scenarios = toy_scenarios(2);
    const BowlEvaluator eval(space);
    PboConfig cfg = small_config(space, 1.0, 5, 2, 50);
    cfg.initial_design_size = 2;
    const auto result = run_pbo(cfg, space, scenarios, eval);
    CHECK(result.grid_exhausted);
    CHECK(result.dataset.size() == space.cardinality());
    CHECK(result.trace.size() < 50);
    // the exhaustive optimum was necessarily found
    double best = -1e300;
    for (std::uint64_t r = 0; r < space.cardinality(); ++r) {
        std::vector<double> per;
        for (std::size_t s = 0; s < scenarios.size(); ++s)
            per.push_back(eval.evaluate(decision_from_rank(r, space), scenarios.scenario(s)));
        best = std::max(best, aggregate(per, scenarios, cfg.risk));
    }
    CHECK(result.best.y == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("failed proposals are excluded, blacklisted, and the run continues") {
    const DecisionSpace space({{"x", {0, 1, 2, 3, 4, 5, 6, 7}}, {"y", {0, 1, 2, 3, 4}}});
    const auto scenarios = toy_scenarios(2);
    // the bowl optimum itself fails, so the optimizer is guaranteed to try it
    const std::vector<int> bad{5, 3};
    const FlakyEvaluator eval(space, bad);

    PboConfig cfg = small_config(space, 1.0, 33, 4, 8);
    const auto result = run_pbo(cfg, space, scenarios, eval);
    for (const auto& rec : result.dataset.records()) CHECK(rec.x.levels != bad);
    for (const auto& f : result.failures) CHECK(f.x.levels == bad);
    CHECK(result.failures.size() == 1); // never re-proposed after failing
    CHECK(result.trace.size() == 8);    // the run still completed
}

TEST_CASE("an all-failing simulator aborts with a diagnostic") {
    const DecisionSpace space({{"x", {0, 1, 2}}});
    const auto scenarios = toy_scenarios(1);
    const AlwaysFails eval;
    PboConfig cfg = small_config(space, 1.0, 1, 1, 2);
    CHECK_THROWS_WITH_AS(run_pbo(cfg, space, scenarios, eval),
                         doctest::Contains("initial design failed"), EvaluationError);
}

TEST_CASE("config validation") {
    const DecisionSpace space({{"x", {0, 1}}});
    PboConfig cfg;
    cfg.instances.clear();
    CHECK_THROWS_AS(cfg.validate(space), DomainError); // instance count mismatch
    cfg = small_config(space, 1.0, 1, 2, 0);
    CHECK_THROWS_AS(cfg.validate(space), DomainError); // zero iterations
    cfg = small_config(space, 1.0, 1, 2, 3);
    cfg.initial_design_size = 5; // beyond the 2-point grid
    CHECK_THROWS_AS(cfg.validate(space), DomainError);

    const auto insts = PboConfig::default_instances(3, 6, 9);
    CHECK(insts.size() == 6);
    CHECK(insts[0].kernel.family == KernelFamily::SquaredExponential);
    CHECK(insts[1].kernel.family == KernelFamily::Matern52);
    CHECK(insts[2].acquisition.family == AcquisitionFamily::UpperConfidenceBound);
    CHECK(insts[3].acquisition.family == AcquisitionFamily::ProbabilityOfImprovement);
    CHECK(insts[4].kernel.family == KernelFamily::SquaredExponential); // cycles
    CHECK(insts[0].seed != insts[1].seed);
}

TEST_CASE("lengthscale refits stay deterministic and optional") {
    const DecisionSpace space({{"x", {0, 1, 2, 3, 4, 5, 6, 7}}, {"y", {0, 1, 2, 3}}});
    const auto scenarios = toy_scenarios(2);
    const BowlEvaluator eval(space);
    PboConfig cfg = small_config(space, 1.0, 808, 2, 4);
    cfg.refit_every = 2;
    const auto a = run_pbo(cfg, space, scenarios, eval);
    const auto b = run_pbo(cfg, space, scenarios, eval);
    CHECK(same_results(a, b));
    CHECK(a.trace.size() == 4);

    cfg.refit_every = 0; // hook off: a different search trajectory is fine,
    CHECK_NOTHROW(run_pbo(cfg, space, scenarios, eval)); // it just has to run
}

TEST_CASE("manifest carries config echo, trace, and every evaluation") {
    const DecisionSpace space({{"x", {0, 1, 2, 3}}, {"y", {0, 1, 2}}});
    const auto scenarios = toy_scenarios(3);
    const BowlEvaluator eval(space);
    PboConfig cfg = small_config(space, 0.5, 404, 2, 3);
    const auto result = run_pbo(cfg, space, scenarios, eval);

    const json m = run_manifest(cfg, space, scenarios, result);
    CHECK(m.at("format") == "cropt-run/1");
    CHECK(m.at("config").at("n_instances") == 2);
    CHECK(m.at("config").at("alpha") == 0.5);
    CHECK(m.at("config").at("instances").size() == 2);
    CHECK(m.at("scenarios").size() == 3);
    CHECK(m.at("trace").size() == result.trace.size());
    CHECK(m.at("evaluations").size() == result.dataset.size());
    CHECK(m.at("best").at("objective") == result.best.y);
    CHECK(m.at("evaluation_count") == result.evaluation_count);

    // serialization round-trip is stable (replay-grade)
    const json reparsed = json::parse(m.dump(2));
    CHECK(reparsed.dump(2) == m.dump(2));
}
