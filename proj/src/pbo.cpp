#include "cropt/pbo.hpp"

#include "cropt/parallel.hpp"
#include "cropt/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace cropt {

using json = nlohmann::ordered_json;

void PboConfig::validate(const DecisionSpace& space) const {
    detail::require(n_instances >= 1, "n_instances must be at least 1");
    detail::require(max_iterations >= 1, "max_iterations must be at least 1");
    detail::require(instances.size() == static_cast<std::size_t>(n_instances),
                    "one instance config per BO instance required");
    for (const auto& inst : instances) {
        inst.kernel.validate(space.dims());
        inst.acquisition.validate();
    }
    const int init = resolved_initial_design(space);
    detail::require(init >= 1 && static_cast<std::uint64_t>(init) <= space.cardinality(),
                    "initial design size must be in [1, grid cardinality]");
    detail::require(n_starts >= 1, "n_starts must be at least 1");
    detail::require(refit_every >= 0, "refit_every must be nonnegative");
}

int PboConfig::resolved_initial_design(const DecisionSpace& space) const {
    if (initial_design_size > 0) return initial_design_size;
    const auto def = std::max<std::uint64_t>(5, 2 * space.dims());
    return static_cast<int>(std::min<std::uint64_t>(def, space.cardinality()));
}

std::vector<BoInstanceConfig> PboConfig::default_instances(std::size_t dims, int n,
                                                           std::uint64_t base_seed) {
    std::vector<BoInstanceConfig> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        BoInstanceConfig c;
        switch (i % 4) {
        case 0:
            c.kernel = KernelSpec::defaults(dims, KernelFamily::SquaredExponential);
            c.acquisition = {AcquisitionFamily::ExpectedImprovement, 2.0, 0.0};
            break;
        case 1:
            c.kernel = KernelSpec::defaults(dims, KernelFamily::Matern52);
            c.acquisition = {AcquisitionFamily::ExpectedImprovement, 2.0, 0.0};
            break;
        case 2:
            c.kernel = KernelSpec::defaults(dims, KernelFamily::Matern52);
            c.acquisition = {AcquisitionFamily::UpperConfidenceBound, 2.0, 0.0};
            break;
        default:
            c.kernel = KernelSpec::defaults(dims, KernelFamily::SquaredExponential);
            c.acquisition = {AcquisitionFamily::ProbabilityOfImprovement, 2.0, 0.01};
            break;
        }
        c.seed = seed_combine(base_seed, static_cast<std::uint64_t>(i) + 1);
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

// Seeded Latin hypercube over the grid: stratify each axis into `count`
// bands, permute, decode band centers to grid indices. Collisions redraw,
// then fall back to unexplored grid points.
std::vector<DecisionVector> latin_hypercube_design(const DecisionSpace& space, int count,
                                                   std::uint64_t seed, const Dataset& existing) {
    Rng rng(seed);
    const std::size_t d = space.dims();
    std::set<std::vector<int>> taken;
    std::vector<DecisionVector> design;

    for (int attempt = 0; attempt < 64 && static_cast<int>(design.size()) < count; ++attempt) {
        std::vector<std::vector<int>> strata(d);
        for (std::size_t j = 0; j < d; ++j) {
            strata[j].resize(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) strata[j][static_cast<std::size_t>(i)] = i;
            for (int i = count - 1; i > 0; --i)
                std::swap(strata[j][static_cast<std::size_t>(i)],
                          strata[j][rng.integer(static_cast<std::uint64_t>(i) + 1)]);
        }
        for (int i = 0; i < count && static_cast<int>(design.size()) < count; ++i) {
            std::vector<double> u(d);
            for (std::size_t j = 0; j < d; ++j)
                u[j] = (static_cast<double>(strata[j][static_cast<std::size_t>(i)]) + rng.uniform()) /
                       static_cast<double>(count);
            auto x = decode(u, space);
            if (!existing.contains(x) && taken.insert(x.levels).second) design.push_back(std::move(x));
        }
    }
    // grid smaller than the LHS wants: fill deterministically
    for (std::uint64_t r = 0; r < space.cardinality() && static_cast<int>(design.size()) < count; ++r) {
        auto x = decision_from_rank(r, space);
        if (!existing.contains(x) && taken.insert(x.levels).second) design.push_back(std::move(x));
    }
    return design;
}

struct Evaluation {
    std::vector<double> per_scenario;
    bool ok = true;
    std::string error;
    std::uint64_t calls = 0;
};

Evaluation evaluate_all_scenarios(const DecisionVector& x, const ScenarioSet& scenarios,
                                  const Evaluator& evaluator, int jobs) {
    const std::size_t n = scenarios.size();
    Evaluation ev;
    ev.per_scenario.assign(n, 0.0);
    if (jobs <= 1) {
        for (std::size_t s = 0; s < n; ++s) {
            ++ev.calls;
            try {
                ev.per_scenario[s] = evaluator.evaluate(x, scenarios.scenario(s));
            } catch (const std::exception& e) {
                ev.ok = false;
                ev.error = std::string("scenario '") + scenarios.scenario(s).id + "': " + e.what();
                return ev; // stop at the first failed scenario
            }
        }
        return ev;
    }
    std::vector<std::string> errors(n);
    std::atomic<std::uint64_t> calls{0};
    parallel_for(n, jobs, [&](std::size_t s) {
        calls.fetch_add(1);
        try {
            ev.per_scenario[s] = evaluator.evaluate(x, scenarios.scenario(s));
        } catch (const std::exception& e) {
            errors[s] = std::string("scenario '") + scenarios.scenario(s).id + "': " + e.what();
        }
    });
    ev.calls = calls.load();
    for (const auto& err : errors) {
        if (!err.empty()) {
            ev.ok = false;
            ev.error = err;
            break;
        }
    }
    return ev;
}

} // namespace

PboResult run_pbo(const PboConfig& config, const DecisionSpace& space, const ScenarioSet& scenarios,
                  const Evaluator& evaluator) {
    config.validate(space);
    detail::require(scenarios.size() >= 1, "scenario set must be nonempty");

    PboResult result;
    Dataset& data = result.dataset;
    const RiskSpec& risk = config.risk;
    std::set<std::vector<int>> failed_keys; // never re-proposed

    // initial design
    const int init_count = config.resolved_initial_design(space);
    const auto design = latin_hypercube_design(space, init_count, config.init_seed, data);
    int init_failures = 0;
    for (const auto& x : design) {
        auto ev = evaluate_all_scenarios(x, scenarios, evaluator, config.scenario_jobs);
        result.evaluation_count += ev.calls;
        if (!ev.ok) {
            ++init_failures;
            failed_keys.insert(x.levels);
            result.failures.push_back({0, 0, x, ev.error});
            continue;
        }
        const double y = aggregate(ev.per_scenario, scenarios, risk);
        data.append({x, std::move(ev.per_scenario), y});
    }
    if (2 * init_failures >= init_count || data.empty())
        throw EvaluationError("initial design failed for " + std::to_string(init_failures) + " of " +
                              std::to_string(init_count) + " points; aborting");

    const bool snapshot = config.sharing_mode == SharingMode::SnapshotPerIteration;

    for (int t = 1; t <= config.max_iterations && !result.grid_exhausted; ++t) {
        const Dataset snapshot_data = snapshot ? data : Dataset{}; // copy only when needed
        const Dataset& fit_view = snapshot ? snapshot_data : data;

        struct Pending {
            std::optional<DecisionVector> x;
            bool exhausted = false;
        };
        std::vector<Pending> proposals(static_cast<std::size_t>(config.n_instances));

        auto propose = [&](int n, const Dataset& view) {
            const auto& inst = config.instances[static_cast<std::size_t>(n)];
            KernelSpec kernel = inst.kernel;
            if (config.refit_every > 0 && t % config.refit_every == 0)
                kernel = refit_lengthscales(view, kernel, space);
            const auto model = GpModel::fit(view, kernel, space);
            const auto seed = seed_combine(inst.seed, static_cast<std::uint64_t>(t));
            auto prop = maximize_acquisition(inst.acquisition, model, space, view, seed,
                                             config.n_starts, &failed_keys);
            Pending p;
            p.exhausted = prop.exhausted();
            if (!prop.exhausted()) p.x = std::move(*prop.point);
            return p;
        };

        int failed_this_iteration = 0;
        int proposals_this_iteration = 0;

        if (!snapshot) {
            // Step 1-5 per instance, each seeing its predecessors' results
            for (int n = 0; n < config.n_instances; ++n) {
                auto p = propose(n, data);
                if (p.exhausted) {
                    result.grid_exhausted = true;
                    break;
                }
                ++proposals_this_iteration;
                auto ev = evaluate_all_scenarios(*p.x, scenarios, evaluator, config.scenario_jobs);
                result.evaluation_count += ev.calls;
                if (!ev.ok) {
                    ++failed_this_iteration;
                    failed_keys.insert(p.x->levels);
                    result.failures.push_back({t, n, *p.x, ev.error});
                    continue;
                }
                const double y = aggregate(ev.per_scenario, scenarios, risk);
                data.append({std::move(*p.x), std::move(ev.per_scenario), y});
            }
        } else {
            // propose from the snapshot, evaluate, then append at the barrier
            for (int n = 0; n < config.n_instances; ++n)
                proposals[static_cast<std::size_t>(n)] = propose(n, fit_view);

            std::set<std::vector<int>> pending;
            for (int n = 0; n < config.n_instances; ++n) {
                auto& p = proposals[static_cast<std::size_t>(n)];
                if (p.exhausted) {
                    result.grid_exhausted = true;
                    continue;
                }
                // duplicate of a sibling proposal: take a fresh unexplored point
                if (!pending.insert(p.x->levels).second || data.contains(*p.x)) {
                    Rng rng(seed_combine(config.instances[static_cast<std::size_t>(n)].seed,
                                         seed_combine(static_cast<std::uint64_t>(t), 0x5eedu)));
                    std::optional<DecisionVector> fresh;
                    for (int tries = 0; tries < 4096 && !fresh; ++tries) {
                        auto cand = decision_from_rank(rng.integer(space.cardinality()), space);
                        if (!data.contains(cand) && !pending.count(cand.levels) &&
                            !failed_keys.count(cand.levels))
                            fresh = cand;
                    }
                    if (!fresh) {
                        result.grid_exhausted = true;
                        continue;
                    }
                    p.x = std::move(*fresh);
                    pending.insert(p.x->levels);
                }
                ++proposals_this_iteration;
                auto ev = evaluate_all_scenarios(*p.x, scenarios, evaluator, config.scenario_jobs);
                result.evaluation_count += ev.calls;
                if (!ev.ok) {
                    ++failed_this_iteration;
                    failed_keys.insert(p.x->levels);
                    result.failures.push_back({t, n, *p.x, ev.error});
                    continue;
                }
                const double y = aggregate(ev.per_scenario, scenarios, risk);
                data.append({std::move(*p.x), std::move(ev.per_scenario), y});
            }
        }

        if (proposals_this_iteration > 0 && 2 * failed_this_iteration >= proposals_this_iteration)
            throw EvaluationError("iteration " + std::to_string(t) + ": " +
                                  std::to_string(failed_this_iteration) + " of " +
                                  std::to_string(proposals_this_iteration) +
                                  " proposals failed; aborting (last error: " +
                                  result.failures.back().error + ")");

        result.trace.push_back(data.incumbent().y);
    }

    result.best = data.incumbent();
    return result;
}

json kernel_to_json(const KernelSpec& k) {
    return json{{"family", to_string(k.family)},
                {"lengthscales", k.lengthscales},
                {"signal_variance", k.signal_variance},
                {"noise_variance", k.noise_variance}};
}

json acquisition_to_json(const AcquisitionSpec& a) {
    return json{{"family", to_string(a.family)}, {"kappa", a.kappa}, {"xi", a.xi}};
}

json run_manifest(const PboConfig& config, const DecisionSpace& space, const ScenarioSet& scenarios,
                  const PboResult& result) {
    json instances = json::array();
    for (const auto& inst : config.instances)
        instances.push_back(json{{"kernel", kernel_to_json(inst.kernel)},
                                 {"acquisition", acquisition_to_json(inst.acquisition)},
                                 {"seed", inst.seed}});

    json vars = json::array();
    for (const auto& v : space.variables()) vars.push_back(json{{"name", v.name}, {"grid", v.grid}});

    json scen = json::array();
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        scen.push_back(json{{"id", scenarios.scenario(i).id},
                            {"source_year", scenarios.scenario(i).source_year},
                            {"probability", scenarios.probabilities()[i]}});

    json records = json::array();
    for (const auto& r : result.dataset.records())
        records.push_back(json{{"levels", r.x.levels},
                               {"values", r.x.values(space)},
                               {"per_scenario", r.per_scenario},
                               {"objective", r.y}});

    json failures = json::array();
    for (const auto& f : result.failures)
        failures.push_back(json{{"iteration", f.iteration},
                                {"instance", f.instance},
                                {"levels", f.x.levels},
                                {"error", f.error}});

    return json{{"format", "cropt-run/1"},
                {"config",
                 json{{"n_instances", config.n_instances},
                      {"max_iterations", config.max_iterations},
                      {"alpha", config.risk.alpha},
                      {"risk_mode", to_string(config.risk.mode(scenarios.size()))},
                      {"initial_design_size", config.initial_design_size},
                      {"sharing_mode", to_string(config.sharing_mode)},
                      {"init_seed", config.init_seed},
                      {"n_starts", config.n_starts},
                      {"refit_every", config.refit_every},
                      {"instances", instances}}},
                {"space", vars},
                {"scenarios", scen},
                {"trace", result.trace},
                {"evaluations", records},
                {"failures", failures},
                {"best", json{{"levels", result.best.x.levels},
                              {"values", result.best.x.values(space)},
                              {"per_scenario", result.best.per_scenario},
                              {"objective", result.best.y}}},
                {"evaluation_count", result.evaluation_count},
                {"grid_exhausted", result.grid_exhausted}};
}

const char* to_string(SharingMode mode) {
    return mode == SharingMode::SequentialWithinIteration ? "sequential-within-iteration"
                                                          : "snapshot-per-iteration";
}

SharingMode sharing_mode_from_string(const std::string& name) {
    if (name == "sequential-within-iteration") return SharingMode::SequentialWithinIteration;
    if (name == "snapshot-per-iteration") return SharingMode::SnapshotPerIteration;
    throw DomainError("unknown sharing mode '" + name + "'");
}

} // namespace cropt
