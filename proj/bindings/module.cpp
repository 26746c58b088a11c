#include "cropt/acquisition.hpp"
#include "cropt/config.hpp"
#include "cropt/experiment.hpp"
#include "cropt/gp.hpp"
#include "cropt/pbo.hpp"
#include "cropt/risk.hpp"
#include "cropt/rng.hpp"
#include "cropt/scenario.hpp"
#include "cropt/simulator.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <Eigen/Dense>

namespace py = pybind11;
using namespace cropt;
using json = nlohmann::ordered_json;

namespace {

class PyEvaluator : public Evaluator {
public:
    using Evaluator::Evaluator;
    double evaluate(const DecisionVector& x, const Scenario& s) const override {
        PYBIND11_OVERRIDE_PURE(double, Evaluator, evaluate, x, s);
    }
};

GpModel fit_points(const std::vector<std::vector<double>>& inputs, const std::vector<double>& targets,
                   const KernelSpec& kernel) {
    detail::require(!inputs.empty() && inputs.size() == targets.size(),
                    "inputs and targets must be nonempty and the same length");
    Eigen::MatrixXd X(inputs.size(), inputs[0].size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        detail::require(inputs[i].size() == inputs[0].size(), "ragged input matrix");
        for (std::size_t j = 0; j < inputs[i].size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inputs[i][j];
        y(static_cast<Eigen::Index>(i)) = targets[i];
    }
    return GpModel::fit(X, y, kernel);
}

} // namespace

PYBIND11_MODULE(_cropt, m) {
    m.doc() = "scenario-based risk-aware optimization of farm management decisions";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IngestionError>(m, "IngestionError", PyExc_ValueError);
    py::register_exception<EvaluationError>(m, "EvaluationError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ArchiveError>(m, "ArchiveError", PyExc_FileNotFoundError);

    py::class_<Date>(m, "Date")
        .def(py::init([](const std::string& iso) { return parse_iso_date(iso); }))
        .def_readwrite("year", &Date::year)
        .def_readwrite("month", &Date::month)
        .def_readwrite("day", &Date::day)
        .def("__repr__", [](const Date& d) { return "Date('" + to_iso(d) + "')"; })
        .def("__str__", [](const Date& d) { return to_iso(d); });

    py::class_<VariableSpec>(m, "VariableSpec")
        .def(py::init<std::string, std::vector<double>>(), py::arg("name"), py::arg("grid"))
        .def_readonly("name", &VariableSpec::name)
        .def_readonly("grid", &VariableSpec::grid);

    py::class_<DecisionSpace>(m, "DecisionSpace")
        .def(py::init<std::vector<VariableSpec>>())
        .def_static("corn_belt_default", &DecisionSpace::corn_belt_default)
        .def_property_readonly("dims", &DecisionSpace::dims)
        .def_property_readonly("cardinality", &DecisionSpace::cardinality)
        .def("variables", &DecisionSpace::variables, py::return_value_policy::reference_internal)
        .def("index_of", &DecisionSpace::index_of);

    py::class_<DecisionVector>(m, "DecisionVector")
        .def(py::init([](std::vector<int> levels) { return DecisionVector{std::move(levels)}; }))
        .def_readwrite("levels", &DecisionVector::levels)
        .def("values", &DecisionVector::values)
        .def("__eq__", [](const DecisionVector& a, const DecisionVector& b) { return a == b; })
        .def("__repr__", [](const DecisionVector& x) {
            std::string out = "DecisionVector([";
            for (std::size_t i = 0; i < x.levels.size(); ++i)
                out += (i ? "," : "") + std::to_string(x.levels[i]);
            return out + "])";
        });

    m.def("encode", &encode, py::arg("x"), py::arg("space"));
    m.def(
        "decode",
        [](const std::vector<double>& u, const DecisionSpace& space) { return decode(u, space); },
        py::arg("u"), py::arg("space"));

    m.def(
        "cvar",
        [](const std::vector<double>& values, const std::vector<double>& probabilities, double alpha) {
            return cvar(values, probabilities, alpha);
        },
        py::arg("values"), py::arg("probabilities"), py::arg("alpha"),
        "Discrete CVaR of the worst alpha-tail (values are maximized).");

    py::class_<WeatherDay>(m, "WeatherDay")
        .def(py::init([](const std::string& iso, double radiation, double maxt, double mint,
                         double rain) {
                 WeatherDay d{parse_iso_date(iso), radiation, maxt, mint, rain};
                 d.validate();
                 return d;
             }),
             py::arg("date"), py::arg("radiation"), py::arg("max_temp"), py::arg("min_temp"),
             py::arg("rain"))
        .def_readwrite("date", &WeatherDay::date)
        .def_readwrite("radiation", &WeatherDay::radiation)
        .def_readwrite("max_temp", &WeatherDay::max_temp)
        .def_readwrite("min_temp", &WeatherDay::min_temp)
        .def_readwrite("rain", &WeatherDay::rain);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init([](std::string id, int source_year, std::vector<WeatherDay> days) {
                 Scenario s{std::move(id), source_year, std::move(days)};
                 s.validate();
                 return s;
             }),
             py::arg("id"), py::arg("source_year"), py::arg("days"))
        .def_readonly("id", &Scenario::id)
        .def_readonly("source_year", &Scenario::source_year)
        .def_readonly("days", &Scenario::days);

    py::class_<ScenarioSet>(m, "ScenarioSet")
        .def(py::init<std::vector<Scenario>, std::vector<double>>(), py::arg("scenarios"),
             py::arg("probabilities"))
        .def_static("uniform", &ScenarioSet::uniform)
        .def("__len__", &ScenarioSet::size)
        .def("scenario", &ScenarioSet::scenario, py::return_value_policy::reference_internal)
        .def_property_readonly("probabilities", &ScenarioSet::probabilities);

    py::class_<WeatherArchive>(m, "WeatherArchive")
        .def_readonly("location_id", &WeatherArchive::location_id)
        .def_property_readonly("years",
                               [](const WeatherArchive& a) {
                                   std::vector<int> out;
                                   for (const auto& [y, _] : a.years) out.push_back(y);
                                   return out;
                               })
        .def("year", [](const WeatherArchive& a, int year) {
            const auto it = a.years.find(year);
            detail::require<ArchiveError>(it != a.years.end(),
                                          "no year " + std::to_string(year) + " in archive");
            return it->second;
        });

    m.def("load_weather_csv", &load_weather_csv, py::arg("path"), py::arg("location_id"));

    py::class_<StrategySpec>(m, "StrategySpec")
        .def_static("parse", &StrategySpec::parse)
        .def_property_readonly("name", &StrategySpec::name)
        .def("decision_date", &StrategySpec::decision_date);

    m.def(
        "build_scenarios",
        [](const WeatherArchive& archive, int target_year, const std::vector<WeatherDay>& observed,
           const std::string& strategy) {
            return build_scenarios(archive, target_year, observed, StrategySpec::parse(strategy));
        },
        py::arg("archive"), py::arg("target_year"), py::arg("observed"), py::arg("strategy"));

    py::class_<PrecipStats>(m, "PrecipStats")
        .def_readonly("mean", &PrecipStats::mean)
        .def_readonly("std", &PrecipStats::std)
        .def_readonly("sum", &PrecipStats::sum)
        .def_readonly("p25", &PrecipStats::p25)
        .def_readonly("p50", &PrecipStats::p50)
        .def_readonly("p75", &PrecipStats::p75)
        .def_readonly("max", &PrecipStats::max);

    m.def(
        "precip_stats",
        [](const std::vector<WeatherDay>& series) { return precip_stats(series); },
        py::arg("series"));

    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init([](const std::string& family, std::vector<double> lengthscales,
                         double signal_variance, double noise_variance) {
                 KernelSpec k{kernel_family_from_string(family), std::move(lengthscales),
                              signal_variance, noise_variance};
                 return k;
             }),
             py::arg("family") = "squared-exponential",
             py::arg("lengthscales") = std::vector<double>{}, py::arg("signal_variance") = 1.0,
             py::arg("noise_variance") = 1e-6)
        .def_static(
            "defaults",
            [](std::size_t dims, const std::string& family) {
                return KernelSpec::defaults(dims, kernel_family_from_string(family));
            },
            py::arg("dims"), py::arg("family") = "squared-exponential")
        .def_property_readonly("family", [](const KernelSpec& k) { return std::string(to_string(k.family)); })
        .def_readwrite("lengthscales", &KernelSpec::lengthscales)
        .def_readwrite("signal_variance", &KernelSpec::signal_variance)
        .def_readwrite("noise_variance", &KernelSpec::noise_variance);

    py::class_<GpModel>(m, "GpModel")
        .def_static("fit", &fit_points, py::arg("inputs"), py::arg("targets"), py::arg("kernel"))
        .def(
            "predict",
            [](const GpModel& model, const std::vector<double>& u) {
                const auto p = model.predict(u);
                return py::make_tuple(p.mean, p.variance);
            },
            py::arg("u"))
        .def_property_readonly("train_size", &GpModel::train_size)
        .def_property_readonly("log_marginal_likelihood", &GpModel::log_marginal_likelihood);

    py::class_<AcquisitionSpec>(m, "AcquisitionSpec")
        .def(py::init([](const std::string& family, double kappa, double xi) {
                 AcquisitionSpec a{acquisition_family_from_string(family), kappa, xi};
                 a.validate();
                 return a;
             }),
             py::arg("family") = "expected-improvement", py::arg("kappa") = 2.0, py::arg("xi") = 0.0)
        .def_property_readonly("family",
                               [](const AcquisitionSpec& a) { return std::string(to_string(a.family)); })
        .def_readwrite("kappa", &AcquisitionSpec::kappa)
        .def_readwrite("xi", &AcquisitionSpec::xi);

    m.def("expected_improvement", &expected_improvement, py::arg("mean"), py::arg("sigma"),
          py::arg("best"), py::arg("xi") = 0.0);
    m.def("upper_confidence_bound", &upper_confidence_bound, py::arg("mean"), py::arg("sigma"),
          py::arg("kappa") = 2.0);
    m.def("probability_of_improvement", &probability_of_improvement, py::arg("mean"),
          py::arg("sigma"), py::arg("best"), py::arg("xi") = 0.0);

    m.def(
        "acquisition_value",
        [](const AcquisitionSpec& spec, const GpModel& model, const std::vector<double>& u,
           double incumbent) { return acquisition_value(spec, model, u, incumbent); },
        py::arg("spec"), py::arg("model"), py::arg("u"), py::arg("incumbent"));

    m.def(
        "maximize_acquisition",
        [](const AcquisitionSpec& spec, const GpModel& model, double incumbent, std::uint64_t seed,
           int n_starts) {
            const auto r = maximize_acquisition_continuous(spec, model, incumbent, seed, n_starts);
            return py::make_tuple(r.point, r.value);
        },
        py::arg("spec"), py::arg("model"), py::arg("incumbent"), py::arg("seed") = 0,
        py::arg("n_starts") = 16,
        "Multi-start quasi-Newton maximization over the unit cube; returns (point, value).");

    py::class_<SurrogateParams>(m, "SurrogateParams")
        .def_static("reference", &SurrogateParams::reference)
        .def_static("from_json_file", &SurrogateParams::from_json_file)
        .def_readwrite("base_yield", &SurrogateParams::base_yield)
        .def_property_readonly("json", &SurrogateParams::to_json);

    py::class_<Evaluator, PyEvaluator>(m, "Evaluator")
        .def(py::init<>())
        .def("evaluate", &Evaluator::evaluate, py::arg("x"), py::arg("scenario"));

    py::class_<SurrogateEvaluator, Evaluator>(m, "SurrogateEvaluator")
        .def(py::init<SurrogateParams, const DecisionSpace&>(), py::arg("params"), py::arg("space"))
        .def("evaluate", &SurrogateEvaluator::evaluate, py::arg("x"), py::arg("scenario"));

    m.def("surrogate_yield", &surrogate_yield, py::arg("x"), py::arg("scenario"), py::arg("params"),
          py::arg("space"));

    py::class_<ExternalAdapterConfig>(m, "ExternalAdapterConfig")
        .def(py::init<>())
        .def_readwrite("template_path", &ExternalAdapterConfig::template_path)
        .def_readwrite("command", &ExternalAdapterConfig::command)
        .def_readwrite("output_rule", &ExternalAdapterConfig::output_rule)
        .def_readwrite("timeout_seconds", &ExternalAdapterConfig::timeout_seconds)
        .def_readwrite("cache_dir", &ExternalAdapterConfig::cache_dir)
        .def_readwrite("work_root", &ExternalAdapterConfig::work_root);

    py::class_<ExternalEvaluator, Evaluator>(m, "ExternalEvaluator")
        .def(py::init<ExternalAdapterConfig, const DecisionSpace&>(), py::arg("config"),
             py::arg("space"))
        .def("evaluate", &ExternalEvaluator::evaluate, py::arg("x"), py::arg("scenario"))
        .def_property_readonly("invocations", &ExternalEvaluator::invocations);

    py::class_<RiskSpec>(m, "RiskSpec")
        .def(py::init<double>(), py::arg("alpha"))
        .def_readonly("alpha", &RiskSpec::alpha)
        .def("mode", [](const RiskSpec& r, std::size_t n) { return std::string(to_string(r.mode(n))); });

    py::class_<BoInstanceConfig>(m, "BoInstanceConfig")
        .def(py::init([](const KernelSpec& kernel, const AcquisitionSpec& acq, std::uint64_t seed) {
                 return BoInstanceConfig{kernel, acq, seed};
             }),
             py::arg("kernel"), py::arg("acquisition"), py::arg("seed"))
        .def_readwrite("kernel", &BoInstanceConfig::kernel)
        .def_readwrite("acquisition", &BoInstanceConfig::acquisition)
        .def_readwrite("seed", &BoInstanceConfig::seed);

    py::class_<PboConfig>(m, "PboConfig")
        .def(py::init([](int n_instances, int max_iterations, double alpha,
                         std::vector<BoInstanceConfig> instances, int initial_design_size,
                         const std::string& sharing_mode, std::uint64_t seed, int n_starts,
                         int refit_every, std::size_t dims) {
                 PboConfig cfg;
                 cfg.n_instances = n_instances;
                 cfg.max_iterations = max_iterations;
                 cfg.risk = RiskSpec(alpha);
                 cfg.instances = instances.empty()
                                     ? PboConfig::default_instances(dims, n_instances, seed)
                                     : std::move(instances);
                 cfg.initial_design_size = initial_design_size;
                 cfg.sharing_mode = sharing_mode_from_string(sharing_mode);
                 cfg.init_seed = seed_combine(seed, "initial-design");
                 cfg.n_starts = n_starts;
                 cfg.refit_every = refit_every;
                 return cfg;
             }),
             py::arg("n_instances") = 4, py::arg("max_iterations") = 50, py::arg("alpha") = 1.0,
             py::arg("instances") = std::vector<BoInstanceConfig>{},
             py::arg("initial_design_size") = 0,
             py::arg("sharing_mode") = "sequential-within-iteration", py::arg("seed") = 1,
             py::arg("n_starts") = 16, py::arg("refit_every") = 0, py::arg("dims") = 5)
        .def_readwrite("n_instances", &PboConfig::n_instances)
        .def_readwrite("max_iterations", &PboConfig::max_iterations)
        .def_readwrite("initial_design_size", &PboConfig::initial_design_size)
        .def_readwrite("n_starts", &PboConfig::n_starts);

    py::class_<EvaluationRecord>(m, "EvaluationRecord")
        .def_readonly("x", &EvaluationRecord::x)
        .def_readonly("per_scenario", &EvaluationRecord::per_scenario)
        .def_readonly("y", &EvaluationRecord::y);

    py::class_<PboResult>(m, "PboResult")
        .def_readonly("best", &PboResult::best)
        .def_readonly("trace", &PboResult::trace)
        .def_readonly("evaluation_count", &PboResult::evaluation_count)
        .def_readonly("grid_exhausted", &PboResult::grid_exhausted)
        .def_property_readonly("records", [](const PboResult& r) { return r.dataset.records(); });

    m.def(
        "run_pbo",
        [](const PboConfig& config, const DecisionSpace& space, const ScenarioSet& scenarios,
           const Evaluator& evaluator) { return run_pbo(config, space, scenarios, evaluator); },
        py::arg("config"), py::arg("space"), py::arg("scenarios"), py::arg("evaluator"));

    m.def(
        "run_manifest_json",
        [](const PboConfig& config, const DecisionSpace& space, const ScenarioSet& scenarios,
           const PboResult& result) { return run_manifest(config, space, scenarios, result).dump(2); },
        py::arg("config"), py::arg("space"), py::arg("scenarios"), py::arg("result"));

    m.def(
        "run_experiment_json",
        [](const std::string& config_json) {
            const auto cfg = experiment_config_from_json(json::parse(config_json));
            return run_experiment(cfg).dump(2);
        },
        py::arg("config_json"),
        "Run the full experiment grid from a JSON config string; returns the report JSON.");
}
