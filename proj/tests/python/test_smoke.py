"""Smoke tests for the python bindings: thin checks that the main operations
are reachable and agree with known values; the C++ suites carry the load."""

import json
import math
import os

import pytest

import cropt


def make_days(year, rain_fn=lambda doy: 1.0 if doy % 3 == 0 else 0.0):
    days = []
    date = f"{year}-01-01"
    n = 366 if (year % 4 == 0 and year % 100 != 0) or year % 400 == 0 else 365
    import datetime

    d0 = datetime.date(year, 1, 1)
    for doy in range(n):
        d = d0 + datetime.timedelta(days=doy)
        season = math.cos(2 * math.pi * (doy - 195) / 365.0)
        mean_t = 10.5 + 14.5 * season
        days.append(
            cropt.WeatherDay(
                date=d.isoformat(),
                radiation=max(1.0, 13 + 9 * season),
                max_temp=mean_t + 6,
                min_temp=mean_t - 6,
                rain=rain_fn(doy),
            )
        )
    return days


def test_cvar_limits():
    assert cropt.cvar([1.0, 2.0, 3.0], [1 / 3, 1 / 3, 1 / 3], 1.0) == pytest.approx(2.0)
    assert cropt.cvar([1.0, 2.0, 3.0], [1 / 3, 1 / 3, 1 / 3], 1 / 3) == 1.0
    assert cropt.cvar([0.0, 4.0, 8.0, 12.0], [0.25] * 4, 0.375) == pytest.approx(4 / 3)
    with pytest.raises(ValueError):
        cropt.cvar([1.0], [1.0], 0.0)


def test_encode_decode_roundtrip():
    space = cropt.DecisionSpace.corn_belt_default()
    assert space.dims == 5
    assert space.cardinality == 58800
    x = cropt.DecisionVector([3, 10, 4, 2, 1])
    u = cropt.encode(x, space)
    assert u[1] == 0.5
    assert cropt.decode(u, space) == x
    assert x.values(space)[4] == 105.0


def test_gp_fit_predict():
    kernel = cropt.KernelSpec(noise_variance=0.0, lengthscales=[0.2])
    model = cropt.GpModel.fit([[0.0], [0.5], [1.0]], [1.0, 3.0, 2.0], kernel)
    mean, var = model.predict([0.5])
    assert mean == pytest.approx(3.0, abs=1e-6)
    assert var >= 0.0
    spec = cropt.AcquisitionSpec("expected-improvement")
    point, value = cropt.maximize_acquisition(spec, model, incumbent=3.0, seed=7, n_starts=8)
    assert len(point) == 1 and 0.0 <= point[0] <= 1.0
    assert value >= 0.0
    assert cropt.expected_improvement(1.0, 1.0, 1.0) == pytest.approx(0.3989422804014327)


def test_scenarios_and_surrogate():
    days = {y: make_days(y, lambda doy, y=y: (y % 7) * 0.8 if doy % 4 == 0 else 0.0) for y in range(2000, 2011)}
    # build a CSV archive on disk and load it back
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "demo.csv")
        with open(path, "w") as f:
            f.write("date,radiation,maxt,mint,rain\n")
            for y in sorted(days):
                for d in days[y]:
                    f.write(f"{d.date},{d.radiation},{d.max_temp},{d.min_temp},{d.rain}\n")
        archive = cropt.load_weather_csv(path, "demo")

    assert archive.years == list(range(2000, 2011))
    observed = archive.year(2010)[:59]  # through Feb 28; decision on Mar 1
    scenarios = cropt.build_scenarios(archive, 2010, observed, "strategy-1")
    assert len(scenarios) == 10

    st = cropt.precip_stats(archive.year(2010))
    assert st.sum == pytest.approx(sum(d.rain for d in archive.year(2010)))

    space = cropt.DecisionSpace.corn_belt_default()
    params = cropt.SurrogateParams.reference()
    ev = cropt.SurrogateEvaluator(params, space)
    x = cropt.DecisionVector([0, 10, 4, 3, 3])
    y = ev.evaluate(x, scenarios.scenario(0))
    assert 0.0 <= y <= 1.5 * params.base_yield
    assert y == cropt.surrogate_yield(x, scenarios.scenario(0), params, space)


def test_pbo_with_python_evaluator():
    space = cropt.DecisionSpace(
        [cropt.VariableSpec("a", [0.0, 1.0, 2.0, 3.0, 4.0]), cropt.VariableSpec("b", [0.0, 1.0, 2.0])]
    )
    days = make_days(2001)
    scenarios = cropt.ScenarioSet.uniform([cropt.Scenario("only", 2001, days)])

    class Bowl(cropt.Evaluator):
        def evaluate(self, x, scenario):
            u = cropt.encode(x, space)
            return 100.0 - sum(40 * (c - 0.7) ** 2 for c in u)

    cfg = cropt.PboConfig(n_instances=2, max_iterations=4, alpha=1.0, seed=5, n_starts=6, dims=space.dims)
    result = cropt.run_pbo(cfg, space, scenarios, Bowl())
    assert result.evaluation_count == len(result.records)
    assert result.trace == sorted(result.trace)
    # bowl optimum on the grid: a=3 (0.75), b=1 or 2 (0.5/1.0) -> a clearly 3
    assert result.best.x.levels[0] == 3

    manifest = cropt.run_manifest(cfg, space, scenarios, result)
    assert manifest["format"] == "cropt-run/1"
    assert manifest["best"]["objective"] == result.best.y


def test_run_experiment_mini():
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        weather_dir = os.path.join(tmp, "weather")
        os.makedirs(weather_dir)
        with open(os.path.join(weather_dir, "demo.csv"), "w") as f:
            f.write("date,radiation,maxt,mint,rain\n")
            for y in range(2008, 2013):
                for d in make_days(y, lambda doy, y=y: (y % 5) * 1.1 if doy % 4 == 0 else 0.0):
                    f.write(f"{d.date},{d.radiation},{d.max_temp},{d.min_temp},{d.rain}\n")
        report = cropt.run_experiment(
            {
                "locations": ["demo"],
                "test_years": [2012],
                "strategies": ["strategy-3"],
                "alphas": ["robust", 1.0],
                "weather_dir": weather_dir,
                "pbo": {"n_instances": 1, "max_iterations": 2, "initial_design_size": 5, "n_starts": 4},
                "master_seed": 3,
            }
        )
    assert report["format"] == "cropt-experiment/1"
    assert len(report["cells"]) == 2
    for cell in report["cells"]:
        assert cell["ok"]
        # strategy-3 benchmarks against the observed year itself
        assert cell["objective"] == pytest.approx(cell["realized_yield"])
    assert report["cells"][0]["chosen_levels"] == report["cells"][1]["chosen_levels"]


def test_reference_params_file():
    path = os.environ.get("CROPT_PARAMS")
    if not path or not os.path.exists(path):
        pytest.skip("CROPT_PARAMS not set")
    params = cropt.SurrogateParams.from_json_file(path)
    assert json.loads(params.json) == json.loads(cropt.SurrogateParams.reference().json)
