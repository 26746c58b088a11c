"""Scenario-based, risk-aware optimization of farm management decisions.

The heavy lifting lives in the C++ extension ``_cropt``; this package
re-exports it and adds a few JSON conveniences.
"""

import json as _json

from ._cropt import (  # noqa: F401
    AcquisitionSpec,
    ArchiveError,
    BoInstanceConfig,
    ConfigError,
    Date,
    DecisionSpace,
    DecisionVector,
    DomainError,
    EvaluationError,
    EvaluationRecord,
    Evaluator,
    ExternalAdapterConfig,
    ExternalEvaluator,
    GpModel,
    IngestionError,
    KernelSpec,
    NumericalError,
    PboConfig,
    PboResult,
    PrecipStats,
    RiskSpec,
    Scenario,
    ScenarioSet,
    StrategySpec,
    SurrogateEvaluator,
    SurrogateParams,
    VariableSpec,
    WeatherArchive,
    WeatherDay,
    acquisition_value,
    build_scenarios,
    cvar,
    decode,
    encode,
    expected_improvement,
    load_weather_csv,
    maximize_acquisition,
    precip_stats,
    probability_of_improvement,
    run_manifest_json,
    run_pbo,
    surrogate_yield,
    upper_confidence_bound,
)
from ._cropt import run_experiment_json as _run_experiment_json

__all__ = [name for name in dir() if not name.startswith("_")] + [
    "run_experiment",
    "run_manifest",
]


def run_experiment(config):
    """Run the full experiment grid; ``config`` is a dict or a JSON string.

    Returns the report as a dict (the same structure ``cropt experiment``
    writes to report.json).
    """
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _json.loads(_run_experiment_json(config))


def run_manifest(config, space, scenarios, result):
    """Reproducibility manifest of a ``run_pbo`` result, as a dict."""
    return _json.loads(run_manifest_json(config, space, scenarios, result))
