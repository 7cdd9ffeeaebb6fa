"""Deterministic event-driven simulator for composed systems."""

from .asserts import AssertReport, AssertionResult, assert_trace, matches
from .engine import Simulation, SimulationError, StepLimitExceeded, replay_determinism, run_scenario
from .predictors import CachingPredictor, OracleStub, Predictor, PredictorError, TrainedModel, UnboundPredictor
from .scenario import Assertion, Injection, Pattern, Scenario, ScenarioError, load_scenario, scenario_from_tree
from .trace import TensorValue, Trace, TraceEvent

__all__ = [
    "AssertReport",
    "Assertion",
    "AssertionResult",
    "CachingPredictor",
    "Injection",
    "OracleStub",
    "Pattern",
    "Predictor",
    "PredictorError",
    "Scenario",
    "ScenarioError",
    "Simulation",
    "SimulationError",
    "StepLimitExceeded",
    "TensorValue",
    "Trace",
    "TraceEvent",
    "TrainedModel",
    "UnboundPredictor",
    "assert_trace",
    "load_scenario",
    "matches",
    "replay_determinism",
    "run_scenario",
    "scenario_from_tree",
]
