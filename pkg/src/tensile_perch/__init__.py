"""Planar simulator and analysis toolkit for a drone and tethered pod perching
by wrapping the tether around a branch."""

from tensile_perch.capstan import StabilityModel, is_feasible, min_counterweight_ratio
from tensile_perch.dynamics import ControlInput, SystemState, step
from tensile_perch.kernels import BACKEND
from tensile_perch.scenario import ScenarioConfig, ScenarioError, load_scenario, save_scenario
from tensile_perch.strategies import Outcome, StrategyPhase, StrategyTrace, run_strategy

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ControlInput",
    "Outcome",
    "ScenarioConfig",
    "ScenarioError",
    "StabilityModel",
    "StrategyPhase",
    "StrategyTrace",
    "SystemState",
    "is_feasible",
    "load_scenario",
    "min_counterweight_ratio",
    "run_strategy",
    "save_scenario",
    "step",
]
