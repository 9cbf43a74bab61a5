"""Scenario configuration, orchestration, reports, plots and the CLI."""

from .runner import evaluate_assertion, run_analysis, run_scenario, run_suite
from .scenario import SCENARIO_DIR, Scenario, load_scenario, make_boundary_data, scenario_from_dict

__all__ = [
    "SCENARIO_DIR",
    "Scenario",
    "evaluate_assertion",
    "load_scenario",
    "make_boundary_data",
    "run_analysis",
    "run_scenario",
    "run_suite",
    "scenario_from_dict",
]
