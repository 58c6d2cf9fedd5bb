"""
Harness Engine - fields, trajectories, baselines and experiment runs.
"""

from src.engines.harness.benchmark import benchmark_timing
from src.engines.harness.experiment import (
    Scenario,
    build_scenario,
    run_comparison,
    run_experiment,
    run_field_robustness,
    run_single,
)
from src.engines.harness.fields import (
    FieldGrid,
    field_from_samples,
    field_measure,
    synthesize_field,
)
from src.engines.harness.io import load_field_csv, save_field_csv, save_report_csv
from src.engines.harness.support import select_support_set
from src.engines.harness.trajectory import Trajectory, generate_trajectory

__all__ = [
    "benchmark_timing",
    "Scenario",
    "build_scenario",
    "run_comparison",
    "run_experiment",
    "run_field_robustness",
    "run_single",
    "FieldGrid",
    "field_from_samples",
    "field_measure",
    "synthesize_field",
    "load_field_csv",
    "save_field_csv",
    "save_report_csv",
    "select_support_set",
    "Trajectory",
    "generate_trajectory",
]
