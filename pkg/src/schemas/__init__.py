"""
Pydantic schemas for experiment configuration and reports.
"""

from src.schemas.experiment import (
    COMPARISON_METHODS,
    REPORT_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    InitialBelief,
    Method,
    RobustnessReport,
    RunResult,
    StepRecord,
    TimingSeries,
    TrajectoryKind,
    TrajectorySpec,
)

__all__ = [
    "COMPARISON_METHODS",
    "REPORT_COLUMNS",
    "ExperimentConfig",
    "ExperimentReport",
    "InitialBelief",
    "Method",
    "RobustnessReport",
    "RunResult",
    "StepRecord",
    "TimingSeries",
    "TrajectoryKind",
    "TrajectorySpec",
]
