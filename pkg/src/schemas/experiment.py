"""
Pydantic schemas for experiment configuration and reports.
"""

from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.kernel.errors import ConfigError
from src.kernel.gp_core import Hyperparams


class Method(str, Enum):
    """Localization methods the harness can run."""

    GP_LOCALIZE = "gp-localize"
    SOD_TRUNCATE = "sod-truncate"
    SOD_EVEN = "sod-even"
    FULL_GP = "full-gp"
    OFFLINE_PITC = "offline-pitc"
    DEAD_RECKONING = "dead-reckoning"


COMPARISON_METHODS = [
    Method.GP_LOCALIZE,
    Method.SOD_TRUNCATE,
    Method.SOD_EVEN,
    Method.FULL_GP,
    Method.OFFLINE_PITC,
]


class TrajectoryKind(str, Enum):
    LAWNMOWER = "lawnmower"
    RANDOM_WALK = "random_walk"
    WAYPOINTS = "waypoints"


class InitialBelief(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


class TrajectorySpec(BaseModel):
    """How the true robot path is generated."""

    model_config = ConfigDict(frozen=True)

    kind: TrajectoryKind = TrajectoryKind.LAWNMOWER
    steps: int = Field(200, ge=1)
    step_length: float = Field(1.0, gt=0.0)
    lane_spacing: float = Field(5.0, gt=0.0)
    margin: float = Field(1.0, ge=0.0)
    turn_sd: float = Field(0.3, ge=0.0)
    waypoints: Tuple[Tuple[float, float], ...] = ()


def _split_list(v):
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    if isinstance(v, (int, float)):
        return [v]
    return v


class ExperimentConfig(BaseModel):
    """
    Every knob of one experiment; unknown keys are rejected.

    Per-field lists (signal_var, noise_var, length_scale, prior_mean,
    field_seeds) hold either one value shared by all fields or one value
    per field.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Method
    method: Method = Method.GP_LOCALIZE
    methods: List[Method] = Field(default_factory=lambda: list(COMPARISON_METHODS))
    tau: int = Field(10, ge=1)
    support_size: int = Field(40, ge=1)
    particle_count: int = Field(400, ge=1)
    sample_path_count: int = Field(400, ge=1)
    resample_threshold: float = Field(0.5, ge=0.0, le=1.0)
    truncate_size: int = Field(10, ge=1)
    even_size: int = Field(40, ge=1)

    # Motion
    alpha1: float = Field(0.005, ge=0.0)
    alpha2: float = Field(0.005, ge=0.0)
    alpha3: float = Field(0.01, ge=0.0)
    alpha4: float = Field(0.001, ge=0.0)
    initial_belief: InitialBelief = InitialBelief.GAUSSIAN
    initial_sd: float = Field(2.0, ge=0.0)

    # Trajectory
    trajectory: TrajectoryKind = TrajectoryKind.LAWNMOWER
    steps: int = Field(200, ge=1)
    step_length: float = Field(1.0, gt=0.0)
    lane_spacing: float = Field(5.0, gt=0.0)
    margin: float = Field(1.0, ge=0.0)
    turn_sd: float = Field(0.3, ge=0.0)
    waypoints: List[Tuple[float, float]] = Field(default_factory=list)

    # Fields
    rows: int = Field(30, ge=1)
    cols: int = Field(30, ge=1)
    cell_size: float = Field(1.0, gt=0.0)
    field_count: int = Field(1, ge=1)
    field_seeds: List[int] = Field(default_factory=lambda: [0])
    field_csv: List[str] = Field(default_factory=list)
    signal_var: List[float] = Field(default_factory=lambda: [1.0])
    noise_var: List[float] = Field(default_factory=lambda: [0.01])
    length_scale: List[float] = Field(default_factory=lambda: [4.0])
    prior_mean: List[float] = Field(default_factory=lambda: [0.0])
    measurement_noise_sd: Optional[float] = Field(None, ge=0.0)

    # Runs
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    record_timing: bool = False
    warmup_steps: int = Field(5, ge=0)

    @field_validator(
        "methods", "field_seeds", "field_csv", "signal_var", "noise_var",
        "length_scale", "prior_mean", "seeds",
        mode="before",
    )
    @classmethod
    def _comma_lists(cls, v):
        return _split_list(v)

    @field_validator("waypoints", mode="before")
    @classmethod
    def _parse_waypoints(cls, v):
        if isinstance(v, str):
            points = []
            for item in _split_list(v):
                x, sep, y = item.partition(":")
                if not sep:
                    raise ValueError(f"waypoint {item!r} is not of the form x:y")
                points.append((float(x), float(y)))
            return points
        return v

    @field_validator("measurement_noise_sd", mode="before")
    @classmethod
    def _blank_is_none(cls, v):
        if isinstance(v, str) and not v.strip():
            return None
        return v

    @model_validator(mode="before")
    @classmethod
    def _field_count_from_csv(cls, data):
        if isinstance(data, dict) and "field_count" not in data:
            csv = _split_list(data.get("field_csv") or [])
            if csv:
                data = {**data, "field_count": len(csv)}
        return data

    @model_validator(mode="after")
    def _check_field_lists(self) -> "ExperimentConfig":
        if self.field_csv and len(self.field_csv) != self.field_count:
            raise ValueError("field_count must match the number of field_csv files")
        for name in ("signal_var", "noise_var", "length_scale", "prior_mean", "field_seeds"):
            values = getattr(self, name)
            if len(values) not in (1, self.field_count):
                raise ValueError(
                    f"{name} needs 1 or {self.field_count} values, got {len(values)}"
                )
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.trajectory == TrajectoryKind.WAYPOINTS and not self.waypoints:
            raise ValueError("waypoint trajectories need at least one waypoint")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Load a flat key=value file."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = dotenv_values(path)
        missing = [key for key, value in raw.items() if value is None]
        if missing:
            raise ConfigError(f"config keys without a value: {', '.join(missing)}")
        try:
            return cls(**{key.strip().lower(): value for key, value in raw.items()})
        except ValidationError as e:
            raise ConfigError(f"invalid config {path}: {e}") from e

    def with_overrides(self, **updates) -> "ExperimentConfig":
        """Copy with ``updates`` applied and re-validated."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        return ExperimentConfig(**data)

    def _per_field(self, name: str, m: int):
        values = getattr(self, name)
        return values[m] if len(values) > 1 else values[0]

    def hyperparams(self) -> List[Hyperparams]:
        return [
            Hyperparams.isotropic(
                signal_var=self._per_field("signal_var", m),
                length_scale=self._per_field("length_scale", m),
                noise_var=self._per_field("noise_var", m),
                prior_mean=self._per_field("prior_mean", m),
            )
            for m in range(self.field_count)
        ]

    def field_seed(self, m: int) -> int:
        if len(self.field_seeds) > 1:
            return self.field_seeds[m]
        return self.field_seeds[0] + m

    def trajectory_spec(self) -> TrajectorySpec:
        return TrajectorySpec(
            kind=self.trajectory,
            steps=self.steps,
            step_length=self.step_length,
            lane_spacing=self.lane_spacing,
            margin=self.margin,
            turn_sd=self.turn_sd,
            waypoints=tuple(self.waypoints),
        )


class StepRecord(BaseModel):
    """One filtering step of one run."""

    t: int
    true_x: float
    true_y: float
    true_heading: float
    est_x: float
    est_y: float
    est_heading: float
    error: float = Field(ge=0.0)
    step_ms: float = 0.0
    state_bytes: int = 0


REPORT_COLUMNS = list(StepRecord.model_fields)


class RunResult(BaseModel):
    """Per-step records and summary metrics of one seeded run."""

    method: Method
    seed: int
    records: List[StepRecord]
    mean_error: float
    final_error: float
    mean_step_ms: float

    @classmethod
    def from_records(cls, method: Method, seed: int, records: List[StepRecord]) -> "RunResult":
        errors = [r.error for r in records]
        times = [r.step_ms for r in records]
        return cls(
            method=method,
            seed=seed,
            records=records,
            mean_error=sum(errors) / len(errors) if errors else 0.0,
            final_error=errors[-1] if errors else 0.0,
            mean_step_ms=sum(times) / len(times) if times else 0.0,
        )


class ExperimentReport(BaseModel):
    """All runs of one method, averaged over seeds."""

    method: Method
    runs: List[RunResult]
    mean_error: float
    error_by_step: List[float]

    @classmethod
    def from_runs(cls, method: Method, runs: List[RunResult]) -> "ExperimentReport":
        mean_error = sum(r.mean_error for r in runs) / len(runs) if runs else 0.0
        steps = min((len(r.records) for r in runs), default=0)
        error_by_step = [
            sum(r.records[i].error for r in runs) / len(runs) for i in range(steps)
        ]
        return cls(method=method, runs=runs, mean_error=mean_error, error_by_step=error_by_step)


class TimingSeries(BaseModel):
    """Per-step wall time of one method in one run, warm-up excluded."""

    method: Method
    run: int
    t: List[int]
    step_ms: List[float]


class RobustnessReport(BaseModel):
    """Mean GP-Localize error per single field and with all fields jointly."""

    single_field_errors: List[float]
    multi_field_error: float

    @property
    def median_single_field_error(self) -> float:
        return float(np.median(self.single_field_errors))
