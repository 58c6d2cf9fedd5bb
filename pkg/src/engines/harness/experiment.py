"""
Experiment runner: fields, support sets, simulated robot runs and reports.

Randomness per run is split from one seed into independent streams for
the trajectory, the sensor (measurement and odometry noise) and the
filter, so every method sees the same measurements under a shared seed.
"""

import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.engines.harness.baselines import (
    BaselineLocalizer,
    FullGPModel,
    OfflinePITCModel,
    SoDEvenModel,
    SoDTruncateModel,
)
from src.engines.harness.fields import FieldGrid, synthesize_field
from src.engines.harness.io import load_field_csv
from src.engines.harness.support import select_support_set
from src.engines.harness.trajectory import Trajectory, generate_trajectory
from src.engines.localization.belief import Belief
from src.engines.localization.gp_localize import FilterConfig, GPLocalizer, ObservationModel
from src.engines.localization.motion import MotionNoise, OdometryAction, perturb_action
from src.kernel.errors import InvalidArgumentError
from src.kernel.gp_core import Hyperparams
from src.kernel.sparse_gp import SupportSet
from src.logging_config import get_logger, run_context
from src.schemas.experiment import (
    ExperimentConfig,
    ExperimentReport,
    InitialBelief,
    Method,
    RobustnessReport,
    RunResult,
    StepRecord,
)

logger = get_logger(__name__)

Localizer = Union[GPLocalizer, BaselineLocalizer]


@dataclass
class Scenario:
    """Fields with their hyperparameters and support sets, fixed across seeds."""

    fields: List[FieldGrid]
    hyperparams: List[Hyperparams]
    supports: List[SupportSet]
    field_ids: List[int]

    def select(self, indices: Sequence[int]) -> "Scenario":
        return Scenario(
            [self.fields[i] for i in indices],
            [self.hyperparams[i] for i in indices],
            [self.supports[i] for i in indices],
            [self.field_ids[i] for i in indices],
        )

    @property
    def bounds(self):
        lower = np.max([f.bounds[0] for f in self.fields], axis=0)
        upper = np.min([f.bounds[1] for f in self.fields], axis=0)
        if np.any(lower >= upper):
            raise InvalidArgumentError("fields do not share a common domain")
        return lower, upper


def build_fields(config: ExperimentConfig) -> List[FieldGrid]:
    hyperparams = config.hyperparams()
    if config.field_csv:
        fields = [load_field_csv(path) for path in config.field_csv]
    else:
        fields = [
            synthesize_field(
                config.rows, config.cols, h, config.field_seed(m), cell_size=config.cell_size
            )
            for m, h in enumerate(hyperparams)
        ]
    if config.measurement_noise_sd is not None:
        fields = [replace(f, measurement_noise_sd=config.measurement_noise_sd) for f in fields]
    return fields


def build_scenario(config: ExperimentConfig) -> Scenario:
    fields = build_fields(config)
    hyperparams = config.hyperparams()
    supports = [
        select_support_set(f.cell_centers(), config.support_size, h)
        for f, h in zip(fields, hyperparams)
    ]
    return Scenario(fields, hyperparams, supports, list(range(len(fields))))


def filter_config(config: ExperimentConfig, method: Method) -> FilterConfig:
    model = ObservationModel.CONSTANT if method == Method.DEAD_RECKONING else ObservationModel.GP
    return FilterConfig(
        tau=config.tau,
        particle_count=config.particle_count,
        sample_path_count=config.sample_path_count,
        noise=motion_noise(config),
        resample_threshold=config.resample_threshold,
        observation_model=model,
    )


def motion_noise(config: ExperimentConfig) -> MotionNoise:
    return MotionNoise(
        alpha1=config.alpha1, alpha2=config.alpha2, alpha3=config.alpha3, alpha4=config.alpha4
    )


def initial_belief(config: ExperimentConfig, trajectory: Trajectory, bounds, rng) -> Belief:
    if config.initial_belief == InitialBelief.UNIFORM:
        return Belief.uniform_box(bounds[0], bounds[1], config.particle_count, rng)
    return Belief.gaussian(trajectory.start, config.initial_sd, config.particle_count, rng)


def build_localizer(
    method: Method,
    config: ExperimentConfig,
    scenario: Scenario,
    initial: Belief,
    rng: np.random.Generator,
) -> Localizer:
    fc = filter_config(config, method)
    if method in (Method.GP_LOCALIZE, Method.DEAD_RECKONING):
        return GPLocalizer(fc, scenario.supports, scenario.hyperparams, initial, rng)
    if method == Method.SOD_TRUNCATE:
        models = [SoDTruncateModel(h, config.truncate_size) for h in scenario.hyperparams]
    elif method == Method.SOD_EVEN:
        models = [SoDEvenModel(h, config.even_size) for h in scenario.hyperparams]
    elif method == Method.FULL_GP:
        models = [FullGPModel(h) for h in scenario.hyperparams]
    else:
        models = [
            OfflinePITCModel(h, s, config.tau)
            for h, s in zip(scenario.hyperparams, scenario.supports)
        ]
    return BaselineLocalizer(fc, models, initial, rng)


def simulate_sensor(
    scenario: Scenario,
    trajectory: Trajectory,
    noise: MotionNoise,
    seed: np.random.SeedSequence,
):
    """
    Reported odometry and (T, M) measurements along the true trajectory.

    Odometry noise and each field's measurement noise come from separate
    streams keyed by field id, so a field sees the same noise whether it is
    run alone or together with others.
    """
    odometry_seed, measurement_seed = seed.spawn(2)
    odometry_rng = np.random.default_rng(odometry_seed)
    noisy = [perturb_action(u, noise, odometry_rng, 1)[0] for u in trajectory.actions]
    reported = [OdometryAction(rot1=a[0], trans=a[1], rot2=a[2]) for a in noisy]

    field_seeds = measurement_seed.spawn(max(scenario.field_ids) + 1)
    locations = np.array([pose.location for pose in trajectory.poses]).reshape(-1, 2)
    measurements = np.zeros((len(trajectory), len(scenario.fields)))
    for m, (field, field_id) in enumerate(zip(scenario.fields, scenario.field_ids)):
        draws = np.random.default_rng(field_seeds[field_id]).standard_normal(len(trajectory))
        if len(trajectory):
            measurements[:, m] = field.interpolate(locations) + field.measurement_noise_sd * draws
    return reported, measurements


def run_single(
    config: ExperimentConfig,
    method: Method,
    seed: int,
    scenario: Optional[Scenario] = None,
) -> RunResult:
    """One seeded run of ``method``; returns its per-step records."""
    scenario = scenario or build_scenario(config)
    traj_seed, sensor_seed, filter_seed = np.random.SeedSequence(seed).spawn(3)
    trajectory = generate_trajectory(
        config.trajectory_spec(), scenario.bounds, int(traj_seed.generate_state(1)[0])
    )
    actions, measurements = simulate_sensor(scenario, trajectory, motion_noise(config), sensor_seed)
    rng = np.random.default_rng(filter_seed)
    initial = initial_belief(config, trajectory, scenario.bounds, rng)

    with run_context(f"{method.value}-{seed}"):
        logger.info(
            "Run started",
            extra={"method": method.value, "seed": seed, "steps": len(trajectory)},
        )
        localizer = build_localizer(method, config, scenario, initial, rng)
        records: List[StepRecord] = []
        for t, ((_, true_pose), u, z) in enumerate(zip(trajectory.steps, actions, measurements), 1):
            started = time.perf_counter()
            localizer.step(u, z)
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            estimate = localizer.estimate()
            records.append(
                StepRecord(
                    t=t,
                    true_x=true_pose.x,
                    true_y=true_pose.y,
                    true_heading=true_pose.heading,
                    est_x=estimate.x,
                    est_y=estimate.y,
                    est_heading=estimate.heading,
                    error=true_pose.distance_to(estimate),
                    step_ms=elapsed_ms if config.record_timing else 0.0,
                    state_bytes=localizer.snapshot_size(),
                )
            )
        result = RunResult.from_records(method, seed, records)
        logger.info(
            "Run finished",
            extra={"method": method.value, "seed": seed, "mean_error": result.mean_error},
        )
    return result


def run_experiment(config: ExperimentConfig, scenario: Optional[Scenario] = None) -> ExperimentReport:
    """config.method over every seed, averaged."""
    scenario = scenario or build_scenario(config)
    runs = [run_single(config, config.method, seed, scenario) for seed in config.seeds]
    return ExperimentReport.from_runs(config.method, runs)


def run_comparison(config: ExperimentConfig) -> Dict[Method, ExperimentReport]:
    """Every method in config.methods on the same fields and seeds."""
    scenario = build_scenario(config)
    reports = {}
    for method in config.methods:
        runs = [run_single(config, method, seed, scenario) for seed in config.seeds]
        reports[method] = ExperimentReport.from_runs(method, runs)
    return reports


def run_field_robustness(config: ExperimentConfig) -> RobustnessReport:
    """GP-Localize on each field alone and on all fields jointly, shared seeds."""
    scenario = build_scenario(config)
    single_errors = []
    for m in range(len(scenario.fields)):
        sub = scenario.select([m])
        runs = [run_single(config, Method.GP_LOCALIZE, seed, sub) for seed in config.seeds]
        single_errors.append(ExperimentReport.from_runs(Method.GP_LOCALIZE, runs).mean_error)
    joint = [run_single(config, Method.GP_LOCALIZE, seed, scenario) for seed in config.seeds]
    return RobustnessReport(
        single_field_errors=single_errors,
        multi_field_error=ExperimentReport.from_runs(Method.GP_LOCALIZE, joint).mean_error,
    )
