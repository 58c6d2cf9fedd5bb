"""
GP-Localize Bayes filter.

One call to `filter_step` consumes the action u_t and the measurement z_t.
Sample paths lag the particles by one step: at step t they are advanced to
x^c_{t-1} with u_{t-1} and then absorb (x^c_{t-1}, z_{t-1}), so after every
step each path's buffers hold (t - 1) mod tau observations.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.engines.localization.belief import Belief, estimate_location, resample
from src.engines.localization.motion import MotionNoise, OdometryAction, Pose, sample_motion_batch
from src.engines.localization.observation import (
    SamplePath,
    advance_sample_paths,
    init_sample_paths,
    observation_log_likelihood_batch,
    record_observation,
)
from src.kernel.errors import DegenerateBeliefError, InvalidArgumentError
from src.kernel.gp_core import Hyperparams
from src.kernel.sparse_gp import SupportSet
from src.logging_config import get_logger

logger = get_logger(__name__)


class ObservationModel(str, Enum):
    GP = "gp"
    CONSTANT = "constant"


class FilterConfig(BaseModel):
    """Particle filter settings shared by GP-Localize and the baselines."""

    model_config = ConfigDict(frozen=True)

    tau: int = Field(default=10, ge=1)
    particle_count: int = Field(default=400, ge=1)
    sample_path_count: int = Field(default=400, ge=1)
    noise: MotionNoise = Field(default_factory=MotionNoise)
    resample_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    recover_degenerate: bool = True
    observation_model: ObservationModel = ObservationModel.GP


@dataclass(frozen=True)
class FilterState:
    """Everything the filter carries between steps."""

    belief: Belief
    paths: List[SamplePath]
    t: int
    anchor: Belief
    last_action: Optional[OdometryAction] = None
    last_measurement: Optional[np.ndarray] = None


def normalize_and_resample(
    poses: np.ndarray,
    log_weights: np.ndarray,
    config: FilterConfig,
    rng: np.random.Generator,
    t: int,
) -> Belief:
    """Normalize log-weights, recover from total underflow, then resample."""
    if not np.any(np.isfinite(log_weights)) or np.any(np.isnan(log_weights)):
        if not config.recover_degenerate:
            raise DegenerateBeliefError(f"all particle weights vanished at step {t}")
        logger.warning("All particle weights vanished; resetting to uniform", extra={"t": t})
        belief = Belief.uniform(poses)
    else:
        belief = Belief.from_log_weights(poses, log_weights)
    return resample(belief, rng, config.resample_threshold)


def filter_step(
    state: FilterState,
    u: OdometryAction,
    z,
    config: FilterConfig,
    rng: np.random.Generator,
) -> FilterState:
    """Advance the filter from b(x_{t-1}) to b(x_t)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    t = state.t + 1
    belief, paths = state.belief, state.paths

    poses = sample_motion_batch(belief.poses, u, config.noise, rng)

    with np.errstate(divide="ignore"):
        log_weights = np.log(belief.weights)
    if config.observation_model is ObservationModel.GP:
        if t >= 2:
            advance_sample_paths(paths, state.last_action, state.anchor, t, config.tau, config.noise, rng)
            record_observation(paths, state.last_measurement)
        log_weights = log_weights + observation_log_likelihood_batch(z, poses[:, :2], paths)

    belief = normalize_and_resample(poses, log_weights, config, rng, t)
    anchor = belief if t % config.tau == 0 else state.anchor
    return FilterState(belief, paths, t, anchor, last_action=u, last_measurement=z)


def snapshot_size(belief: Belief, paths: Sequence[SamplePath], anchor: Optional[Belief] = None) -> int:
    """Bytes of filter memory: particles, the anchor belief and every path."""
    size = belief.poses.nbytes + belief.weights.nbytes
    if anchor is not None:
        size += anchor.poses.nbytes + anchor.weights.nbytes
    for path in paths:
        size += path.pose.nbytes + sum(s.serialized_size() for s in path.gp_states)
    return size


class GPLocalizer:
    """
    Stateful driver around `filter_step`.

    Usage:
        localizer = GPLocalizer(config, supports, hyperparams, initial, rng)
        for u, z in stream:
            localizer.step(u, z)
            pose = localizer.estimate()
    """

    def __init__(
        self,
        config: FilterConfig,
        supports: Sequence[SupportSet],
        hyperparams: Sequence[Hyperparams],
        initial: Belief,
        rng: np.random.Generator,
    ):
        if len(initial) != config.particle_count:
            raise InvalidArgumentError(
                f"initial belief has {len(initial)} particles, config expects {config.particle_count}"
            )
        self.config = config
        self.rng = rng
        paths: List[SamplePath] = []
        if config.observation_model is ObservationModel.GP:
            paths = init_sample_paths(
                initial, supports, hyperparams, config.tau, config.sample_path_count, rng
            )
        self.state = FilterState(belief=initial, paths=paths, t=0, anchor=initial)

    @property
    def belief(self) -> Belief:
        return self.state.belief

    @property
    def paths(self) -> List[SamplePath]:
        return self.state.paths

    @property
    def t(self) -> int:
        return self.state.t

    def step(self, u: OdometryAction, z) -> Belief:
        self.state = filter_step(self.state, u, z, self.config, self.rng)
        return self.state.belief

    def estimate(self) -> Pose:
        return estimate_location(self.state.belief)

    def log_likelihoods(self, z, locations) -> np.ndarray:
        """Current observation log-likelihood at arbitrary locations (read-only)."""
        return observation_log_likelihood_batch(z, locations, self.state.paths)

    def snapshot_size(self) -> int:
        return snapshot_size(self.state.belief, self.state.paths, self.state.anchor)

