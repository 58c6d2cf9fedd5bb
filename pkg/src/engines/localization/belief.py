"""
Particle belief over robot pose.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from src.engines.localization.motion import Pose, wrap_angle
from src.kernel.errors import InvalidArgumentError
from src.logging_config import get_logger

logger = get_logger(__name__)

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Belief:
    """Weighted particle set: poses (n, 3) and weights (n,) summing to one."""

    poses: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        poses = np.atleast_2d(np.asarray(self.poses, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if poses.shape[0] == 0:
            raise InvalidArgumentError("belief needs at least one particle")
        if poses.ndim != 2 or poses.shape[1] != 3:
            raise InvalidArgumentError(f"poses must have shape (n, 3), got {poses.shape}")
        if weights.shape[0] != poses.shape[0]:
            raise InvalidArgumentError(f"{poses.shape[0]} poses but {weights.shape[0]} weights")
        if not np.all(np.isfinite(poses)):
            raise InvalidArgumentError("particle poses must be finite")
        if np.any(weights < 0.0) or abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidArgumentError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "poses", poses)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.poses.shape[0]

    @property
    def locations(self) -> np.ndarray:
        return self.poses[:, :2]

    @classmethod
    def uniform(cls, poses) -> "Belief":
        poses = np.atleast_2d(np.asarray(poses, dtype=float))
        n = poses.shape[0]
        if n == 0:
            raise InvalidArgumentError("belief needs at least one particle")
        return cls(poses, np.full(n, 1.0 / n))

    @classmethod
    def from_log_weights(cls, poses: np.ndarray, log_weights: np.ndarray) -> "Belief":
        """Normalize log-weights with log-sum-exp."""
        weights = np.exp(log_weights - logsumexp(log_weights))
        return cls(poses, weights / weights.sum())

    @classmethod
    def gaussian(
        cls,
        center: Pose,
        sd: float,
        count: int,
        rng: np.random.Generator,
        heading_sd: float = 0.0,
    ) -> "Belief":
        """Particles scattered isotropically around a known start pose."""
        if count < 1:
            raise InvalidArgumentError("particle count must be positive")
        draws = rng.standard_normal((count, 3))
        poses = center.as_array()[None, :] + draws * np.array([sd, sd, heading_sd])
        poses[:, 2] = wrap_angle(poses[:, 2])
        return cls.uniform(poses)

    @classmethod
    def uniform_box(
        cls,
        lower: Tuple[float, float],
        upper: Tuple[float, float],
        count: int,
        rng: np.random.Generator,
    ) -> "Belief":
        """Particles uniform over a rectangle with uniform headings."""
        if count < 1:
            raise InvalidArgumentError("particle count must be positive")
        xy = rng.uniform(lower, upper, size=(count, 2))
        heading = wrap_angle(rng.uniform(-np.pi, np.pi, size=count))
        return cls.uniform(np.column_stack([xy, heading]))

    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(self.weights ** 2))

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` poses sampled with replacement in proportion to weight."""
        idx = rng.choice(len(self), size=count, p=self.weights)
        return self.poses[idx].copy()


def estimate_location(belief: Belief) -> Pose:
    """Weighted mean location; heading by weighted circular mean."""
    w = belief.weights
    x, y = w @ belief.poses[:, 0], w @ belief.poses[:, 1]
    heading = np.arctan2(w @ np.sin(belief.poses[:, 2]), w @ np.cos(belief.poses[:, 2]))
    return Pose(x=float(x), y=float(y), heading=float(heading))


def systematic_resample_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Offspring indices from one uniform offset and n evenly spaced pointers."""
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def systematic_resample(belief: Belief, rng: np.random.Generator) -> Belief:
    idx = systematic_resample_indices(belief.weights, rng)
    return Belief.uniform(belief.poses[idx])


def resample(belief: Belief, rng: np.random.Generator, threshold: float = 0.5) -> Belief:
    """Systematic resampling, only when ESS < threshold * particle count."""
    ess = belief.effective_sample_size()
    if ess >= threshold * len(belief):
        return belief
    logger.debug("Resampling particles", extra={"ess": ess, "particles": len(belief)})
    return systematic_resample(belief, rng)
