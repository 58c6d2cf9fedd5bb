"""
Odometry motion model.

Poses are (x, y, heading). Batches of poses are float arrays of shape
(n, 3) so particles and sample paths are propagated in one vectorized call.
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


def wrap_angle(theta):
    """Map angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta > -np.pi) & (theta <= np.pi)
    wrapped = np.where(inside, theta, np.pi - np.mod(np.pi - theta, 2.0 * np.pi))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


class Pose(BaseModel):
    """Planar robot pose; heading is normalized on construction."""

    model_config = ConfigDict(frozen=True)

    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)
    heading: float = Field(default=0.0, allow_inf_nan=False)

    @field_validator("heading")
    @classmethod
    def _normalize_heading(cls, v: float) -> float:
        return wrap_angle(v)

    @property
    def location(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading])

    @classmethod
    def from_array(cls, arr) -> "Pose":
        x, y, heading = (float(v) for v in arr)
        return cls(x=x, y=y, heading=heading)

    def distance_to(self, other: "Pose") -> float:
        return float(np.hypot(self.x - other.x, self.y - other.y))


class OdometryAction(BaseModel):
    """Relative motion as rotate, translate, rotate."""

    model_config = ConfigDict(frozen=True)

    rot1: float = Field(allow_inf_nan=False)
    trans: float = Field(allow_inf_nan=False)
    rot2: float = Field(allow_inf_nan=False)

    @classmethod
    def identity(cls) -> "OdometryAction":
        return cls(rot1=0.0, trans=0.0, rot2=0.0)

    @classmethod
    def between(cls, start: Pose, end: Pose) -> "OdometryAction":
        """The action that carries ``start`` exactly onto ``end``."""
        dx, dy = end.x - start.x, end.y - start.y
        trans = float(np.hypot(dx, dy))
        rot1 = wrap_angle(np.arctan2(dy, dx) - start.heading) if trans > 0.0 else 0.0
        rot2 = wrap_angle(end.heading - start.heading - rot1)
        return cls(rot1=rot1, trans=trans, rot2=rot2)

    def as_array(self) -> np.ndarray:
        return np.array([self.rot1, self.trans, self.rot2])


class MotionNoise(BaseModel):
    """
    Odometry noise coefficients.

    alpha1: rotation noise from rotation
    alpha2: rotation noise from translation
    alpha3: translation noise from translation
    alpha4: translation noise from rotation
    """

    model_config = ConfigDict(frozen=True)

    alpha1: float = Field(default=0.0, ge=0.0)
    alpha2: float = Field(default=0.0, ge=0.0)
    alpha3: float = Field(default=0.0, ge=0.0)
    alpha4: float = Field(default=0.0, ge=0.0)

    @property
    def is_zero(self) -> bool:
        return self.alpha1 == self.alpha2 == self.alpha3 == self.alpha4 == 0.0

    def standard_deviations(self, u: OdometryAction) -> Tuple[float, float, float]:
        rot1_sq, trans_sq, rot2_sq = u.rot1 ** 2, u.trans ** 2, u.rot2 ** 2
        return (
            float(np.sqrt(self.alpha1 * rot1_sq + self.alpha2 * trans_sq)),
            float(np.sqrt(self.alpha3 * trans_sq + self.alpha4 * (rot1_sq + rot2_sq))),
            float(np.sqrt(self.alpha1 * rot2_sq + self.alpha2 * trans_sq)),
        )


def perturb_action(
    u: OdometryAction, noise: MotionNoise, rng: np.random.Generator, n: int
) -> np.ndarray:
    """``n`` noisy copies of ``u`` as an (n, 3) array of (rot1, trans, rot2)."""
    sd = np.asarray(noise.standard_deviations(u))
    draws = rng.standard_normal((n, 3))
    return u.as_array()[None, :] - draws * sd[None, :]


def apply_actions(poses: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Compose (n, 3) poses with (n, 3) rot-trans-rot actions."""
    rot1, trans, rot2 = actions[:, 0], actions[:, 1], actions[:, 2]
    direction = poses[:, 2] + rot1
    out = np.empty_like(poses)
    out[:, 0] = poses[:, 0] + trans * np.cos(direction)
    out[:, 1] = poses[:, 1] + trans * np.sin(direction)
    out[:, 2] = wrap_angle(direction + rot2)
    return out


def sample_motion_batch(
    poses: np.ndarray, u: OdometryAction, noise: MotionNoise, rng: np.random.Generator
) -> np.ndarray:
    """Draw x_t ~ p(x_t | u_t, x_{t-1}) independently for every row of ``poses``."""
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    return apply_actions(poses, perturb_action(u, noise, rng, poses.shape[0]))


def sample_motion(prev: Pose, u: OdometryAction, noise: MotionNoise, rng: np.random.Generator) -> Pose:
    return Pose.from_array(sample_motion_batch(prev.as_array()[None, :], u, noise, rng)[0])
