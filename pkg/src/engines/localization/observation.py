"""
Sample paths and the Monte Carlo observation model.

Each sample path is one hypothesis of the robot's past trajectory. It keeps
only its current simulated pose and one online GP state per field, so a
path costs the same memory at every time step. The likelihood of a
measurement at a candidate location averages, over paths, the product over
fields of each path's GP predictive density.
"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.special import logsumexp

from src.engines.localization.belief import Belief
from src.engines.localization.motion import MotionNoise, OdometryAction, Pose, sample_motion_batch
from src.kernel.errors import InvalidArgumentError
from src.kernel.gp_core import Hyperparams, gaussian_logpdf_batch
from src.kernel.online_sparse_gp import OnlineGPState
from src.kernel.sparse_gp import SupportFactor, SupportSet


@dataclass
class SamplePath:
    """Simulated pose x^c_{t-1} plus one online GP state per field."""

    index: int
    pose: np.ndarray
    gp_states: List[OnlineGPState] = field(default_factory=list)

    @property
    def current_pose(self) -> Pose:
        return Pose.from_array(self.pose)

    @property
    def buffer_length(self) -> int:
        return self.gp_states[0].buffer_length if self.gp_states else 0

    def copy(self) -> "SamplePath":
        return SamplePath(self.index, self.pose.copy(), [s.copy() for s in self.gp_states])


def init_sample_paths(
    initial: Belief,
    supports: Sequence[SupportSet],
    hyperparams: Sequence[Hyperparams],
    tau: int,
    count: int,
    rng: np.random.Generator,
) -> List[SamplePath]:
    """Draw ``count`` starting poses from b(x_0), each with empty GP states."""
    if count < 1:
        raise InvalidArgumentError("sample path count must be positive")
    if len(supports) != len(hyperparams) or not supports:
        raise InvalidArgumentError("one support set and one hyperparameter set per field")
    factors = [SupportFactor.build(s, h) for s, h in zip(supports, hyperparams)]
    poses = initial.draw(count, rng)
    return [
        SamplePath(c, poses[c], [OnlineGPState(f, tau) for f in factors])
        for c in range(count)
    ]


def reanchor_due(t: int, tau: int) -> bool:
    """True at t = N*tau + 2 for N >= 1."""
    return t >= tau + 2 and (t - 2) % tau == 0


def advance_sample_paths(
    paths: List[SamplePath],
    u: OdometryAction,
    anchor: Belief,
    t: int,
    tau: int,
    noise: MotionNoise,
    rng: np.random.Generator,
) -> List[SamplePath]:
    """
    Propagate every path's pose through the motion model.

    At re-anchoring steps the pose is first replaced by a draw from
    ``anchor``, the belief kept from step N*tau.
    """
    if not paths:
        raise InvalidArgumentError("at least one sample path is required")
    if anchor is None or len(anchor) == 0:
        raise InvalidArgumentError("re-anchoring needs a non-empty belief")
    poses = np.vstack([p.pose for p in paths])
    if reanchor_due(t, tau):
        poses = anchor.draw(len(paths), rng)
    poses = sample_motion_batch(poses, u, noise, rng)
    for path, pose in zip(paths, poses):
        path.pose = pose
    return paths


def record_observation(paths: List[SamplePath], z: np.ndarray) -> None:
    """Push (own pose, z^m) into every path's field states; flush full buffers."""
    z = np.asarray(z, dtype=float).reshape(-1)
    for path in paths:
        if len(path.gp_states) != z.shape[0]:
            raise InvalidArgumentError(
                f"{z.shape[0]} measurements for {len(path.gp_states)} fields"
            )
        location = path.pose[:2]
        for state, value in zip(path.gp_states, z):
            state.push_recent(location, value)
            if state.buffer_length == state.tau:
                state.flush_recent()


def path_log_likelihoods(z, locations, paths: Sequence[SamplePath]) -> np.ndarray:
    """
    (C, P) array of sum_m log N(z^m; path c's prediction at location p).
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if not paths:
        raise InvalidArgumentError("at least one sample path is required")
    fields = len(paths[0].gp_states)
    if z.shape[0] != fields:
        raise InvalidArgumentError(f"{z.shape[0]} measurements for {fields} fields")
    locations = np.atleast_2d(np.asarray(locations, dtype=float))

    out = np.zeros((len(paths), locations.shape[0]))
    for m in range(fields):
        k_xs = paths[0].gp_states[m].support_covariance(locations)
        for c, path in enumerate(paths):
            means, variances = path.gp_states[m].predict_with_recent_batch(locations, k_xs)
            out[c] += gaussian_logpdf_batch(z[m], means, variances)
    return out


def observation_log_likelihood_batch(z, locations, paths: Sequence[SamplePath]) -> np.ndarray:
    """log of (1/C) sum_c prod_m N(z^m; ...) at each location."""
    per_path = path_log_likelihoods(z, locations, paths)
    return logsumexp(per_path, axis=0) - np.log(per_path.shape[0])


def observation_log_likelihood(z, pose: Pose, paths: Sequence[SamplePath]) -> float:
    return float(observation_log_likelihood_batch(z, pose.location[None, :], paths)[0])


def observation_likelihood(z, pose: Pose, paths: Sequence[SamplePath]) -> float:
    """Likelihood density, floored at the smallest positive float."""
    return max(float(np.exp(observation_log_likelihood(z, pose, paths))), np.finfo(float).tiny)
