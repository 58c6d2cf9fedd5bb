"""
True robot trajectories and the odometry that reproduces them.

Poses are generated first; each action is then the exact rot-trans-rot
motion between consecutive poses, so zero-noise dead reckoning from the
start pose replays the trajectory.
"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from src.engines.localization.motion import OdometryAction, Pose, wrap_angle
from src.kernel.errors import InvalidArgumentError
from src.schemas.experiment import TrajectoryKind, TrajectorySpec

Bounds = Tuple[Sequence[float], Sequence[float]]


@dataclass
class Trajectory:
    start: Pose
    steps: List[Tuple[OdometryAction, Pose]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def actions(self) -> List[OdometryAction]:
        return [u for u, _ in self.steps]

    @property
    def poses(self) -> List[Pose]:
        return [p for _, p in self.steps]


def _from_points(points: np.ndarray, start_heading: float) -> Trajectory:
    """Poses at ``points`` heading along each step; actions between them."""
    start = Pose(x=points[0, 0], y=points[0, 1], heading=start_heading)
    trajectory = Trajectory(start)
    prev = start
    for p, q in zip(points[:-1], points[1:]):
        heading = math.atan2(q[1] - p[1], q[0] - p[0])
        pose = Pose(x=q[0], y=q[1], heading=heading)
        trajectory.steps.append((OdometryAction.between(prev, pose), pose))
        prev = pose
    return trajectory


def _discretize(waypoints: np.ndarray, step_length: float) -> np.ndarray:
    """Split every segment into ceil(length / step_length) equal steps."""
    points = [waypoints[0]]
    for p, q in zip(waypoints[:-1], waypoints[1:]):
        length = float(np.hypot(*(q - p)))
        if length == 0.0:
            continue
        n = math.ceil(length / step_length - 1e-12)
        for k in range(1, n + 1):
            points.append(p + (k / n) * (q - p))
    return np.asarray(points)


def _first_heading(points: np.ndarray) -> float:
    for q in points[1:]:
        d = q - points[0]
        if np.any(d != 0.0):
            return math.atan2(d[1], d[0])
    return 0.0


def _inner_box(bounds: Bounds, margin: float) -> Tuple[np.ndarray, np.ndarray]:
    lower = np.asarray(bounds[0], dtype=float) + margin
    upper = np.asarray(bounds[1], dtype=float) - margin
    if np.any(lower > upper):
        raise InvalidArgumentError("margin leaves no room inside the field bounds")
    return lower, upper


def waypoint_trajectory(waypoints, bounds: Bounds, step_length: float) -> Trajectory:
    points = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        raise InvalidArgumentError("at least one waypoint is required")
    lower, upper = np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float)
    if np.any(points < lower) or np.any(points > upper):
        raise InvalidArgumentError("waypoints must lie inside the field bounds")
    path = _discretize(points, step_length)
    return _from_points(path, _first_heading(path))


def lawnmower_trajectory(spec: TrajectorySpec, bounds: Bounds) -> Trajectory:
    """Boustrophedon sweep, traversed back and forth until ``spec.steps`` steps."""
    lower, upper = _inner_box(bounds, spec.margin)
    lanes = np.arange(lower[1], upper[1] + 1e-9, spec.lane_spacing)
    corners = []
    for i, y in enumerate(lanes):
        xs = (lower[0], upper[0]) if i % 2 == 0 else (upper[0], lower[0])
        corners.extend([(xs[0], y), (xs[1], y)])
    sweep = _discretize(np.asarray(corners), spec.step_length)
    if sweep.shape[0] < 2:
        raise InvalidArgumentError("lawnmower sweep is degenerate for these bounds")

    points = [sweep]
    total = sweep.shape[0]
    forward = False
    while total < spec.steps + 1:
        leg = sweep[::-1] if not forward else sweep
        points.append(leg[1:])
        total += leg.shape[0] - 1
        forward = not forward
    path = np.vstack(points)[: spec.steps + 1]
    return _from_points(path, _first_heading(path))


def random_walk_trajectory(spec: TrajectorySpec, bounds: Bounds, seed: int) -> Trajectory:
    """Gaussian heading drift with mirror reflection at the inner box."""
    lower, upper = _inner_box(bounds, spec.margin)
    rng = np.random.default_rng(seed)
    position = 0.5 * (lower + upper)
    heading = float(rng.uniform(-math.pi, math.pi))
    points = [position.copy()]
    for _ in range(spec.steps):
        heading = heading + spec.turn_sd * float(rng.standard_normal())
        step = spec.step_length * np.array([math.cos(heading), math.sin(heading)])
        proposal = position + step
        if proposal[0] < lower[0] or proposal[0] > upper[0]:
            heading = math.pi - heading
        if proposal[1] < lower[1] or proposal[1] > upper[1]:
            heading = -heading
        heading = wrap_angle(heading)
        step = spec.step_length * np.array([math.cos(heading), math.sin(heading)])
        position = np.clip(position + step, lower, upper)
        points.append(position.copy())
    path = np.asarray(points)
    return _from_points(path, _first_heading(path))


def generate_trajectory(spec: TrajectorySpec, bounds: Bounds, seed: int) -> Trajectory:
    if spec.kind == TrajectoryKind.WAYPOINTS:
        return waypoint_trajectory(spec.waypoints, bounds, spec.step_length)
    if spec.kind == TrajectoryKind.LAWNMOWER:
        return lawnmower_trajectory(spec, bounds)
    return random_walk_trajectory(spec, bounds, seed)
