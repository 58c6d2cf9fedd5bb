"""
Baseline localizers.

Each baseline is the same particle filter as GP-Localize but with a GP
observation model trained on (estimated location, measurement) pairs from
the steps so far. The robot never learns its true poses, so the history is
attached to its own estimates.

- SoD-Truncate: the most recent ``size`` observations
- SoD-Even: ``size`` observations spread evenly over the whole history
- Full GP: every observation, kept in an incrementally extended cache
- Offline PITC: every observation, in blocks of tau through the support set
"""

from abc import ABC, abstractmethod
from typing import List, Sequence, Tuple

import numpy as np

from src.engines.localization.belief import Belief, estimate_location
from src.engines.localization.gp_localize import FilterConfig, normalize_and_resample
from src.engines.localization.motion import OdometryAction, Pose, sample_motion_batch
from src.kernel.gp_core import (
    Dataset,
    Hyperparams,
    PosteriorCache,
    gaussian_logpdf_batch,
    gp_posterior_batch,
)
from src.kernel.sparse_gp import BlockedDataset, SupportSet, pitc_posterior_batch


def sod_even_indices(count: int, size: int) -> np.ndarray:
    """floor(i * count / size) for i < size, de-duplicated; everything when count <= size."""
    if count <= size:
        return np.arange(count)
    return np.unique((np.arange(size) * count) // size)


class BaselineModel(ABC):
    """GP observation model for one field over a growing history."""

    def __init__(self, h: Hyperparams):
        self.h = h
        self._locations: List[np.ndarray] = []
        self._values: List[float] = []

    def __len__(self) -> int:
        return len(self._values)

    @property
    def history(self) -> Dataset:
        if not self._values:
            return Dataset.empty(self.h.dim)
        return Dataset(np.vstack(self._locations), np.asarray(self._values))

    def add(self, location: np.ndarray, z: float) -> None:
        self._locations.append(np.asarray(location, dtype=float).copy())
        self._values.append(float(z))

    @property
    def nbytes(self) -> int:
        return len(self._values) * (self.h.dim + 1) * 8

    @abstractmethod
    def predict_batch(self, locations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Predictive means and variances at every row of ``locations``."""


class SoDTruncateModel(BaselineModel):
    def __init__(self, h: Hyperparams, size: int = 10):
        super().__init__(h)
        self.size = size

    def training_set(self) -> Dataset:
        data = self.history
        start = max(0, len(data) - self.size)
        return data.subset(range(start, len(data)))

    def predict_batch(self, locations):
        return gp_posterior_batch(locations, self.training_set(), self.h)


class SoDEvenModel(BaselineModel):
    def __init__(self, h: Hyperparams, size: int = 40):
        super().__init__(h)
        self.size = size

    def training_set(self) -> Dataset:
        data = self.history
        return data.subset(sod_even_indices(len(data), self.size))

    def predict_batch(self, locations):
        return gp_posterior_batch(locations, self.training_set(), self.h)


class FullGPModel(BaselineModel):
    def __init__(self, h: Hyperparams):
        super().__init__(h)
        self._cache = PosteriorCache.empty(h)

    def add(self, location, z):
        super().add(location, z)
        self._cache = self._cache.extend(Dataset(np.atleast_2d(location), [z]))

    @property
    def nbytes(self) -> int:
        return super().nbytes + self._cache.lower.nbytes + self._cache.whitened.nbytes

    def predict_batch(self, locations):
        return self._cache.query_batch(locations)


class OfflinePITCModel(BaselineModel):
    def __init__(self, h: Hyperparams, support: SupportSet, tau: int):
        super().__init__(h)
        self.support = support
        self.tau = tau

    def predict_batch(self, locations):
        data = self.history
        return pitc_posterior_batch(
            locations,
            BlockedDataset.chunked(data, self.tau, allow_repeats=self.h.noise_var > 0.0),
            self.support,
            self.h,
        )


class BaselineLocalizer:
    """Particle filter driven by one `BaselineModel` per field."""

    def __init__(
        self,
        config: FilterConfig,
        models: Sequence[BaselineModel],
        initial: Belief,
        rng: np.random.Generator,
    ):
        self.config = config
        self.models = list(models)
        self.rng = rng
        self.belief = initial
        self.t = 0

    def log_likelihoods(self, z, locations) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        total = np.zeros(np.atleast_2d(locations).shape[0])
        for model, value in zip(self.models, z):
            means, variances = model.predict_batch(locations)
            total += gaussian_logpdf_batch(value, means, variances)
        return total

    def step(self, u: OdometryAction, z) -> Belief:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        self.t += 1
        poses = sample_motion_batch(self.belief.poses, u, self.config.noise, self.rng)
        with np.errstate(divide="ignore"):
            log_weights = np.log(self.belief.weights)
        log_weights = log_weights + self.log_likelihoods(z, poses[:, :2])
        self.belief = normalize_and_resample(poses, log_weights, self.config, self.rng, self.t)

        estimate = self.estimate().location
        for model, value in zip(self.models, z):
            model.add(estimate, value)
        return self.belief

    def estimate(self) -> Pose:
        return estimate_location(self.belief)

    def snapshot_size(self) -> int:
        particles = self.belief.poses.nbytes + self.belief.weights.nbytes
        return particles + sum(m.nbytes for m in self.models)
