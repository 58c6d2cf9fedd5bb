"""
Gaussian process core: squared-exponential kernel, exact posterior,
incremental posterior updates, Gaussian densities and prior sampling.

Locations are plain float arrays of shape (n, d); a single location may be
passed as a length-d vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.spatial.distance import cdist
from scipy.stats import norm

from src.kernel.errors import IllConditionedError, InvalidArgumentError
from src.kernel.linalg import CholeskyFactor, jittered_cholesky, symmetrize


class Hyperparams(BaseModel):
    """Squared-exponential kernel parameters plus a constant prior mean."""

    model_config = ConfigDict(frozen=True)

    signal_var: float = Field(gt=0.0, allow_inf_nan=False)
    noise_var: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    length_scales: Tuple[float, ...]
    prior_mean: float = Field(default=0.0, allow_inf_nan=False)

    @field_validator("length_scales", mode="before")
    @classmethod
    def _coerce_length_scales(cls, v):
        if np.isscalar(v):
            return (float(v),)
        return tuple(float(x) for x in v)

    @field_validator("length_scales")
    @classmethod
    def _positive_length_scales(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) == 0:
            raise ValueError("at least one length-scale is required")
        if any(not np.isfinite(x) or x <= 0.0 for x in v):
            raise ValueError("length-scales must be finite and positive")
        return v

    @classmethod
    def isotropic(
        cls,
        signal_var: float,
        length_scale: float,
        noise_var: float = 0.0,
        prior_mean: float = 0.0,
        dim: int = 2,
    ) -> "Hyperparams":
        return cls(
            signal_var=signal_var,
            noise_var=noise_var,
            length_scales=(length_scale,) * dim,
            prior_mean=prior_mean,
        )

    @property
    def dim(self) -> int:
        return len(self.length_scales)

    @property
    def prior_variance(self) -> float:
        """sigma_xx: prior variance of a (noisy) measurement."""
        return self.signal_var + self.noise_var

    def noise_free(self) -> "Hyperparams":
        return self.model_copy(update={"noise_var": 0.0})


class GaussianPredictive(BaseModel):
    """Mean and variance of a Gaussian predictive distribution."""

    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float = Field(ge=0.0)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


def as_locations(x, dim: int | None = None) -> np.ndarray:
    """Coerce one location (d,) or many (n, d) into a finite (n, d) array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"locations must be 1-D or 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim and arr.shape[0] > 0:
        raise InvalidArgumentError(
            f"location dimension {arr.shape[1]} does not match {dim} length-scales"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("locations must have finite components")
    return arr


def has_duplicate_rows(x: np.ndarray) -> bool:
    if x.shape[0] < 2:
        return False
    return np.unique(x, axis=0).shape[0] != x.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Ordered observation locations with their measured values."""

    locations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        locations = np.asarray(self.locations, dtype=float)
        if locations.size == 0:
            dim = locations.shape[1] if locations.ndim == 2 else 0
            locations = locations.reshape(0, dim)
        else:
            locations = as_locations(locations)
        if locations.shape[0] != values.shape[0]:
            raise InvalidArgumentError(
                f"{locations.shape[0]} locations but {values.shape[0]} values"
            )
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, dim: int) -> "Dataset":
        return cls(np.zeros((0, dim)), np.zeros(0))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.locations[idx], self.values[idx])

    def concat(self, other: "Dataset") -> "Dataset":
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        return Dataset(
            np.vstack([self.locations, other.locations]),
            np.concatenate([self.values, other.values]),
        )


def cov_matrix(a, b, h: Hyperparams) -> np.ndarray:
    """
    Pairwise covariances between location lists ``a`` and ``b``.

    Squared-exponential term plus ``noise_var`` wherever two locations are
    exactly equal coordinate-wise.
    """
    xa = as_locations(a, h.dim)
    xb = as_locations(b, h.dim)
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        return np.zeros((xa.shape[0], xb.shape[0]))
    scale = np.asarray(h.length_scales)
    sq = cdist(xa / scale, xb / scale, metric="sqeuclidean")
    k = h.signal_var * np.exp(-0.5 * sq)
    if h.noise_var > 0.0:
        same = np.all(xa[:, None, :] == xb[None, :, :], axis=2)
        k = k + h.noise_var * same
    return k


def covariance(x, xp, h: Hyperparams) -> float:
    return float(cov_matrix(x, xp, h)[0, 0])


class PosteriorCache:
    """
    Factorized GP posterior over a growing dataset.

    Holds the lower Cholesky factor L of Sigma_DD and the whitened residual
    w = L^{-1}(z_D - mu_D), so a query costs one triangular solve. New data
    are appended as a conditional block without refactoring the old one.
    """

    def __init__(self, h: Hyperparams, locations: np.ndarray, lower: np.ndarray, whitened: np.ndarray):
        self.h = h
        self.locations = locations
        self.lower = lower
        self.whitened = whitened

    @classmethod
    def empty(cls, h: Hyperparams) -> "PosteriorCache":
        return cls(h, np.zeros((0, h.dim)), np.zeros((0, 0)), np.zeros(0))

    @classmethod
    def from_dataset(cls, data: Dataset, h: Hyperparams) -> "PosteriorCache":
        """Batch factorization of Sigma_DD."""
        if len(data) == 0:
            return cls.empty(h)
        locations = as_locations(data.locations, h.dim)
        chol = jittered_cholesky(cov_matrix(locations, locations, h))
        whitened = chol.whiten(data.values - h.prior_mean)
        return cls(h, locations.copy(), chol.lower, whitened)

    def __len__(self) -> int:
        return self.locations.shape[0]

    def extend(self, newdata: Dataset) -> "PosteriorCache":
        """
        Condition on ``newdata`` through its conditional block Sigma_{D'D'|D}.

        A noisy repeat of a cached location leaves a near-singular block,
        which the jittered factorization absorbs.

        Returns a new cache; ``self`` is left untouched.
        """
        if len(newdata) == 0:
            return self
        h = self.h
        new_x = as_locations(newdata.locations, h.dim)
        if len(self) > 0 and h.noise_var == 0.0:
            overlap = np.all(self.locations[:, None, :] == new_x[None, :, :], axis=2)
            if np.any(overlap):
                raise InvalidArgumentError("noise-free data must be disjoint from cached data")
        if len(self) == 0:
            return PosteriorCache.from_dataset(Dataset(new_x, newdata.values), h)

        cross = self._whiten(cov_matrix(self.locations, new_x, h))
        conditional = symmetrize(cov_matrix(new_x, new_x, h) - cross.T @ cross)
        block = jittered_cholesky(conditional, scale=h.prior_variance)
        residual = newdata.values - h.prior_mean - cross.T @ self.whitened

        n, m = len(self), new_x.shape[0]
        lower = np.zeros((n + m, n + m))
        lower[:n, :n] = self.lower
        lower[n:, :n] = cross.T
        lower[n:, n:] = block.lower
        return PosteriorCache(
            h,
            np.vstack([self.locations, new_x]),
            lower,
            np.concatenate([self.whitened, block.whiten(residual)]),
        )

    def _whiten(self, b: np.ndarray) -> np.ndarray:
        return CholeskyFactor(self.lower).whiten(b)

    def query_batch(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior means and variances at every row of ``x``."""
        h = self.h
        xq = as_locations(x, h.dim)
        if len(self) == 0:
            p = xq.shape[0]
            return np.full(p, h.prior_mean), np.full(p, h.prior_variance)
        v = self._whiten(cov_matrix(self.locations, xq, h))
        means = h.prior_mean + v.T @ self.whitened
        variances = h.prior_variance - np.einsum("ij,ij->j", v, v)
        return means, np.maximum(variances, 0.0)

    def query(self, x) -> GaussianPredictive:
        means, variances = self.query_batch(x)
        return GaussianPredictive(mean=float(means[0]), variance=float(variances[0]))


def gp_posterior(x, data: Dataset, h: Hyperparams) -> GaussianPredictive:
    """Exact GP predictive distribution at ``x`` given ``data``."""
    return PosteriorCache.from_dataset(data, h).query(x)


def gp_posterior_batch(x, data: Dataset, h: Hyperparams) -> Tuple[np.ndarray, np.ndarray]:
    return PosteriorCache.from_dataset(data, h).query_batch(x)


def gp_posterior_incremental(cache: PosteriorCache, newdata: Dataset) -> PosteriorCache:
    return cache.extend(newdata)


def gaussian_logpdf(z: float, g: GaussianPredictive) -> float:
    if g.variance <= 0.0:
        raise InvalidArgumentError("Gaussian log density needs a positive variance")
    return float(norm.logpdf(z, loc=g.mean, scale=np.sqrt(g.variance)))


def gaussian_logpdf_batch(z, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Elementwise log N(z; mean, variance); raises on non-positive variance."""
    if np.any(variances <= 0.0):
        raise IllConditionedError("predictive variance is not positive")
    return norm.logpdf(z, loc=means, scale=np.sqrt(variances))


def sample_gp_prior(locations, h: Hyperparams, seed: int) -> np.ndarray:
    """One joint draw of the field at ``locations``; deterministic per seed."""
    x = as_locations(locations, h.dim)
    if has_duplicate_rows(x):
        raise InvalidArgumentError("prior samples need distinct locations")
    chol = jittered_cholesky(cov_matrix(x, x, h))
    rng = np.random.default_rng(seed)
    return h.prior_mean + chol.lower @ rng.standard_normal(x.shape[0])
