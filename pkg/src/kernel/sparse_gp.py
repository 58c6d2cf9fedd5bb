"""
Offline sparse GP approximations: subset of data (SoD), PITC and FITC.

PITC is evaluated in support space: each block D_n contributes a summary
(Sigma_{S D_n} C_n^{-1} r_n, Sigma_{S D_n} C_n^{-1} Sigma_{D_n S}) with
C_n = Sigma_{D_n D_n | S}; the summaries are added onto Sigma_SS and the
prediction needs only |S|-sized solves. The online module reuses
`block_summary` and `support_predict`, so both share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from src.kernel.errors import InvalidArgumentError
from src.kernel.gp_core import (
    Dataset,
    GaussianPredictive,
    Hyperparams,
    as_locations,
    cov_matrix,
    gp_posterior,
    has_duplicate_rows,
)
from src.kernel.linalg import CholeskyFactor, jittered_cholesky, symmetrize


@dataclass(frozen=True)
class SupportSet:
    """Fixed, possibly unobserved, inducing locations."""

    locations: np.ndarray

    def __post_init__(self):
        locations = as_locations(self.locations)
        if locations.shape[0] == 0:
            raise InvalidArgumentError("support set must not be empty")
        if has_duplicate_rows(locations):
            raise InvalidArgumentError("support set locations must be pairwise distinct")
        object.__setattr__(self, "locations", locations)

    def __len__(self) -> int:
        return self.locations.shape[0]

    @property
    def dim(self) -> int:
        return self.locations.shape[1]


@dataclass(frozen=True)
class BlockedDataset:
    """
    Dataset partitioned into blocks D_1..D_N.

    Locations must be distinct across blocks unless ``allow_repeats`` is set,
    which callers do only for noisy observations.
    """

    blocks: Tuple[Dataset, ...]
    allow_repeats: bool = False

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise InvalidArgumentError("blocks must be non-empty")
        if blocks and not self.allow_repeats:
            everything = np.vstack([b.locations for b in blocks])
            if has_duplicate_rows(everything):
                raise InvalidArgumentError("locations must be distinct across all blocks")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def singletons(cls, data: Dataset) -> "BlockedDataset":
        return cls(tuple(data.subset([i]) for i in range(len(data))))

    @classmethod
    def chunked(cls, data: Dataset, size: int, allow_repeats: bool = False) -> "BlockedDataset":
        """Consecutive blocks of ``size`` points; the last one may be shorter."""
        if size < 1:
            raise InvalidArgumentError("block size must be positive")
        return cls(tuple(
            data.subset(range(start, min(start + size, len(data))))
            for start in range(0, len(data), size)
        ), allow_repeats)

    def __len__(self) -> int:
        return len(self.blocks)

    def union(self, dim: int) -> Dataset:
        merged = Dataset.empty(dim)
        for block in self.blocks:
            merged = merged.concat(block)
        return merged


@dataclass(frozen=True)
class SupportFactor:
    """Sigma_SS with its Cholesky factor and explicit inverse."""

    support: SupportSet
    h: Hyperparams
    sigma_ss: np.ndarray
    chol: CholeskyFactor
    sigma_ss_inv: np.ndarray

    @classmethod
    def build(cls, support: SupportSet, h: Hyperparams) -> "SupportFactor":
        if support.dim != h.dim:
            raise InvalidArgumentError(
                f"support dimension {support.dim} does not match {h.dim} length-scales"
            )
        sigma_ss = cov_matrix(support.locations, support.locations, h)
        chol = jittered_cholesky(sigma_ss)
        return cls(support, h, sigma_ss, chol, chol.inverse())


def block_summary(factor: SupportFactor, block: Dataset) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Summary of one block through the support set.

    Returns (mu_s, sigma_s, root) with sigma_s = root.T @ root, where
    root = L_C^{-1} Sigma_{D_n S} and L_C is the Cholesky factor of the
    conditional covariance Sigma_{D_n D_n | S}.
    """
    h = factor.h
    x = as_locations(block.locations, h.dim)
    if h.noise_var == 0.0 and has_duplicate_rows(x):
        raise InvalidArgumentError("duplicate locations in a block need noise_var > 0")
    k_sn = cov_matrix(factor.support.locations, x, h)
    v = factor.chol.whiten(k_sn)
    conditional = symmetrize(cov_matrix(x, x, h) - v.T @ v)
    cond_chol = jittered_cholesky(conditional, scale=h.prior_variance)
    root = cond_chol.whiten(k_sn.T)
    mu_s = root.T @ cond_chol.whiten(block.values - h.prior_mean)
    return mu_s, root.T @ root, root


def support_predict(
    k_xs: np.ndarray,
    h: Hyperparams,
    sigma_ss_inv: np.ndarray,
    sigma_a_inv: np.ndarray,
    weights: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Support-space predictive moments for rows of ``k_xs`` (p, |S|).

    mean = mu + k_xS Sigma_a^{-1} mu_a       (weights = Sigma_a^{-1} mu_a)
    var  = sigma_xx - k_xS (Sigma_SS^{-1} - Sigma_a^{-1}) k_Sx
    """
    gap = sigma_ss_inv - sigma_a_inv
    means = h.prior_mean + k_xs @ weights
    variances = h.prior_variance - np.einsum("ij,ij->i", k_xs @ gap, k_xs)
    return means, np.maximum(variances, 0.0)


def assimilated_summary(factor: SupportFactor, blocks: Iterable[Dataset]) -> Tuple[np.ndarray, np.ndarray]:
    """(mu_a, Sigma_a) after adding every block summary onto (0, Sigma_SS)."""
    mu_a = np.zeros(len(factor.support))
    sigma_a = factor.sigma_ss.copy()
    for block in blocks:
        mu_s, sigma_s, _ = block_summary(factor, block)
        mu_a = mu_a + mu_s
        sigma_a = sigma_a + sigma_s
    return mu_a, symmetrize(sigma_a)


def pitc_posterior_batch(
    x,
    data: BlockedDataset,
    support: SupportSet,
    h: Hyperparams,
) -> Tuple[np.ndarray, np.ndarray]:
    factor = SupportFactor.build(support, h)
    mu_a, sigma_a = assimilated_summary(factor, data.blocks)
    sigma_a_inv = jittered_cholesky(sigma_a).inverse()
    k_xs = cov_matrix(x, support.locations, h)
    return support_predict(k_xs, h, factor.sigma_ss_inv, sigma_a_inv, sigma_a_inv @ mu_a)


def pitc_posterior(x, data: BlockedDataset, support: SupportSet, h: Hyperparams) -> GaussianPredictive:
    """PITC predictive distribution at ``x``."""
    means, variances = pitc_posterior_batch(x, data, support, h)
    return GaussianPredictive(mean=float(means[0]), variance=float(variances[0]))


def fitc_posterior(x, data: Dataset, support: SupportSet, h: Hyperparams) -> GaussianPredictive:
    """FITC: PITC with one block per observation."""
    return pitc_posterior(x, BlockedDataset.singletons(data), support, h)


def fitc_posterior_batch(x, data: Dataset, support: SupportSet, h: Hyperparams):
    return pitc_posterior_batch(x, BlockedDataset.singletons(data), support, h)


def sod_posterior(x, subset: Dataset, h: Hyperparams) -> GaussianPredictive:
    """Subset of data: the exact posterior given only ``subset``."""
    return gp_posterior(x, subset, h)


def blocks_from_sequence(datasets: Sequence[Dataset]) -> BlockedDataset:
    return BlockedDataset(tuple(datasets))
