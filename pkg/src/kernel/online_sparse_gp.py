"""
Online sparse GP with constant time and memory per observation.

Observations arrive one at a time. They sit in a recent buffer of at most
``tau`` points, folded into predictions by exact Gaussian conditioning.
Once the buffer holds ``tau`` points it is compressed into a slice summary
(mu_s, Sigma_s) and added onto the assimilated summary (mu_a, Sigma_a).
After N full slices the predictive distribution equals PITC with those N
blocks; with tau = 1 it equals FITC.

State size depends on (d, |S|, tau) only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh

from src.config import get_settings
from src.kernel import snapshot
from src.kernel.errors import (
    BufferProtocolError,
    IllConditionedError,
    InvalidArgumentError,
)
from src.kernel.gp_core import (
    Dataset,
    GaussianPredictive,
    Hyperparams,
    as_locations,
    cov_matrix,
)
from src.kernel.linalg import identity_residual, jittered_cholesky, jittered_pivot, symmetrize
from src.kernel.sparse_gp import (
    SupportFactor,
    SupportSet,
    block_summary,
    support_predict,
)
from src.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SliceSummary:
    """
    Compressed statistics of one slice of exactly ``tau`` observations.

    ``root`` is an optional factor W with sigma_s = W.T @ W; when present the
    assimilation update uses it directly instead of an eigen-decomposition.
    """

    mu_s: np.ndarray
    sigma_s: np.ndarray
    root: Optional[np.ndarray] = None

    def __post_init__(self):
        mu_s = np.asarray(self.mu_s, dtype=float).reshape(-1)
        sigma_s = np.asarray(self.sigma_s, dtype=float)
        s = mu_s.shape[0]
        if sigma_s.shape != (s, s):
            raise InvalidArgumentError(f"sigma_s has shape {sigma_s.shape}, expected {(s, s)}")
        scale = max(1.0, float(np.max(np.abs(sigma_s)))) if s else 1.0
        if s and float(np.max(np.abs(sigma_s - sigma_s.T))) > 1e-10 * scale:
            raise InvalidArgumentError("sigma_s must be symmetric")
        if s:
            eig = np.linalg.eigvalsh(symmetrize(sigma_s))
            if eig[0] < -1e-8 * max(1.0, float(eig[-1])):
                raise InvalidArgumentError("sigma_s must be positive semi-definite")
        root = self.root
        if root is not None:
            root = np.asarray(root, dtype=float)
            if root.ndim != 2 or root.shape[1] != s:
                raise InvalidArgumentError(f"root has shape {root.shape}, expected (r, {s})")
        object.__setattr__(self, "mu_s", mu_s)
        object.__setattr__(self, "sigma_s", sigma_s)
        object.__setattr__(self, "root", root)

    @property
    def size(self) -> int:
        return self.mu_s.shape[0]

    def factor_root(self) -> np.ndarray:
        """W with W.T @ W == sigma_s, rows for numerically zero directions dropped."""
        if self.root is not None:
            return self.root
        vals, vecs = eigh(symmetrize(self.sigma_s))
        tol = 1e-12 * max(1.0, float(vals[-1])) if vals.size else 0.0
        keep = vals > tol
        return (vecs[:, keep] * np.sqrt(vals[keep])).T


class OnlineGPState:
    """
    Assimilated summary plus the recent buffer for one field.

    Single writer: `assimilate`, `push_recent` and `flush_recent` mutate the
    state in place (and return it); predictions are read-only.
    """

    def __init__(self, factor: SupportFactor, tau: int):
        if tau < 1:
            raise InvalidArgumentError("tau must be at least 1")
        self.factor = factor
        self.tau = int(tau)
        s, d = len(factor.support), factor.support.dim

        self.mu_a = np.zeros(s)
        self.sigma_a = factor.sigma_ss.copy()
        self.sigma_a_inv = factor.sigma_ss_inv.copy()
        self.slices_assimilated = 0

        self._buf_x = np.zeros((self.tau, d))
        self._buf_z = np.zeros(self.tau)
        self._buf_mu = np.zeros(self.tau)
        self._buf_q = np.zeros((s, self.tau))
        self._buf_inv = np.zeros((self.tau, self.tau))
        self._buf_alpha = np.zeros(self.tau)
        self._count = 0
        self._refresh_derived()

    @classmethod
    def init(cls, support: SupportSet, h: Hyperparams, tau: int) -> "OnlineGPState":
        """Empty state: mu_a = 0, Sigma_a = Sigma_SS, no buffered points."""
        return cls(SupportFactor.build(support, h), tau)

    # -- accessors ---------------------------------------------------------

    @property
    def support(self) -> SupportSet:
        return self.factor.support

    @property
    def h(self) -> Hyperparams:
        return self.factor.h

    @property
    def sigma_ss_inv(self) -> np.ndarray:
        return self.factor.sigma_ss_inv

    @property
    def buffer_length(self) -> int:
        return self._count

    @property
    def recent(self) -> Dataset:
        m = self._count
        return Dataset(self._buf_x[:m].copy(), self._buf_z[:m].copy())

    @property
    def recent_inverse(self) -> np.ndarray:
        """Cached inverse of the buffer's predictive covariance."""
        m = self._count
        return self._buf_inv[:m, :m].copy()

    def copy(self) -> "OnlineGPState":
        twin = OnlineGPState.__new__(OnlineGPState)
        twin.factor = self.factor
        twin.tau = self.tau
        for name in ("mu_a", "sigma_a", "sigma_a_inv", "_weights", "_gap",
                     "_buf_x", "_buf_z", "_buf_mu", "_buf_q", "_buf_inv", "_buf_alpha"):
            setattr(twin, name, getattr(self, name).copy())
        twin.slices_assimilated = self.slices_assimilated
        twin._count = self._count
        return twin

    def _refresh_derived(self) -> None:
        self._weights = self.sigma_a_inv @ self.mu_a
        self._gap = self.sigma_ss_inv - self.sigma_a_inv

    # -- slices ------------------------------------------------------------

    def summarize_slice(self, slice_data: Dataset) -> SliceSummary:
        """Summary of exactly ``tau`` observations through the support set."""
        if len(slice_data) != self.tau:
            raise InvalidArgumentError(
                f"slice has {len(slice_data)} observations, expected tau={self.tau}"
            )
        mu_s, sigma_s, root = block_summary(self.factor, slice_data)
        return SliceSummary(mu_s=mu_s, sigma_s=symmetrize(sigma_s), root=root)

    def assimilate(self, summary: SliceSummary) -> "OnlineGPState":
        """
        Add a slice summary and update Sigma_a^{-1} through the matrix
        inversion lemma in O(r |S|^2), r = rank of the summary.
        """
        if summary.size != len(self.support):
            raise InvalidArgumentError(
                f"summary has size {summary.size}, support set has {len(self.support)}"
            )
        new_sigma = symmetrize(self.sigma_a + summary.sigma_s)
        new_inv = self._woodbury_inverse(new_sigma, summary.factor_root())

        self.mu_a = self.mu_a + summary.mu_s
        self.sigma_a = new_sigma
        self.sigma_a_inv = new_inv
        self.slices_assimilated += 1
        self._refresh_derived()
        if self._count:
            self._rebuild_buffer()
        return self

    def _woodbury_inverse(self, new_sigma: np.ndarray, root: np.ndarray) -> np.ndarray:
        if root.shape[0] == 0:
            return self.sigma_a_inv.copy()
        a_inv = self.sigma_a_inv
        aw = a_inv @ root.T
        inner = np.eye(root.shape[0]) + root @ aw
        try:
            inner_chol = jittered_cholesky(symmetrize(inner))
            new_inv = symmetrize(a_inv - aw @ inner_chol.solve(aw.T))
            drift = identity_residual(new_sigma, new_inv)
        except IllConditionedError:
            drift = float("inf")
        if drift > get_settings().inverse_drift_tol:
            logger.warning(
                "Inverse update drifted; refactoring assimilated covariance",
                extra={"drift": drift, "slices": self.slices_assimilated + 1},
            )
            new_inv = jittered_cholesky(new_sigma).inverse()
        return new_inv

    # -- predictions -------------------------------------------------------

    def support_covariance(self, x) -> np.ndarray:
        """Sigma_xS for every row of ``x``."""
        return cov_matrix(x, self.support.locations, self.h)

    def predict_batch(self, x, k_xs: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Predictive moments from the assimilated summary only.

        ``k_xs`` may be passed when several states share the support set and
        hyperparameters, to avoid recomputing the cross-covariance.
        """
        if k_xs is None:
            k_xs = self.support_covariance(x)
        return support_predict(k_xs, self.h, self.sigma_ss_inv, self.sigma_a_inv, self._weights)

    def predict(self, x) -> GaussianPredictive:
        means, variances = self.predict_batch(x)
        return GaussianPredictive(mean=float(means[0]), variance=float(variances[0]))

    def predict_with_recent_batch(
        self, x, k_xs: Optional[np.ndarray] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Predictive moments conditioned on the summary and the recent buffer."""
        xq = as_locations(x, self.h.dim)
        if k_xs is None:
            k_xs = self.support_covariance(xq)
        means, variances = self.predict_batch(xq, k_xs)
        m = self._count
        if m == 0:
            return means, variances
        cross = cov_matrix(xq, self._buf_x[:m], self.h) - k_xs @ self._buf_q[:, :m]
        means = means + cross @ self._buf_alpha[:m]
        variances = variances - np.einsum("ij,ij->i", cross @ self._buf_inv[:m, :m], cross)
        return means, np.maximum(variances, 0.0)

    def predict_with_recent(self, x) -> GaussianPredictive:
        means, variances = self.predict_with_recent_batch(x)
        return GaussianPredictive(mean=float(means[0]), variance=float(variances[0]))

    # -- recent buffer -----------------------------------------------------

    def push_recent(self, x, z: float) -> "OnlineGPState":
        """
        Append one observation to the buffer, growing the cached inverse of
        its predictive covariance by one row and column.
        """
        m = self._count
        if m == self.tau:
            raise BufferProtocolError(
                f"recent buffer is full ({self.tau} observations); flush_recent first"
            )
        h = self.h
        loc = as_locations(x, h.dim)
        if loc.shape[0] != 1:
            raise InvalidArgumentError("push_recent takes a single location")
        if h.noise_var == 0.0 and m and np.any(np.all(self._buf_x[:m] == loc, axis=1)):
            raise InvalidArgumentError("location already buffered and noise_var is 0")

        k_xs = self.support_covariance(loc)
        mu_x, var_x = support_predict(k_xs, h, self.sigma_ss_inv, self.sigma_a_inv, self._weights)
        q = self._gap @ k_xs[0]

        cross = cov_matrix(loc, self._buf_x[:m], h)[0] - k_xs[0] @ self._buf_q[:, :m]
        b_inv = self._buf_inv[:m, :m]
        g = b_inv @ cross
        schur = float(var_x[0] - cross @ g)
        floor = get_settings().pivot_floor_rel * h.prior_variance
        if h.noise_var == 0.0 and schur < floor:
            raise IllConditionedError(
                f"predictive variance {schur:.3e} at buffered location is degenerate"
            )
        schur = jittered_pivot(schur, scale=h.prior_variance)

        inv = self._buf_inv
        inv[:m, :m] = b_inv + np.outer(g, g) / schur
        inv[:m, m] = -g / schur
        inv[m, :m] = -g / schur
        inv[m, m] = 1.0 / schur

        self._buf_x[m] = loc[0]
        self._buf_z[m] = float(z)
        self._buf_mu[m] = float(mu_x[0])
        self._buf_q[:, m] = q
        self._count = m + 1
        self._refresh_alpha()
        return self

    def _refresh_alpha(self) -> None:
        m = self._count
        self._buf_alpha[:] = 0.0
        self._buf_alpha[:m] = self._buf_inv[:m, :m] @ (self._buf_z[:m] - self._buf_mu[:m])

    def _clear_buffer(self) -> None:
        self._count = 0
        for arr in (self._buf_x, self._buf_z, self._buf_mu, self._buf_q, self._buf_inv, self._buf_alpha):
            arr.fill(0.0)

    def _rebuild_buffer(self) -> None:
        pending = self.recent
        self._clear_buffer()
        for loc, z in zip(pending.locations, pending.values):
            self.push_recent(loc, z)

    def flush_recent(self) -> "OnlineGPState":
        """Summarize the full buffer as one slice, clear it, and assimilate."""
        if self._count != self.tau:
            raise BufferProtocolError(
                f"flush_recent needs a full buffer of {self.tau}, have {self._count}"
            )
        summary = self.summarize_slice(self.recent)
        self._clear_buffer()
        return self.assimilate(summary)

    # -- snapshot ----------------------------------------------------------

    def serialized_size(self) -> int:
        return snapshot.snapshot_nbytes(self.h.dim, len(self.support), self.tau)

    def to_bytes(self) -> bytes:
        h = self.h
        blocks = {
            "support": self.support.locations,
            "signal_var": h.signal_var,
            "noise_var": h.noise_var,
            "prior_mean": h.prior_mean,
            "length_scales": np.asarray(h.length_scales),
            "mu_a": self.mu_a,
            "sigma_a": self.sigma_a,
            "sigma_a_inv": self.sigma_a_inv,
            "sigma_ss_inv": self.sigma_ss_inv,
            "buffer_locations": self._buf_x,
            "buffer_values": self._buf_z,
            "buffer_means": self._buf_mu,
            "buffer_columns": self._buf_q,
            "buffer_inverse": self._buf_inv,
            "buffer_alpha": self._buf_alpha,
        }
        return snapshot.encode(
            h.dim, len(self.support), self.tau, self._count, self.slices_assimilated, blocks
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "OnlineGPState":
        """Resume a state written by `to_bytes`; predictions continue bit-exactly."""
        header, blocks = snapshot.decode(data)
        h = Hyperparams(
            signal_var=float(blocks["signal_var"]),
            noise_var=float(blocks["noise_var"]),
            length_scales=tuple(blocks["length_scales"]),
            prior_mean=float(blocks["prior_mean"]),
        )
        base = SupportFactor.build(SupportSet(blocks["support"]), h)
        factor = SupportFactor(
            support=base.support,
            h=h,
            sigma_ss=base.sigma_ss,
            chol=base.chol,
            sigma_ss_inv=blocks["sigma_ss_inv"],
        )
        state = cls(factor, header["tau"])
        state.mu_a = blocks["mu_a"]
        state.sigma_a = blocks["sigma_a"]
        state.sigma_a_inv = blocks["sigma_a_inv"]
        state.slices_assimilated = header["slices"]
        state._buf_x = blocks["buffer_locations"]
        state._buf_z = blocks["buffer_values"]
        state._buf_mu = blocks["buffer_means"]
        state._buf_q = blocks["buffer_columns"]
        state._buf_inv = blocks["buffer_inverse"]
        state._buf_alpha = blocks["buffer_alpha"]
        state._count = header["count"]
        state._refresh_derived()
        return state


def init(support: SupportSet, h: Hyperparams, tau: int) -> OnlineGPState:
    return OnlineGPState.init(support, h, tau)


def summarize_slice(slice_data: Dataset, state: OnlineGPState) -> SliceSummary:
    return state.summarize_slice(slice_data)


def assimilate(state: OnlineGPState, summary: SliceSummary) -> OnlineGPState:
    return state.assimilate(summary)


def predict(state: OnlineGPState, x) -> GaussianPredictive:
    return state.predict(x)


def push_recent(state: OnlineGPState, x, z: float) -> OnlineGPState:
    return state.push_recent(x, z)


def predict_with_recent(state: OnlineGPState, x) -> GaussianPredictive:
    return state.predict_with_recent(x)


def flush_recent(state: OnlineGPState) -> OnlineGPState:
    return state.flush_recent()


def stream_observations(state: OnlineGPState, data: Dataset) -> OnlineGPState:
    """Push every observation in order, flushing each time the buffer fills."""
    for loc, z in zip(data.locations, data.values):
        state.push_recent(loc, z)
        if state.buffer_length == state.tau:
            state.flush_recent()
    return state
