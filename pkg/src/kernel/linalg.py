"""
Jittered symmetric positive-definite factorization.

All SPD solves in the package go through `jittered_cholesky`: a plain
Cholesky is tried first; if it fails or a pivot falls under the floor,
jitter proportional to the matrix scale is added and escalated.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from src.config import get_settings
from src.kernel.errors import IllConditionedError
from src.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower Cholesky factor of ``A + jitter * I``."""

    lower: np.ndarray
    jitter: float = 0.0

    @property
    def size(self) -> int:
        return self.lower.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve (A + jitter I) x = b."""
        return cho_solve((self.lower, True), b, check_finite=False)

    def whiten(self, b: np.ndarray) -> np.ndarray:
        """Return L^{-1} b."""
        return solve_triangular(self.lower, b, lower=True, check_finite=False)

    def inverse(self) -> np.ndarray:
        inv = self.solve(np.eye(self.size))
        return 0.5 * (inv + inv.T)


def _try_cholesky(a: np.ndarray, floor: float) -> Optional[np.ndarray]:
    try:
        lower = cholesky(a, lower=True, check_finite=False)
    except LinAlgError:
        return None
    diag = np.diagonal(lower)
    if not np.all(np.isfinite(diag)) or float(np.min(diag)) ** 2 < floor:
        return None
    return lower


def jittered_cholesky(a: np.ndarray, *, scale: Optional[float] = None) -> CholeskyFactor:
    """
    Factor a symmetric matrix, adding diagonal jitter only when needed.

    Args:
        a: Symmetric (n, n) matrix, expected PSD up to round-off.
        scale: Reference variance for the jitter and pivot floor. Defaults to
            the mean diagonal of ``a``; conditional covariances pass the prior
            variance because their own diagonal may be numerically zero.

    Raises:
        IllConditionedError: if the matrix is still not factorable after the
            configured number of jitter escalations.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return CholeskyFactor(lower=np.zeros((0, 0)))

    settings = get_settings()
    if scale is None:
        scale = float(np.trace(a)) / n
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    floor = settings.pivot_floor_rel * scale

    lower = _try_cholesky(a, floor)
    if lower is not None:
        return CholeskyFactor(lower=lower)

    jitter = settings.jitter_rel * scale
    eye = np.eye(n)
    for attempt in range(settings.jitter_retries):
        lower = _try_cholesky(a + jitter * eye, floor)
        if lower is not None:
            logger.debug(
                "Cholesky succeeded with jitter",
                extra={"jitter": jitter, "attempt": attempt + 1, "size": n},
            )
            return CholeskyFactor(lower=lower, jitter=jitter)
        jitter *= settings.jitter_growth

    raise IllConditionedError(
        f"matrix of size {n} is not positive definite after "
        f"{settings.jitter_retries} jitter escalations (last jitter {jitter / settings.jitter_growth:.3e})"
    )


def jittered_pivot(value: float, *, scale: float) -> float:
    """
    Accept a scalar Schur-complement pivot under the same policy as
    `jittered_cholesky`: returned as is above the floor, otherwise with the
    smallest escalated jitter that lifts it over.
    """
    settings = get_settings()
    floor = settings.pivot_floor_rel * scale
    if value >= floor:
        return value
    jitter = settings.jitter_rel * scale
    for attempt in range(settings.jitter_retries):
        if value + jitter >= floor:
            logger.debug(
                "Pivot accepted with jitter",
                extra={"pivot": value, "jitter": jitter, "attempt": attempt + 1},
            )
            return value + jitter
        jitter *= settings.jitter_growth
    raise IllConditionedError(
        f"pivot {value:.3e} stays below the floor after {settings.jitter_retries} jitter escalations"
    )


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def identity_residual(a: np.ndarray, a_inv: np.ndarray) -> float:
    """Infinity norm of ``a @ a_inv - I``."""
    n = a.shape[0]
    if n == 0:
        return 0.0
    return float(np.max(np.abs(a @ a_inv - np.eye(n))))
