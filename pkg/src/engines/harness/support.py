"""
Offline support-set selection by greedy variance maximization.
"""

import numpy as np

from src.kernel.errors import InvalidArgumentError
from src.kernel.gp_core import Hyperparams, as_locations, cov_matrix
from src.kernel.sparse_gp import SupportSet

TIE_TOL_REL = 1e-12


def select_support_set(candidates, k: int, h: Hyperparams) -> SupportSet:
    """
    Repeatedly add the candidate with the largest noise-free posterior
    variance given those already chosen.

    The conditional variances are kept current with one pivoted-Cholesky
    row per pick, O(n k) kernel evaluations overall. Candidates within
    1e-12 * signal_var of the maximum tie, and the lowest index wins.
    """
    x = as_locations(candidates, h.dim)
    n = x.shape[0]
    if k <= 0:
        raise InvalidArgumentError("support size must be positive")
    if k > n:
        raise InvalidArgumentError(f"support size {k} exceeds {n} candidates")
    hf = h.noise_free()

    variances = np.full(n, hf.signal_var)
    rows = np.zeros((k, n))
    chosen = np.zeros(n, dtype=bool)
    order = []
    for step in range(k):
        masked = np.where(chosen, -np.inf, variances)
        best = masked.max()
        pick = int(np.flatnonzero(masked >= best - TIE_TOL_REL * hf.signal_var)[0])
        order.append(pick)
        chosen[pick] = True
        pivot = variances[pick]
        if pivot > TIE_TOL_REL * hf.signal_var:
            column = cov_matrix(x, x[pick], hf)[:, 0]
            row = (column - rows[:step].T @ rows[:step, pick]) / np.sqrt(pivot)
            rows[step] = row
            variances = np.maximum(variances - row ** 2, 0.0)
    return SupportSet(x[order])
