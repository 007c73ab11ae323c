"""Shared rank-statistics kernel.

Both the correlation pruning stage and the report module compute Spearman
correlations through the functions here, so the two agree bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateInputError, LengthMismatchError


def average_ranks(values: np.ndarray) -> np.ndarray:
    """Rank a 1-D array from 1..n, assigning tied values their average rank."""
    values = np.asarray(values, dtype=float)
    n = values.size
    order = np.argsort(values, kind="stable")
    ranks = np.empty(n, dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # ranks i+1 .. j+1 share the mean rank
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(xs, ys) -> float:
    """Tie-corrected Spearman rank correlation (Pearson on average ranks).

    Returns 0.0 when either side is constant; callers that must distinguish
    the degenerate case should check variance themselves.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise LengthMismatchError(f"length mismatch: {xs.size} vs {ys.size}")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    den = float(np.dot(rx, rx)) * float(np.dot(ry, ry))
    if den <= 0.0:
        return 0.0
    rho = float(np.dot(rx, ry)) / math.sqrt(den)
    # guard against rounding one ulp outside [-1, 1]
    return max(-1.0, min(1.0, rho))


def spearman_with_pvalue(xs, ys) -> tuple[float, float]:
    """Spearman rho plus a two-sided p-value from the large-sample t approximation."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise LengthMismatchError(f"length mismatch: {xs.size} vs {ys.size}")
    n = xs.size
    if n < 3:
        raise DegenerateInputError("need at least 3 observations for a p-value")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise DegenerateInputError("all-ties input: correlation undefined")
    rho = spearman_rho(xs, ys)
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    from scipy.stats import t as t_dist  # deferred: scipy import is slow

    p = 2.0 * float(t_dist.sf(abs(t), df=n - 2))
    return rho, min(1.0, p)


def quantile(values, q: float) -> float:
    """Linear-interpolation quantile between closest ranks (numpy's default rule)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DegenerateInputError("quantile of empty sample")
    return float(np.quantile(values, q, method="linear"))


def quartiles(values) -> tuple[float, float, float]:
    return quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)
