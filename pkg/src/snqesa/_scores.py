"""Self-normalized quantile score statistics.

The quantile estimating score at level ``tau`` is

    psi_tau(u) = tau - 1{u <= 0},

so for a candidate quantile value ``t`` the score sum and its empirical
second moment depend on the sample only through the count
``K = #{X_i <= t}``:

    S_n = n*tau - K
    Q_n = K*(1 - tau)**2 + (n - K)*tau**2 + eps_n

with a small ridge ``eps_n = ridge_c / sqrt(n)`` keeping Q_n positive
when tau*n is extreme.  The self-normalized pivot is ``T_n = S_n / sqrt(Q_n)``,
nonincreasing in t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ScoreStats", "score_stats", "score_path", "count_le", "sq_from_count"]


@dataclass(frozen=True)
class ScoreStats:
    """Score statistics of a sample at a candidate quantile value.

    Attributes
    ----------
    n : int
        Sample size.
    k : int
        Number of observations <= t.
    s : float
        Score sum n*tau - k.
    q : float
        Ridged second moment of the score.
    x : float
        Self-normalized statistic s / sqrt(q).
    tau : float
        Quantile level.
    ridge : float
        Ridge value eps_n actually added to q.
    """

    n: int
    k: int
    s: float
    q: float
    x: float
    tau: float
    ridge: float


def count_le(sample: np.ndarray, t: float) -> int:
    """Count observations <= t in a sorted sample via binary search."""
    return int(np.searchsorted(sample, t, side="right"))


def sq_from_count(n: int, k: int, tau: float, ridge_c: float = 0.25) -> tuple[float, float, float, float]:
    """Return (s, q, x, eps) for a count k out of n at level tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    if not 0 <= k <= n:
        raise ValueError(f"count k={k} outside [0, {n}]")
    if ridge_c < 0.0:
        raise ValueError(f"ridge_c must be >= 0, got {ridge_c}")
    eps = ridge_c / math.sqrt(n) if ridge_c > 0.0 else 0.0
    s = n * tau - k
    q = k * (1.0 - tau) ** 2 + (n - k) * tau**2 + eps
    if q <= 0.0:
        # only reachable with ridge_c == 0 and a degenerate (k, tau) corner
        raise ZeroDivisionError("Q_n is zero; use a positive ridge_c")
    return s, q, s / math.sqrt(q), eps


def score_stats(
    sample: np.ndarray,
    t: float,
    tau: float,
    ridge_c: float = 0.25,
    *,
    assume_sorted: bool = False,
) -> ScoreStats:
    """Evaluate the self-normalized quantile score at a candidate value t.

    Parameters
    ----------
    sample : array_like
        Observations.  Sorted ascending if ``assume_sorted`` is set.
    t : float
        Candidate quantile value.
    tau : float
        Quantile level in (0, 1).
    ridge_c : float
        Ridge constant c in eps_n = c / sqrt(n).  Zero disables the ridge.
    assume_sorted : bool
        Skip the internal sort; callers evaluating many t against one
        sample should sort once and set this.
    """
    xs = np.asarray(sample, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("sample must be a nonempty 1-d array")
    if not np.isfinite(t):
        raise ValueError(f"candidate value must be finite, got {t}")
    if not assume_sorted:
        xs = np.sort(xs)
    n = xs.size
    k = count_le(xs, t)
    s, q, x, eps = sq_from_count(n, k, tau, ridge_c)
    return ScoreStats(n=n, k=k, s=s, q=q, x=x, tau=tau, ridge=eps)


def score_path(
    sample: np.ndarray,
    tau: float,
    ridge_c: float = 0.25,
) -> tuple[np.ndarray, list[ScoreStats]]:
    """Trace the score statistics across the whole sample range.

    Evaluation points are the midpoints between adjacent distinct order
    statistics plus one point below the minimum and one above the maximum,
    so every achievable count 0..n appears exactly once for distinct data.
    Counts advance by cumulative multiplicity, an O(1) update per step once
    the sample is sorted.

    Returns
    -------
    (ts, stats)
        ts : evaluation points, strictly increasing.
        stats : ScoreStats at each point, counts nondecreasing.
    """
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("sample must be nonempty")
    distinct, counts = np.unique(xs, return_counts=True)
    span = distinct[-1] - distinct[0] if distinct.size > 1 else max(abs(distinct[0]), 1.0)
    pad = 0.5 * span if span > 0 else 1.0
    ts = np.empty(distinct.size + 1)
    ts[0] = distinct[0] - pad
    ts[1:-1] = 0.5 * (distinct[:-1] + distinct[1:])
    ts[-1] = distinct[-1] + pad

    stats: list[ScoreStats] = []
    k = 0
    cum = np.concatenate(([0], np.cumsum(counts)))
    for i, t in enumerate(ts):
        k = int(cum[i])  # count below the i-th gap
        s, q, x, eps = sq_from_count(n, k, tau, ridge_c)
        stats.append(ScoreStats(n=n, k=k, s=s, q=q, x=x, tau=tau, ridge=eps))
    return ts, stats
