"""Confidence intervals for sample quantiles by tail inversion.

Three constructions:

* ``snqesa_ci`` inverts the directed saddlepoint tails over a continuous
  candidate value.  The count is interpolated linearly between adjacent
  order statistics (m(X_(k)) = k), pushed through the ridged pivot and
  its closed-form inverse, and the lattice atom is Gamma-interpolated at
  the fractional count, so each tail is a continuous, monotone function
  of t; endpoints are found by an outward scan over order statistics
  followed by bisection.  Endpoint residuals |p - alpha/2| are recorded.

* ``exact_binomial_ci`` picks order-statistic ranks from exact binomial
  tails: the widest pair whose one-sided errors are each at most
  alpha/2.  Guaranteed coverage, typically conservative.

* ``min_length_ci`` scans all rank pairs with exact coverage at least
  1 - alpha and returns the shortest for the sample at hand (two-pointer,
  O(n) after the cdf pass); ties break toward the pair centered nearest
  the pivot mean.

``snqesa_disc_ci`` is the discrete tail inversion: thresholding the
lattice-exact closed tails reproduces the classical rank construction,
so it shares the rank selection with ``exact_binomial_ci`` and differs
only in its method tag.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from ._binom import invert_h, log_pmf_frac
from ._tails import QuantileSpec, continuous_cdf

__all__ = [
    "IntervalResult",
    "snqesa_ci",
    "snqesa_disc_ci",
    "exact_binomial_ci",
    "min_length_ci",
    "exact_rank_bounds",
    "min_length_bounds",
    "quantile_type8",
    "smooth_tail_functions",
    "binom_cdf_array",
]


@dataclass(frozen=True)
class IntervalResult:
    """A two-sided quantile confidence interval and how it was reached.

    Open ends are reported as -inf/+inf with the matching flag set.
    residual_lower/upper hold |p - alpha/2| at the returned endpoints for
    tail-inversion methods (nan for rank-based ones); rank methods carry
    the 1-based ranks and the exact analytic coverage instead.
    """

    lower: float
    upper: float
    lower_open: bool
    upper_open: bool
    method: str
    tau: float
    alpha: float
    n: int
    anchor: float
    residual_lower: float = math.nan
    residual_upper: float = math.nan
    lower_rank: int | None = None
    upper_rank: int | None = None
    coverage_exact: float | None = None
    status: str = "ok"
    elapsed_s: float = 0.0

    @property
    def level(self) -> float:
        return 1.0 - self.alpha

    @property
    def tail_residual_lo(self) -> float:
        return self.residual_lower

    @property
    def tail_residual_hi(self) -> float:
        return self.residual_upper

    @property
    def elapsed(self) -> float:
        return self.elapsed_s


def quantile_type8(sample: np.ndarray, tau: float, *, assume_sorted: bool = False) -> float:
    """Median-unbiased (type 8) sample quantile: plotting positions (k-1/3)/(n+1/3)."""
    xs = np.asarray(sample, dtype=float)
    if not assume_sorted:
        xs = np.sort(xs)
    n = xs.size
    h = (n + 1.0 / 3.0) * tau + 1.0 / 3.0
    k = int(math.floor(h))
    g = h - k
    if k < 1:
        return float(xs[0])
    if k >= n:
        return float(xs[-1])
    return float(xs[k - 1] + g * (xs[k] - xs[k - 1]))


def _smooth_pair(m: float, n: int, tau: float, mode: str, c0: float) -> tuple[float, float]:
    """Directed tail pair at fractional count m, continuous and monotone in m.

    Mirrors the integer-count lattice rules with the atom interpolated by
    the Gamma function; boundary overruns of the half-shift use the exact
    single-atom values so the function stays continuous at the ends.
    """
    if m <= 0.0:
        p0 = math.exp(n * math.log1p(-tau))
        down = {"midp": 0.5 * p0, "cornish_fisher": 0.0, "none": p0}[mode]
        return down, 1.0 - down if mode != "none" else 1.0
    if m >= n:
        pn = math.exp(n * math.log(tau))
        up = {"midp": 0.5 * pn, "cornish_fisher": 0.0, "none": pn}[mode]
        return 1.0 - up if mode != "none" else 1.0, up

    def cdf_at(mm: float) -> float:
        # half-shift overruns of the lattice range carry no tail mass
        if mm <= 0.0:
            return 0.0
        if mm >= n:
            return 1.0
        return continuous_cdf(mm, tau, n, c0)[0]

    low_side = m < n * tau
    atom = math.exp(log_pmf_frac(m, n, tau))
    if mode == "midp":
        if low_side:
            p_down = cdf_at(m - 0.5) + 0.5 * atom
            return p_down, 1.0 - p_down
        p_up = (1.0 - cdf_at(m + 0.5)) + 0.5 * atom
        return 1.0 - p_up, p_up
    if mode == "cornish_fisher":
        if low_side:
            p_down = cdf_at(m + 0.5)
            return p_down, 1.0 - p_down
        p_up = 1.0 - cdf_at(m - 0.5)
        return 1.0 - p_up, p_up
    if low_side:
        below = cdf_at(m - 0.5)
        return below + atom, 1.0 - below
    above_cdf = cdf_at(m + 0.5)
    return above_cdf, (1.0 - above_cdf) + atom


def smooth_tail_functions(xs_sorted: np.ndarray, spec: QuantileSpec):
    """Continuous tail functions (p_down, p_up, m_of_t) for a sorted sample.

    m_of_t interpolates the count between adjacent distinct order
    statistics (ties collapse to the highest rank in the tie group) and
    plateaus at 0 below the minimum and n above the maximum.  The count
    is mapped through the ridged pivot and the closed-form (ridge-free)
    inverse before the tails are evaluated, matching the p-value path.
    """
    xs = np.asarray(xs_sorted, dtype=float)
    n = xs.size
    tau = spec.tau
    eps = spec.ridge_c / math.sqrt(n) if spec.ridge_c > 0.0 else 0.0
    # collapse ties: highest 1-based rank per distinct value
    distinct, last_idx = np.unique(xs[::-1], return_index=True)
    pos = (n - last_idx).astype(float)

    def m_of_t(t: float) -> float:
        if t < distinct[0]:
            return 0.0
        if t >= distinct[-1]:
            return float(n) if t > distinct[-1] else pos[-1]
        j = int(np.searchsorted(distinct, t, side="right"))
        lo, hi = distinct[j - 1], distinct[j]
        return pos[j - 1] + (t - lo) / (hi - lo) * (pos[j] - pos[j - 1])

    def effective_m(m: float) -> float:
        # ridged pivot at fractional count, then the ridge-free inverse;
        # identity when the ridge is off
        if eps == 0.0:
            return m
        s = n * tau - m
        q = m * (1.0 - tau) ** 2 + (n - m) * tau**2 + eps
        x = s / math.sqrt(q)
        return n * invert_h(x, tau, n, 0.0)

    def p_down(t: float) -> float:
        return _smooth_pair(effective_m(m_of_t(t)), n, tau, spec.lattice_mode, spec.c0)[0]

    def p_up(t: float) -> float:
        return _smooth_pair(effective_m(m_of_t(t)), n, tau, spec.lattice_mode, spec.c0)[1]

    return p_down, p_up, m_of_t


def _bisect(
    f,
    lo: float,
    hi: float,
    flo: float,
    fhi: float,
    tol_rel: float = 1e-8,
    res_tol: float = 1e-8,
) -> float:
    """Sign-change bisection on t.

    Stops once the bracket width is below tol_rel * (1 + |mid|) and the
    residual |f(mid)| is below res_tol.  The width test alone is not
    enough: inside a very narrow inter-order-statistic gap the smoothed
    tail is steep, so the residual keeps shrinking the bracket until it
    collapses to float resolution (a genuine jump in f).
    """
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        width = hi - lo
        if width < tol_rel * (1.0 + abs(mid)) and (
            abs(fm) <= res_tol or width <= 4.0 * math.ulp(max(abs(lo), abs(hi)))
        ):
            return mid
        if (flo < 0.0) == (fm < 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return mid


def snqesa_ci(sample: np.ndarray, spec: QuantileSpec) -> IntervalResult:
    """Equal-tailed interval from the continuous directed-tail inversion.

    The lower endpoint solves p_down(t) = alpha/2 (p_down increases in t),
    the upper solves p_up(t) = alpha/2.  When a tail never reaches
    alpha/2 the corresponding end opens to -inf/+inf; when the tail
    jumps across alpha/2 at a sample extreme the endpoint is that
    extreme order statistic, flagged open (status *_at_min / *_at_max).
    """
    t0 = time.perf_counter()
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n < 2:
        raise ValueError("need at least 2 observations for an interval")
    half = spec.alpha / 2.0
    p_down, p_up, _ = smooth_tail_functions(xs, spec)
    anchor = quantile_type8(xs, spec.tau, assume_sorted=True)
    status_parts: list[str] = []

    # lower: bracket the sign change of p_down - half by walking order
    # statistics outward (down) from the anchor
    f = lambda t: p_down(t) - half
    idx = int(np.searchsorted(xs, anchor))
    lower = -math.inf
    lower_open = True
    res_lo = math.nan
    t_prev, f_prev = anchor, f(anchor)
    if f_prev < 0.0:
        # anchor already outside: walk up to find the bracket's right edge
        found = False
        for i in range(idx, n):
            ti, fi = float(xs[i]), f(float(xs[i]))
            if fi >= 0.0:
                lower = _bisect(f, t_prev, ti, f_prev, fi)
                found = True
                break
            t_prev, f_prev = ti, fi
        if found:
            lower_open = False
            res_lo = abs(f(lower))
        else:
            status_parts.append("lower_degenerate")
    else:
        found = False
        for i in range(min(idx, n) - 1, -1, -1):
            ti, fi = float(xs[i]), f(float(xs[i]))
            if fi < 0.0:
                lower = _bisect(f, ti, t_prev, fi, f_prev)
                found = True
                break
            t_prev, f_prev = ti, fi
        if found:
            lower_open = False
            res_lo = abs(f(lower))
        elif f(float(xs[0]) - 1.0) < 0.0 <= f(float(xs[0])):
            # the tail jumps across alpha/2 at the sample minimum, so no
            # root exists: report the extreme order statistic with an
            # open end and the (structural) residual there
            lower, lower_open = float(xs[0]), True
            res_lo = abs(f(lower))
            status_parts.append("lower_at_min")
        else:
            status_parts.append("open_lower")

    g = lambda t: p_up(t) - half
    upper = math.inf
    upper_open = True
    res_hi = math.nan
    t_prev, g_prev = anchor, g(anchor)
    if g_prev < 0.0:
        found = False
        for i in range(idx - 1, -1, -1):
            ti, gi = float(xs[i]), g(float(xs[i]))
            if gi >= 0.0:
                upper = _bisect(g, ti, t_prev, gi, g_prev)
                found = True
                break
            t_prev, g_prev = ti, gi
        if found:
            upper_open = False
            res_hi = abs(g(upper))
        else:
            status_parts.append("upper_degenerate")
    else:
        found = False
        for i in range(max(idx, 0), n):
            ti, gi = float(xs[i]), g(float(xs[i]))
            if gi < 0.0:
                upper = _bisect(g, t_prev, ti, g_prev, gi)
                found = True
                break
            t_prev, g_prev = ti, gi
        if found:
            upper_open = False
            res_hi = abs(g(upper))
        elif g(float(xs[-1]) + 1.0) < 0.0 <= g(float(xs[-1])):
            upper, upper_open = float(xs[-1]), True
            res_hi = abs(g(upper))
            status_parts.append("upper_at_max")
        else:
            status_parts.append("open_upper")

    return IntervalResult(
        lower=lower,
        upper=upper,
        lower_open=lower_open,
        upper_open=upper_open,
        method="snqesa",
        tau=spec.tau,
        alpha=spec.alpha,
        n=n,
        anchor=anchor,
        residual_lower=res_lo,
        residual_upper=res_hi,
        status=";".join(status_parts) if status_parts else "ok",
        elapsed_s=time.perf_counter() - t0,
    )


def binom_cdf_array(n: int, tau: float) -> np.ndarray:
    """P(K <= k) for k = 0..n via the regularized incomplete beta."""
    k = np.arange(n, dtype=float)
    cdf = np.empty(n + 1)
    cdf[:n] = betainc(n - k, k + 1.0, 1.0 - tau)
    cdf[n] = 1.0
    return cdf


def exact_rank_bounds(n: int, tau: float, alpha: float) -> tuple[int, int, float]:
    """Rank pair (l, u) with one-sided exact errors each at most alpha/2.

    l is the largest rank with P(K <= l-1) <= alpha/2 (0 when none exists,
    meaning an open lower end); u is the smallest rank with
    P(K >= u) <= alpha/2 (n+1 when none exists, an open upper end).
    Returns (l, u, exact coverage P(l <= K <= u-1)).
    """
    half = alpha / 2.0
    cdf = binom_cdf_array(n, tau)
    # largest j with cdf[j] <= half; l = j + 1
    j = int(np.searchsorted(cdf, half, side="right")) - 1
    l = j + 1
    # smallest u with 1 - cdf[u-1] <= half, i.e. cdf[u-1] >= 1 - half
    i = int(np.searchsorted(cdf, 1.0 - half, side="left"))
    u = i + 1
    lo_err = float(cdf[l - 1]) if l >= 1 else 0.0
    hi_err = float(1.0 - cdf[u - 1]) if u <= n else 0.0
    return l, u, 1.0 - lo_err - hi_err


def min_length_bounds(
    xs_sorted: np.ndarray, tau: float, alpha: float
) -> tuple[int, int, float] | None:
    """Shortest rank pair with exact coverage >= 1 - alpha for this sample.

    Two-pointer scan over l with the matching minimal u; O(n) after the
    cdf pass.  Near-ties in length break toward the pair whose center is
    closest to n*tau + 1.  Returns None when no finite pair covers.
    """
    xs = np.asarray(xs_sorted, dtype=float)
    n = xs.size
    cdf = np.concatenate(([0.0], binom_cdf_array(n, tau)))  # cdf[k+1] = P(K <= k)
    target = 1.0 - alpha
    center = n * tau + 1.0
    best: tuple[float, int, int] | None = None
    u = 1
    for l in range(1, n + 1):
        if u < l + 1:
            u = l + 1
        while u <= n and cdf[u] - cdf[l] < target:
            u += 1
        if u > n:
            break
        length = float(xs[u - 1] - xs[l - 1])
        if best is None or length < best[0] - 1e-12 * (1.0 + abs(best[0])):
            best = (length, l, u)
        elif abs(length - best[0]) <= 1e-12 * (1.0 + abs(best[0])) and abs(
            0.5 * (l + u) - center
        ) < abs(0.5 * (best[1] + best[2]) - center):
            best = (length, l, u)
    if best is None:
        return None
    _, l, u = best
    return l, u, float(cdf[u] - cdf[l])


def _rank_interval(
    sample: np.ndarray, spec: QuantileSpec, method: str, t0: float
) -> IntervalResult:
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    l, u, cov = exact_rank_bounds(n, spec.tau, spec.alpha)
    lower = float(xs[l - 1]) if l >= 1 else -math.inf
    upper = float(xs[u - 1]) if u <= n else math.inf
    parts = []
    if l < 1:
        parts.append("open_lower")
    if u > n:
        parts.append("open_upper")
    return IntervalResult(
        lower=lower,
        upper=upper,
        lower_open=l < 1,
        upper_open=u > n,
        method=method,
        tau=spec.tau,
        alpha=spec.alpha,
        n=n,
        anchor=quantile_type8(xs, spec.tau, assume_sorted=True),
        lower_rank=l if l >= 1 else None,
        upper_rank=u if u <= n else None,
        coverage_exact=cov,
        status=";".join(parts) if parts else "ok",
        elapsed_s=time.perf_counter() - t0,
    )


def exact_binomial_ci(sample: np.ndarray, spec: QuantileSpec) -> IntervalResult:
    """Distribution-free order-statistic interval from exact binomial tails."""
    return _rank_interval(sample, spec, "exact", time.perf_counter())


def snqesa_disc_ci(sample: np.ndarray, spec: QuantileSpec) -> IntervalResult:
    """Discrete tail inversion over order statistics.

    Thresholding the lattice-exact closed tails at alpha/2 selects exactly
    the classical rank pair, so this shares rank selection with
    ``exact_binomial_ci``; kept as its own method for reporting.
    """
    return _rank_interval(sample, spec, "snqesa_disc", time.perf_counter())


def min_length_ci(sample: np.ndarray, spec: QuantileSpec) -> IntervalResult:
    """Shortest exact-coverage rank interval for the sample at hand."""
    t0 = time.perf_counter()
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    got = min_length_bounds(xs, spec.tau, spec.alpha)
    if got is None:
        return IntervalResult(
            lower=-math.inf,
            upper=math.inf,
            lower_open=True,
            upper_open=True,
            method="snqesa_min",
            tau=spec.tau,
            alpha=spec.alpha,
            n=n,
            anchor=quantile_type8(xs, spec.tau, assume_sorted=True),
            status="no_covering_pair",
            elapsed_s=time.perf_counter() - t0,
        )
    l, u, cov = got
    return IntervalResult(
        lower=float(xs[l - 1]),
        upper=float(xs[u - 1]),
        lower_open=False,
        upper_open=False,
        method="snqesa_min",
        tau=spec.tau,
        alpha=spec.alpha,
        n=n,
        anchor=quantile_type8(xs, spec.tau, assume_sorted=True),
        lower_rank=l,
        upper_rank=u,
        coverage_exact=cov,
        status="ok",
        elapsed_s=time.perf_counter() - t0,
    )
