"""Baseline quantile confidence intervals.

Resampling and asymptotic competitors sharing one convention set: the
point estimate and every replicate quantile use the median-unbiased
(type 8) definition, normal quantiles come from the inverse error
function, and degenerate resampling distributions collapse to the
diagnostic interval [theta_hat, theta_hat] rather than raising.

All constructors take an explicit numpy Generator so simulation studies
can hand each method its own derived stream; the fallback seed 0 keeps
ad hoc calls reproducible.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.special import betainc, ndtr, ndtri

from ._ci import IntervalResult, quantile_type8
from ._tails import QuantileSpec

__all__ = [
    "pct_bootstrap_ci",
    "bca_ci",
    "smoothed_bootstrap_ci",
    "subsample_ci",
    "m_out_of_n_ci",
    "wald_kde_ci",
    "harrell_davis_ci",
    "maritz_jarrett_ci",
    "hd_estimate",
]


def _as_sorted(sample: np.ndarray) -> np.ndarray:
    xs = np.sort(np.asarray(sample, dtype=float))
    if xs.ndim != 1 or xs.size < 2:
        raise ValueError("need a 1-d sample with at least 2 observations")
    return xs


def _rng(rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(0)


def _type8(arr: np.ndarray, q: float) -> float:
    return float(np.quantile(arr, q, method="median_unbiased"))


def _result(
    lower: float,
    upper: float,
    method: str,
    spec: QuantileSpec,
    n: int,
    anchor: float,
    status: str,
    t0: float,
) -> IntervalResult:
    return IntervalResult(
        lower=lower,
        upper=upper,
        lower_open=not math.isfinite(lower),
        upper_open=not math.isfinite(upper),
        method=method,
        tau=spec.tau,
        alpha=spec.alpha,
        n=n,
        anchor=anchor,
        status=status,
        elapsed_s=time.perf_counter() - t0,
    )


def _replicate_quantiles(
    xs: np.ndarray, tau: float, n_boot: int, rng: np.random.Generator
) -> np.ndarray:
    n = xs.size
    idx = rng.integers(0, n, size=(n_boot, n))
    return np.quantile(xs[idx], tau, axis=1, method="median_unbiased")


def pct_bootstrap_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 1000,
) -> IntervalResult:
    """Percentile bootstrap: type-8 quantiles of the replicate distribution."""
    t0 = time.perf_counter()
    xs = _as_sorted(sample)
    gen = _rng(rng)
    anchor = quantile_type8(xs, spec.tau, assume_sorted=True)
    reps = _replicate_quantiles(xs, spec.tau, n_boot, gen)
    if np.ptp(reps) == 0.0:
        return _result(anchor, anchor, "pctboot", spec, xs.size, anchor, "degenerate", t0)
    half = spec.alpha / 2.0
    return _result(
        _type8(reps, half), _type8(reps, 1.0 - half), "pctboot", spec, xs.size, anchor, "ok", t0
    )


def _jackknife_acceleration(xs: np.ndarray, tau: float) -> float:
    """Acceleration constant from leave-one-out type-8 quantiles, O(n)."""
    n = xs.size
    h = (n - 1 + 1.0 / 3.0) * tau + 1.0 / 3.0
    k = int(math.floor(h))
    g = h - k
    k = min(max(k, 1), n - 1)
    i = np.arange(n)
    # leaving out index i shifts order statistics at or above i up by one
    lo = xs[np.minimum(k - 1 + (i <= k - 1), n - 1)]
    hi = xs[np.minimum(k + (i <= k), n - 1)]
    loo = lo + g * (hi - lo)
    d = loo.mean() - loo
    denom = float(np.sum(d**2)) ** 1.5
    if denom == 0.0:
        return 0.0
    return float(np.sum(d**3)) / (6.0 * denom)


def bca_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 1000,
) -> IntervalResult:
    """Bias-corrected accelerated bootstrap.

    The bias constant uses the half-tie convention #{rep < theta_hat} +
    #{rep == theta_hat}/2 with the proportion clamped to
    [1/(2B), 1 - 1/(2B)] so z0 stays finite; acceleration comes from the
    jackknife skewness of leave-one-out quantiles.
    """
    t0 = time.perf_counter()
    xs = _as_sorted(sample)
    gen = _rng(rng)
    anchor = quantile_type8(xs, spec.tau, assume_sorted=True)
    reps = _replicate_quantiles(xs, spec.tau, n_boot, gen)
    if np.ptp(reps) == 0.0:
        return _result(anchor, anchor, "bca", spec, xs.size, anchor, "degenerate", t0)
    prop = (np.sum(reps < anchor) + 0.5 * np.sum(reps == anchor)) / n_boot
    clamp = 1.0 / (2.0 * n_boot)
    status = "ok" if clamp <= prop <= 1.0 - clamp else "z0_clamped"
    prop = min(max(prop, clamp), 1.0 - clamp)
    z0 = float(ndtri(prop))
    a = _jackknife_acceleration(xs, spec.tau)
    half = spec.alpha / 2.0
    out = []
    for z in (float(ndtri(half)), float(ndtri(1.0 - half))):
        adj = z0 + (z0 + z) / (1.0 - a * (z0 + z))
        out.append(float(ndtr(adj)))
    a1 = min(max(out[0], clamp), 1.0 - clamp)
    a2 = min(max(out[1], clamp), 1.0 - clamp)
    return _result(
        _type8(reps, min(a1, a2)),
        _type8(reps, max(a1, a2)),
        "bca",
        spec,
        xs.size,
        anchor,
        status,
        t0,
    )


def _silverman(xs: np.ndarray) -> float:
    sd = float(np.std(xs, ddof=1))
    iqr = float(np.quantile(xs, 0.75, method="median_unbiased") - np.quantile(xs, 0.25, method="median_unbiased"))
    scale = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    return 0.9 * scale * xs.size ** (-0.2)


def smoothed_bootstrap_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 1000,
) -> IntervalResult:
    """Percentile interval from resamples perturbed by Silverman-bandwidth noise."""
    t0 = time.perf_counter()
    xs = _as_sorted(sample)
    gen = _rng(rng)
    anchor = quantile_type8(xs, spec.tau, assume_sorted=True)
    h = _silverman(xs)
    n = xs.size
    idx = gen.integers(0, n, size=(n_boot, n))
    draws = xs[idx]
    if h > 0.0:
        draws = draws + h * gen.standard_normal(size=draws.shape)
    reps = np.quantile(draws, spec.tau, axis=1, method="median_unbiased")
    if np.ptp(reps) == 0.0:
        return _result(anchor, anchor, "smboot", spec, n, anchor, "degenerate", t0)
    half = spec.alpha / 2.0
    return _result(
        _type8(reps, half), _type8(reps, 1.0 - half), "smboot", spec, n, anchor, "ok", t0
    )


def _pivot_interval(
    xs: np.ndarray,
    spec: QuantileSpec,
    gen: np.random.Generator,
    n_boot: int,
    method: str,
    replace: bool,
    t0: float,
) -> IntervalResult:
    """Shared small-resample pivot construction: 2*theta_hat - replicate."""
    n = xs.size
    b = int(round(n**0.7))
    b = min(max(b, 2), n)
    anchor = quantile_type8(xs, spec.tau, assume_sorted=True)
    reps = np.empty(n_boot)
    if replace:
        idx = gen.integers(0, n, size=(n_boot, b))
        reps = np.quantile(xs[idx], spec.tau, axis=1, method="median_unbiased")
    else:
        for j in range(n_boot):
            sub = gen.choice(xs, size=b, replace=False)
            reps[j] = np.quantile(sub, spec.tau, method="median_unbiased")
    pivots = 2.0 * anchor - reps
    if np.ptp(pivots) == 0.0:
        return _result(anchor, anchor, method, spec, n, anchor, "degenerate", t0)
    half = spec.alpha / 2.0
    lo, hi = _type8(pivots, half), _type8(pivots, 1.0 - half)
    return _result(min(lo, hi), max(lo, hi), method, spec, n, anchor, "ok", t0)


def subsample_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 1000,
) -> IntervalResult:
    """Subsampling (without replacement, b = n^0.7) with the 2q - q_b pivot."""
    t0 = time.perf_counter()
    return _pivot_interval(_as_sorted(sample), spec, _rng(rng), n_boot, "subsample", False, t0)


def m_out_of_n_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 1000,
) -> IntervalResult:
    """m-out-of-n bootstrap (with replacement, m = n^0.7), same pivot as subsampling."""
    t0 = time.perf_counter()
    return _pivot_interval(_as_sorted(sample), spec, _rng(rng), n_boot, "moutofn", True, t0)


def wald_kde_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 0,
) -> IntervalResult:
    """Asymptotic Wald interval with a kernel density plug-in.

    theta_hat +- z * sqrt(tau*(1-tau)/n) / f_hat(theta_hat), with the
    Gaussian-KDE density floored at 1e-4 / sample range so a vanishing
    density estimate widens rather than explodes the interval.
    """
    t0 = time.perf_counter()
    xs = _as_sorted(sample)
    n = xs.size
    anchor = quantile_type8(xs, spec.tau, assume_sorted=True)
    rng_span = float(xs[-1] - xs[0])
    if rng_span == 0.0:
        return _result(anchor, anchor, "waldkde", spec, n, anchor, "degenerate", t0)
    h = _silverman(xs)
    if h <= 0.0:
        h = rng_span / math.sqrt(n)
    z = (anchor - xs) / h
    fhat = float(np.mean(np.exp(-0.5 * z * z)) / (h * math.sqrt(2.0 * math.pi)))
    floor = 1e-4 / rng_span
    status = "ok" if fhat >= floor else "floored"
    fhat = max(fhat, floor)
    zq = float(ndtri(1.0 - spec.alpha / 2.0))
    se = math.sqrt(spec.tau * (1.0 - spec.tau) / n) / fhat
    return _result(anchor - zq * se, anchor + zq * se, "waldkde", spec, n, anchor, status, t0)


def hd_estimate(xs_sorted: np.ndarray, tau: float) -> tuple[float, float]:
    """Harrell-Davis estimate and its Maritz-Jarrett variance.

    Weights are Beta((n+1)tau, (n+1)(1-tau)) increments over [k-1, k]/n;
    the variance is the weighted second moment minus the squared estimate.
    """
    xs = np.asarray(xs_sorted, dtype=float)
    n = xs.size
    a = (n + 1.0) * tau
    b = (n + 1.0) * (1.0 - tau)
    grid = np.arange(n + 1) / n
    cdf = betainc(a, b, grid)
    w = np.diff(cdf)
    est = float(np.sum(w * xs))
    var = float(np.sum(w * xs**2) - est**2)
    return est, max(var, 0.0)


def harrell_davis_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 1000,
) -> IntervalResult:
    """Percentile bootstrap of the Harrell-Davis weighted quantile."""
    t0 = time.perf_counter()
    xs = _as_sorted(sample)
    gen = _rng(rng)
    n = xs.size
    est, _ = hd_estimate(xs, spec.tau)
    idx = gen.integers(0, n, size=(n_boot, n))
    draws = np.sort(xs[idx], axis=1)
    a = (n + 1.0) * spec.tau
    b = (n + 1.0) * (1.0 - spec.tau)
    w = np.diff(betainc(a, b, np.arange(n + 1) / n))
    reps = draws @ w
    if np.ptp(reps) == 0.0:
        return _result(est, est, "hd", spec, n, est, "degenerate", t0)
    half = spec.alpha / 2.0
    return _result(_type8(reps, half), _type8(reps, 1.0 - half), "hd", spec, n, est, "ok", t0)


def maritz_jarrett_ci(
    sample: np.ndarray,
    spec: QuantileSpec,
    rng: np.random.Generator | None = None,
    n_boot: int = 0,
) -> IntervalResult:
    """Normal interval for the Harrell-Davis estimate with Maritz-Jarrett scale."""
    t0 = time.perf_counter()
    xs = _as_sorted(sample)
    est, var = hd_estimate(xs, spec.tau)
    if var == 0.0:
        return _result(est, est, "mj", spec, xs.size, est, "degenerate", t0)
    zq = float(ndtri(1.0 - spec.alpha / 2.0))
    se = math.sqrt(var)
    return _result(est - zq * se, est + zq * se, "mj", spec, xs.size, est, "ok", t0)
