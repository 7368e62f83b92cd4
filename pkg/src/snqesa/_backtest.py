"""Value-at-Risk backtesting on rolling quantile forecasts.

Forecasts are causal: the VaR for day t is the (1-tau) return quantile
estimated from the m preceding days, either directly (historical
simulation) or after EWMA devolatilization (filtered historical
simulation, lambda = 0.94, initialized at the first window's sample
variance).  A hit is a day whose realized return falls at or below the
forecast.  Calibration tests follow the likelihood-ratio classics:
unconditional coverage (Kupiec), first-order independence
(Christoffersen), and their sum as conditional coverage; chi-square
survival functions for 1 and 2 degrees of freedom are the closed forms
erfc(sqrt(x/2)) and exp(-x/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._ci import snqesa_ci
from ._tails import QuantileSpec

__all__ = [
    "VarPath",
    "BacktestReport",
    "rolling_var",
    "kupiec_pof",
    "christoffersen_ind",
    "conditional_coverage",
    "cc",
    "traffic_light",
    "stability_metrics",
    "extreme_event_scores",
    "backtest_report",
    "chi2_sf",
]

_EWMA_LAMBDA = 0.94


def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function for df in {1, 2}."""
    if x < 0.0:
        return 1.0
    if df == 1:
        return math.erfc(math.sqrt(0.5 * x))
    if df == 2:
        return math.exp(-0.5 * x)
    raise ValueError("df must be 1 or 2")


def _xlogy(x: float, y: float) -> float:
    """x*log(y) with the 0*log(0) = 0 convention."""
    if x == 0.0:
        return 0.0
    return x * math.log(y)


@dataclass(frozen=True)
class VarPath:
    """Rolling forecasts aligned to the days they cover.

    Entry i forecasts day start + i of the return series; hit[i] records
    whether that day's return breached the forecast.  ci_lo/ci_hi are the
    window-quantile interval endpoints (NaN when not requested).
    """

    start: int
    var: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    hit: np.ndarray
    sigma: np.ndarray | None = None


def _type8_quantile(a: np.ndarray, q: float, axis: int | None = None) -> np.ndarray:
    return np.quantile(a, q, axis=axis, method="median_unbiased")


def rolling_var(
    returns: np.ndarray,
    tau: float = 0.99,
    window: int = 250,
    model: str = "hs",
    spec: QuantileSpec | None = None,
    compute_ci: bool = False,
    ci_alpha: float = 0.05,
) -> VarPath:
    """Rolling (1 - tau) return-quantile forecasts with optional intervals.

    model 'hs' uses the raw window; 'fhs' devolatilizes by the causal
    EWMA volatility and rescales by the next day's volatility.  With
    compute_ci the self-normalized interval for the window quantile is
    attached at each day (rescaled likewise under 'fhs'); it is off by
    default because it dominates the cost of long paths.
    """
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1:
        raise ValueError("returns must be 1-d")
    n = r.size
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    if window < 2 or window >= n:
        raise ValueError(f"window must be in [2, len(returns)); got {window} for {n} returns")
    if model not in ("hs", "fhs"):
        raise ValueError("model must be 'hs' or 'fhs'")
    level = 1.0 - tau
    n_fc = n - window
    the_spec = spec or QuantileSpec(tau=level, alpha=ci_alpha)
    if the_spec.tau != level:
        the_spec = QuantileSpec(
            tau=level,
            alpha=the_spec.alpha,
            ridge_c=the_spec.ridge_c,
            lattice_mode=the_spec.lattice_mode,
            c0=the_spec.c0,
            r_floor=the_spec.r_floor,
            solver=the_spec.solver,
        )

    sigma = None
    if model == "hs":
        wins = np.lib.stride_tricks.sliding_window_view(r[:-1], window)  # windows ending at t-1
        var = np.asarray(_type8_quantile(wins, level, axis=1), dtype=float)
        scale = np.ones(n_fc)
        z_wins = wins
    else:
        sig2 = np.empty(n + 1)
        sig2[0] = float(np.var(r[:window], ddof=1))
        for t in range(n):
            sig2[t + 1] = _EWMA_LAMBDA * sig2[t] + (1.0 - _EWMA_LAMBDA) * r[t] * r[t]
        sigma = np.sqrt(sig2)
        z = r / sigma[:n]
        z_wins = np.lib.stride_tricks.sliding_window_view(z[:-1], window)
        zq = np.asarray(_type8_quantile(z_wins, level, axis=1), dtype=float)
        scale = sigma[window : window + n_fc]
        var = scale * zq

    ci_lo = np.full(n_fc, math.nan)
    ci_hi = np.full(n_fc, math.nan)
    if compute_ci:
        for i in range(n_fc):
            res = snqesa_ci(z_wins[i], the_spec)
            ci_lo[i] = scale[i] * res.lower
            ci_hi[i] = scale[i] * res.upper
    hit = r[window:] <= var
    return VarPath(start=window, var=var, ci_lo=ci_lo, ci_hi=ci_hi, hit=hit, sigma=sigma)


def kupiec_pof(hits: np.ndarray, pi0: float) -> tuple[float, float]:
    """Kupiec proportion-of-failures LR and its chi-square(1) p-value.

    pi0 is the null exceedance probability (1 - tau for a tau-level VaR);
    zero observed hits give LR = -2*N*log(1 - pi0) by the 0*log(0) = 0
    convention.
    """
    h = np.asarray(hits, dtype=bool)
    n = h.size
    if n == 0:
        raise ValueError("empty hit series")
    if not 0.0 < pi0 < 1.0:
        raise ValueError("pi0 must be in (0, 1)")
    x = int(h.sum())
    pihat = x / n
    ll0 = _xlogy(x, pi0) + _xlogy(n - x, 1.0 - pi0)
    ll1 = _xlogy(x, pihat) if pihat > 0.0 else 0.0
    ll1 += _xlogy(n - x, 1.0 - pihat) if pihat < 1.0 else 0.0
    lr = max(0.0, -2.0 * (ll0 - ll1))
    return lr, chi2_sf(lr, 1)


def christoffersen_ind(hits: np.ndarray) -> tuple[float, float]:
    """First-order independence LR and its chi-square(1) p-value.

    Every log-likelihood term follows the 0*log(0) = 0 convention, and a
    transition row that was never visited contributes nothing, so
    degenerate tables (e.g. no exceedances at all) give LR = 0, p = 1.
    """
    h = np.asarray(hits, dtype=bool).astype(int)
    if h.size < 2:
        return 0.0, 1.0
    a, b = h[:-1], h[1:]
    n00 = int(np.sum((a == 0) & (b == 0)))
    n01 = int(np.sum((a == 0) & (b == 1)))
    n10 = int(np.sum((a == 1) & (b == 0)))
    n11 = int(np.sum((a == 1) & (b == 1)))
    total = n00 + n01 + n10 + n11
    ones = n01 + n11
    pi = ones / total
    ll0 = _xlogy(ones, pi) + _xlogy(total - ones, 1.0 - pi)
    ll1 = 0.0
    if n00 + n01 > 0:
        pi01 = n01 / (n00 + n01)
        ll1 += _xlogy(n01, pi01) + _xlogy(n00, 1.0 - pi01)
    if n10 + n11 > 0:
        pi11 = n11 / (n10 + n11)
        ll1 += _xlogy(n11, pi11) + _xlogy(n10, 1.0 - pi11)
    lr = max(0.0, 2.0 * (ll1 - ll0))
    return lr, chi2_sf(lr, 1)


def conditional_coverage(hits: np.ndarray, pi0: float) -> tuple[float, float]:
    """Conditional coverage LR (Kupiec + independence) with chi-square(2) p."""
    lr = kupiec_pof(hits, pi0)[0] + christoffersen_ind(hits)[0]
    return lr, chi2_sf(lr, 2)


cc = conditional_coverage


def traffic_light(hits: np.ndarray, block: int = 250) -> list[tuple[int, int, str]]:
    """Regulatory traffic-light zones over non-overlapping blocks.

    Each complete block of `block` forecast days is colored by its hit
    count: green at 4 or fewer, yellow at 5..9, red at 10 or more.  A
    trailing partial block is excluded.  Returns (block_index, count,
    zone) triples.
    """
    h = np.asarray(hits, dtype=bool)
    out = []
    for j in range(h.size // block):
        c = int(h[j * block : (j + 1) * block].sum())
        zone = "green" if c <= 4 else ("yellow" if c <= 9 else "red")
        out.append((j, c, zone))
    return out


def stability_metrics(var_path: np.ndarray) -> dict[str, float]:
    """Smoothness diagnostics of a forecast path.

    change_vol is the standard deviation of day-over-day changes and
    turning_ratio the fraction of consecutive nonzero changes that flip
    sign; stability = 1/(change_vol + 0.1*turning_ratio), infinite for a
    constant path by convention.
    """
    v = np.asarray(var_path, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 forecasts")
    d = np.diff(v)
    var_vol = float(np.std(v, ddof=1))
    change_vol = float(np.std(d, ddof=1)) if d.size > 1 else abs(float(d[0]))
    running_max = np.maximum.accumulate(v)
    max_dd = float(np.max(running_max - v))
    signs = np.sign(d)
    signs = signs[signs != 0.0]
    if signs.size >= 2:
        turning = float(np.mean(signs[1:] != signs[:-1]))
    else:
        turning = 0.0
    denom = change_vol + 0.1 * turning
    stability = math.inf if denom == 0.0 else 1.0 / denom
    return {
        "var_vol": var_vol,
        "change_vol": change_vol,
        "max_drawdown": max_dd,
        "turning_ratio": turning,
        "stability": stability,
    }


def extreme_event_scores(
    returns: np.ndarray,
    var_path: np.ndarray,
    episodes: list[tuple[int, int]] | None = None,
    k: int = 10,
) -> list[dict[str, float]]:
    """Forecast adequacy on the k worst losses of each episode.

    Episodes are half-open index ranges into the aligned forecast days;
    None means one episode spanning the whole path.  Per episode, over
    the k most negative returns: fail is the fraction whose loss exceeded
    the forecast magnitude, gap the mean excess loss over those failures
    (0 when none), ratio the mean of min(VaR/loss, 1) on positive
    magnitudes, and score = (1-fail)*ratio clipped to [0, 1].  Episodes
    holding fewer than k losses use all of them; k_used records how many
    entered.
    """
    r = np.asarray(returns, dtype=float)
    v = np.asarray(var_path, dtype=float)
    if r.size != v.size:
        raise ValueError("returns and var_path must align one to one")
    if episodes is None:
        episodes = [(0, r.size)]
    out = []
    for start, stop in episodes:
        start = max(0, int(start))
        stop = min(r.size, int(stop))
        if stop <= start:
            raise ValueError(f"episode ({start}, {stop}) does not intersect the path")
        losses = -r[start:stop]
        vv = v[start:stop]
        order = np.argsort(losses)[::-1]
        pick = order[: min(k, order.size)]
        pick = pick[losses[pick] > 0.0]
        if pick.size == 0:
            out.append({"fail": 0.0, "gap": 0.0, "ratio": 1.0, "score": 1.0, "k_used": 0.0})
            continue
        loss = losses[pick]
        var_mag = np.maximum(-vv[pick], 0.0)
        breached = loss > var_mag
        fail = float(np.mean(breached))
        gap = float(np.mean(loss[breached] - var_mag[breached])) if breached.any() else 0.0
        ratio = float(np.mean(np.minimum(var_mag / loss, 1.0)))
        score = min(1.0, max(0.0, (1.0 - fail) * ratio))
        out.append(
            {"fail": fail, "gap": gap, "ratio": ratio, "score": score, "k_used": float(pick.size)}
        )
    return out


@dataclass(frozen=True)
class BacktestReport:
    """Aggregate calibration and stability metrics for one VaR model."""

    model: str
    tau: float
    window: int
    n_returns: int
    n_forecasts: int
    exceedances: int
    exceedance_rate: float
    pof_lr: float
    pof_p: float
    ind_lr: float
    ind_p: float
    cc_lr: float
    cc_p: float
    n_green: int
    n_yellow: int
    n_red: int
    var_vol: float
    change_vol: float
    max_drawdown: float
    turning_ratio: float
    stability: float
    ee_fail: float
    ee_gap: float
    ee_ratio: float
    ee_score: float
    ee_k: int


def backtest_report(
    returns: np.ndarray,
    tau: float = 0.99,
    window: int = 250,
    model: str = "hs",
    compute_ci: bool = False,
    ci_alpha: float = 0.05,
    k_extreme: int = 10,
) -> tuple[BacktestReport, VarPath]:
    """Run a rolling backtest and assemble the full metric report."""
    path = rolling_var(
        returns, tau=tau, window=window, model=model, compute_ci=compute_ci, ci_alpha=ci_alpha
    )
    r = np.asarray(returns, dtype=float)
    fc_returns = r[path.start :]
    hits = path.hit
    pi0 = 1.0 - tau
    pof_lr, pof_p = kupiec_pof(hits, pi0)
    ind_lr, ind_p = christoffersen_ind(hits)
    cc_lr, cc_p = conditional_coverage(hits, pi0)
    lights = traffic_light(hits)
    stab = stability_metrics(path.var)
    ee = extreme_event_scores(fc_returns, path.var, k=k_extreme)[0]
    zones = [z for _, _, z in lights]
    report = BacktestReport(
        model=model,
        tau=tau,
        window=window,
        n_returns=r.size,
        n_forecasts=hits.size,
        exceedances=int(hits.sum()),
        exceedance_rate=float(hits.mean()),
        pof_lr=pof_lr,
        pof_p=pof_p,
        ind_lr=ind_lr,
        ind_p=ind_p,
        cc_lr=cc_lr,
        cc_p=cc_p,
        n_green=zones.count("green"),
        n_yellow=zones.count("yellow"),
        n_red=zones.count("red"),
        var_vol=stab["var_vol"],
        change_vol=stab["change_vol"],
        max_drawdown=stab["max_drawdown"],
        turning_ratio=stab["turning_ratio"],
        stability=stab["stability"],
        ee_fail=ee["fail"],
        ee_gap=ee["gap"],
        ee_ratio=ee["ratio"],
        ee_score=ee["score"],
        ee_k=int(ee["k_used"]),
    )
    return report, path
