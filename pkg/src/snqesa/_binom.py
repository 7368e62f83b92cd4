"""Binomial tilt representation of the self-normalized quantile statistic.

Under the null the count K = #{X_i <= t} is Binomial(n, tau) and the
pivot is a deterministic function of the count fraction u = m/n:

    h(u) = (n*tau - m) / sqrt(m*(1-tau)^2 + (n-m)*tau^2 + eps),  m = n*u,

strictly decreasing in u, so tail probabilities of the pivot are exact
binomial tails evaluated at u_x = h^{-1}(x_obs).  h inverts in closed
form: squaring gives a quadratic in the score sum S = n*tau - m whose
root is selected by sign(x).

The likelihood-ratio and logit scalars of the tilt at u are

    r(u)  = sign(u - tau) * sqrt(2*n*KL(u || tau))
    q(u)  = sign(u - tau) * |logit(u) - logit(tau)| * sqrt(n*u*(1-u))

with KL the Bernoulli Kullback-Leibler divergence.  Exact binomial tails
are computed by log-space pmf recursion from the nearer boundary so no
intermediate underflows.
"""

from __future__ import annotations

import math

from scipy.special import gammaln

__all__ = [
    "h_eval",
    "h_prime",
    "h_second",
    "invert_h",
    "kl_bernoulli",
    "logit",
    "binom_scalars",
    "log_pmf",
    "log_pmf_frac",
    "exact_tail",
    "exact_mid_tails",
]


def logit(u: float) -> float:
    """log(u / (1 - u)); infinite at the endpoints."""
    if u <= 0.0:
        return -math.inf
    if u >= 1.0:
        return math.inf
    return math.log(u) - math.log1p(-u)


def kl_bernoulli(a: float, b: float) -> float:
    """KL divergence of Bernoulli(a) from Bernoulli(b), natural log."""
    if not 0.0 < b < 1.0:
        raise ValueError(f"reference probability must be interior, got {b}")
    if a <= 0.0:
        return -math.log1p(-b)
    if a >= 1.0:
        return -math.log(b)
    d = a - b
    return a * math.log1p(d / b) + (1.0 - a) * math.log1p(-d / (1.0 - b))


def h_eval(u: float, tau: float, n: int, ridge_c: float = 0.25) -> float:
    """Pivot value at count fraction u in (0, 1), including the ridge."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"count fraction must be interior to (0, 1), got {u}")
    eps = ridge_c / math.sqrt(n) if ridge_c > 0.0 else 0.0
    m = n * u
    q = m * (1.0 - tau) ** 2 + (n - m) * tau**2 + eps
    return (n * tau - m) / math.sqrt(q)


def _h_d(u: float, tau: float, n: int, ridge_c: float) -> float:
    """Per-observation denominator d(u) = tau^2 + u*(1-2*tau) + eps/n."""
    eps = ridge_c / math.sqrt(n) if ridge_c > 0.0 else 0.0
    return tau * tau + u * (1.0 - 2.0 * tau) + eps / n


def h_prime(u: float, tau: float, n: int, ridge_c: float = 0.25) -> float:
    """First derivative of h; strictly negative on (0, 1)."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"count fraction must be interior to (0, 1), got {u}")
    d = _h_d(u, tau, n, ridge_c)
    dp = 1.0 - 2.0 * tau
    return -math.sqrt(n) * (d + 0.5 * (tau - u) * dp) / d**1.5


def h_second(u: float, tau: float, n: int, ridge_c: float = 0.25) -> float:
    """Second derivative of h; identically zero at tau = 1/2."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"count fraction must be interior to (0, 1), got {u}")
    d = _h_d(u, tau, n, ridge_c)
    dp = 1.0 - 2.0 * tau
    return math.sqrt(n) * dp * (2.0 * d + 1.5 * (tau - u) * dp) / (2.0 * d**2.5)


def invert_h(x: float, tau: float, n: int, ridge_c: float = 0.25) -> float:
    """Closed-form inverse of h: the count fraction u_x with h(u_x) = x.

    Solves S^2 = x^2 * (n*tau*(1-tau) - S*(1-2*tau) + eps) for the score
    sum S = n*tau - m; the admissible root has sign(S) = sign(x).  The
    result is clamped to the interior guard [1e-12, 1-1e-12]; pivots
    beyond h's range land at the guard.
    """
    lo, hi = 1e-12, 1.0 - 1e-12
    eps = ridge_c / math.sqrt(n) if ridge_c > 0.0 else 0.0
    if x == 0.0:
        return min(hi, max(lo, tau))
    b = x * x * (1.0 - 2.0 * tau)
    c = -(x * x) * (n * tau * (1.0 - tau) + eps)
    disc = b * b - 4.0 * c
    sq = math.sqrt(disc)
    # root selection without cancellation: the two roots multiply to c < 0
    if x > 0.0:
        s = 0.5 * (-b + sq) if b <= 0.0 else -2.0 * c / (b + sq)
    else:
        s = 0.5 * (-b - sq) if b >= 0.0 else 2.0 * c / (sq - b)
    u = (n * tau - s) / n
    return min(hi, max(lo, u))


def binom_scalars(u: float, tau: float, n: int) -> tuple[float, float]:
    """Signed likelihood-ratio and logit-Wald scalars (r, q) of the tilt.

    Both carry sign(u - tau); q is 0 at the endpoints u in {0, 1} only
    when the factor sqrt(n*u*(1-u)) vanishes faster than the logit gap
    diverges, so endpoints return q = +-inf and the caller must route
    boundary counts to the exact path first.
    """
    sign = 0.0 if u == tau else math.copysign(1.0, u - tau)
    r = sign * math.sqrt(2.0 * n * kl_bernoulli(u, tau))
    if u <= 0.0 or u >= 1.0:
        return r, sign * math.inf
    q = sign * abs(logit(u) - logit(tau)) * math.sqrt(n * u * (1.0 - u))
    return r, q


def log_pmf(k: int, n: int, u: float) -> float:
    """Exact log Binomial(n, u) pmf at integer count k."""
    if not 0 <= k <= n:
        return -math.inf
    if u <= 0.0:
        return 0.0 if k == 0 else -math.inf
    if u >= 1.0:
        return 0.0 if k == n else -math.inf
    return (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        + k * math.log(u)
        + (n - k) * math.log1p(-u)
    )


def log_pmf_frac(m: float, n: int, u: float) -> float:
    """Gamma-interpolated log pmf at fractional count m in [0, n].

    Coincides with log_pmf at integers; used to interpolate the lattice
    atom when inverting tails over a continuous candidate value.
    """
    if not 0.0 <= m <= n:
        return -math.inf
    if u <= 0.0 or u >= 1.0:
        return log_pmf(int(round(m)), n, u)
    return (
        gammaln(n + 1.0)
        - gammaln(m + 1.0)
        - gammaln(n - m + 1.0)
        + m * math.log(u)
        + (n - m) * math.log1p(-u)
    )


def _sum_lower(n: int, p: float, k: int) -> float:
    """P(K <= k) by downward log-scaled recursion from the k-th term."""
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    lead = log_pmf(k, n, p)
    if lead == -math.inf:
        return 0.0
    acc = 1.0
    term = 1.0
    for j in range(k, 0, -1):
        # pmf(j-1)/pmf(j) = j*(1-p) / ((n-j+1)*p)
        term *= j * (1.0 - p) / ((n - j + 1.0) * p)
        acc += term
        if term < 1e-18 * acc:
            break
    return math.exp(lead + math.log(acc))


def _sum_upper(n: int, p: float, k: int) -> float:
    """P(K >= k) by upward log-scaled recursion from the k-th term."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    lead = log_pmf(k, n, p)
    if lead == -math.inf:
        return 0.0
    acc = 1.0
    term = 1.0
    for j in range(k, n):
        # pmf(j+1)/pmf(j) = (n-j)*p / ((j+1)*(1-p))
        term *= (n - j) * p / ((j + 1.0) * (1.0 - p))
        acc += term
        if term < 1e-18 * acc:
            break
    return math.exp(lead + math.log(acc))


def exact_tail(n: int, tau: float, k: int, direction: str, mode: str = "closed") -> float:
    """Exact Binomial(n, tau) tail at integer count k.

    direction 'le' sums small counts, 'ge' large counts; mode is 'closed'
    (includes the atom), 'open' (excludes it), or 'mid' (half the atom).
    The recursion runs from whichever side keeps terms decreasing, with
    the complement used otherwise, so the result is accurate in both
    deep-tail and bulk regimes.
    """
    if direction not in ("le", "ge"):
        raise ValueError(f"direction must be 'le' or 'ge', got {direction!r}")
    if mode not in ("closed", "open", "mid"):
        raise ValueError(f"mode must be closed/open/mid, got {mode!r}")
    atom = math.exp(log_pmf(k, n, tau)) if 0 <= k <= n else 0.0
    mode_shift = {"closed": 0.0, "open": -atom, "mid": -0.5 * atom}[mode]
    mean = n * tau
    if direction == "le":
        closed = _sum_lower(n, tau, k) if k <= mean else 1.0 - _sum_upper(n, tau, k + 1)
    else:
        closed = _sum_upper(n, tau, k) if k >= mean else 1.0 - _sum_lower(n, tau, k - 1)
    return min(1.0, max(0.0, closed + mode_shift))


def exact_mid_tails(n: int, tau: float, k: int) -> tuple[float, float]:
    """Exact mid-p pair (P(K<k) + atom/2, P(K>k) + atom/2); sums to 1."""
    down = exact_tail(n, tau, k, "le", "mid")
    return down, 1.0 - down
