"""Directed tail probabilities for the self-normalized quantile pivot.

The pivot maps monotonically to the count K = #{X_i <= t}, so directed
p-values are binomial tail probabilities.  The engine approximates them
with the saddlepoint pair (r, q) of the binomial tilt:

    r = sign(u - tau) * sqrt(2*n*KL(u || tau))        likelihood root
    W = 2*sinh(theta/2) * sqrt(n*u*(1-u))             lattice Wald scale

with theta = |logit(u) - logit(tau)|.  Near the Wald/root crossover the
adjusted root Phi(-(R + log(W/R)/R)) is used; far from it the additive
Lugannani-Rice form Phi(-R) + phi(R)*(1/W - 1/R) is numerically safer.
Lattice handling follows the selected mode: the default mid-p rule
evaluates the continuous tail half a count outward and adds half the
exact lattice atom, making p_down + p_up = 1 an identity.

Boundary counts (0 or n) and roots below ``r_floor`` are routed to exact
binomial summation, where the continuous approximation degrades.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._binom import (
    binom_scalars,
    exact_tail,
    invert_h,
    kl_bernoulli,
    log_pmf,
    logit,
)
from ._scores import ScoreStats
from ._solver import ConstrainedSolution, SolverConfig, curvature_w, solve_constrained

__all__ = [
    "QuantileSpec",
    "TailResult",
    "sp_open_tail",
    "continuous_cdf",
    "directed_tail",
    "two_sided",
]

_LATTICE_MODES = ("midp", "cornish_fisher", "none")


@dataclass(frozen=True)
class QuantileSpec:
    """Inference settings shared across tail and interval computations.

    c0 is the log-ratio half-width |log(r/w)| within which the adjusted
    root branch is used; r_floor routes near-central roots to exact
    summation.  lattice_mode selects the lattice correction: 'midp'
    (half-atom, default), 'cornish_fisher' (half-count shift, no atom),
    or 'none' (closed tails, conservative).
    """

    tau: float
    alpha: float = 0.05
    ridge_c: float = 0.25
    lattice_mode: str = "midp"
    c0: float = 2.0
    r_floor: float = 1e-4
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.ridge_c < 0.0:
            raise ValueError("ridge_c must be >= 0")
        if self.lattice_mode not in _LATTICE_MODES:
            raise ValueError(f"lattice_mode must be one of {_LATTICE_MODES}")
        if self.c0 <= 0.0:
            raise ValueError("c0 must be positive")
        if self.r_floor < 0.0:
            raise ValueError("r_floor must be >= 0")


@dataclass(frozen=True)
class TailResult:
    """Directed tail probabilities and the scalars behind them.

    p_down is the probability of counts at or below the observed one
    (small when the candidate value sits below the quantile); p_up the
    mirror tail; p_dir the tail in the direction of the observed
    deviation.  Signed scalars r, q_pm, r_star carry sign(u_x - tau); w
    is the curvature scale from the constrained solver.  branch records
    which formula produced the directed side: 'rstar', 'lr', or
    'binom_fallback' (exact binomial summation at boundary or
    near-central counts and on solver degeneracy).
    """

    p_down: float
    p_up: float
    p_two_sided: float
    p_dir: float
    r: float
    q_pm: float
    w: float
    r_star: float
    branch: str
    u_x: float
    x: float
    k: int
    n: int
    tau: float
    lattice_mode: str
    near_lattice: bool
    solver_status: str
    solver_iterations: int


def _phi_neg(z: float) -> float:
    """Standard normal survival at z, i.e. Phi(-z), via erfc."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _phi_dens(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def sp_open_tail(u: float, tau: float, n: int, c0: float = 2.0) -> tuple[float, str]:
    """Outward continuous tail content at count fraction u, with branch tag.

    Approximates P(K/n outward of u) on u's side of tau.  Returns 0.5 at
    u = tau (both tails meet there).  u is clamped away from {0, 1}; exact
    routing of boundary counts happens before this call.
    """
    u = min(1.0 - 1e-12, max(1e-12, u))
    theta = abs(logit(u) - logit(tau))
    big_r = math.sqrt(2.0 * n * kl_bernoulli(u, tau))
    if big_r < 1e-12 or theta == 0.0:
        return 0.5, "rstar"
    sigma = math.sqrt(n * u * (1.0 - u))
    big_w = 2.0 * math.sinh(0.5 * theta) * sigma
    if abs(math.log(big_r / big_w)) <= c0:
        return _phi_neg(big_r + math.log(big_w / big_r) / big_r), "rstar"
    return _phi_neg(big_r) + _phi_dens(big_r) * (1.0 / big_w - 1.0 / big_r), "lr"


def continuous_cdf(m: float, tau: float, n: int, c0: float = 2.0) -> tuple[float, str]:
    """Continuous-scale approximation of P(K <= m) for real m in [0, n]."""
    u = m / n
    if u < tau:
        p, branch = sp_open_tail(u, tau, n, c0)
        return p, branch
    p, branch = sp_open_tail(u, tau, n, c0)
    return 1.0 - p, branch


def _lattice_tails(
    k: int, n: int, tau: float, low_side: bool, mode: str, c0: float
) -> tuple[float, float, str]:
    """Directed pair (p_down, p_up) at an integer count under a lattice mode.

    The outward (small) side is computed directly; the other side is its
    complement under 'midp'/'cornish_fisher', or carries the full atom
    under 'none' so both tails are closed.
    """
    atom = math.exp(log_pmf(k, n, tau))
    if mode == "midp":
        if low_side:
            below, branch = continuous_cdf(k - 0.5, tau, n, c0)
            p_down = below + 0.5 * atom
            return p_down, 1.0 - p_down, branch
        above_cdf, branch = continuous_cdf(k + 0.5, tau, n, c0)
        p_up = (1.0 - above_cdf) + 0.5 * atom
        return 1.0 - p_up, p_up, branch
    if mode == "cornish_fisher":
        if low_side:
            p_down, branch = continuous_cdf(k + 0.5, tau, n, c0)
            return p_down, 1.0 - p_down, branch
        cdf_val, branch = continuous_cdf(k - 0.5, tau, n, c0)
        p_up = 1.0 - cdf_val
        return 1.0 - p_up, p_up, branch
    # closed tails: each side includes the full atom, sum = 1 + atom
    if low_side:
        below, branch = continuous_cdf(k - 0.5, tau, n, c0)
        return below + atom, 1.0 - below, branch
    above_cdf, branch = continuous_cdf(k + 0.5, tau, n, c0)
    return above_cdf, (1.0 - above_cdf) + atom, branch


def _exact_pair(k: int, n: int, tau: float, mode: str) -> tuple[float, float]:
    """Exact tail pair under the lattice mode, for boundary/near-center counts."""
    if mode == "midp":
        down = exact_tail(n, tau, k, "le", "mid")
        return down, 1.0 - down
    if mode == "cornish_fisher":
        # half-count shift has no exact meaning on the lattice; mid-p is
        # the unbiased exact analogue
        down = exact_tail(n, tau, k, "le", "mid")
        return down, 1.0 - down
    return exact_tail(n, tau, k, "le", "closed"), exact_tail(n, tau, k, "ge", "closed")


def directed_tail(stats: ScoreStats, spec: QuantileSpec) -> TailResult:
    """Tail probabilities of the observed pivot under the quantile null.

    Runs the constrained solver at the observed pivot for the curvature
    scale w, computes the signed saddlepoint scalars at u_x, and evaluates
    the lattice-corrected tail pair.  Exact summation replaces the
    approximation at boundary counts and when |r| < r_floor.
    """
    n, k, x, tau = stats.n, stats.k, stats.x, stats.tau
    if tau != spec.tau:
        raise ValueError(f"score statistics were built at tau={tau}, spec has tau={spec.tau}")
    u_x = invert_h(x, tau, n, spec.ridge_c)
    near_lattice = abs(n * u_x - k) <= 1e-6
    r, q = binom_scalars(u_x, tau, n)

    sol = solve_constrained(x, tau, n, spec.ridge_c, spec.solver)
    if sol.status == "converged" and 0.0 < sol.p < 1.0:
        w = curvature_w(sol, x, tau, n)
    else:
        w = abs(q)

    if abs(r) >= spec.r_floor and 0 < k < n and w > 0.0 and math.isfinite(w):
        r_star = math.copysign(abs(r) + math.log(w / abs(r)) / abs(r), r)
    else:
        r_star = r

    if k <= 0 or k >= n or abs(r) < spec.r_floor:
        p_down, p_up = _exact_pair(k, n, tau, spec.lattice_mode)
        branch = "binom_fallback"
    else:
        low_side = u_x < tau
        p_down, p_up, branch = _lattice_tails(k, n, tau, low_side, spec.lattice_mode, spec.c0)

    p_down = min(1.0, max(0.0, p_down))
    p_up = min(1.0, max(0.0, p_up))
    p_two = min(1.0, 2.0 * min(p_down, p_up))
    # the directed tail follows the deviation: large pivot (count below
    # n*tau) points down, small pivot points up
    p_dir = p_down if u_x < tau else p_up if u_x > tau else min(p_down, p_up)
    return TailResult(
        p_down=p_down,
        p_up=p_up,
        p_two_sided=p_two,
        p_dir=p_dir,
        r=r,
        q_pm=q,
        w=w,
        r_star=r_star,
        branch=branch,
        u_x=u_x,
        x=x,
        k=k,
        n=n,
        tau=tau,
        lattice_mode=spec.lattice_mode,
        near_lattice=near_lattice,
        solver_status=sol.status,
        solver_iterations=sol.iterations,
    )


def two_sided(stats: ScoreStats, spec: QuantileSpec) -> float:
    """Two-sided p-value: twice the smaller directed tail, capped at 1."""
    return directed_tail(stats, spec).p_two_sided
