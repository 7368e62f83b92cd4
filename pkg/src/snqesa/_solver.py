"""Constrained saddlepoint solver for the self-normalized tilt.

The observed pivot x fixes a curve in the mean space of the summed score
vector: g(s, q) = s - x*sqrt(q + eps) = 0, with eps the same ridge used
by the pivot.  The constrained tilt solves

    F(lam, eta) = 0:   lam = eta * grad_g(n*mu(lam)),
                       g(n*mu(lam)) = 0,

where mu is the per-observation tilted mean.  The score Hessian is rank
one (kappa * v v^T, v = w1 - w0), so the tilted mean depends on lam only
through the scalar zeta = lam . v; the tilted probability is
p = sigmoid(logit(tau) + zeta).  The solver is therefore a damped Newton
drive of the constraint residual along v (step alpha*v with
alpha = -r0 / (n*kappa*|v|^2*gamma), gamma = grad_g . v), safeguarded by
a sign bracket on zeta: the residual has exactly one sign change on the
interior band, and a bisection step replaces any Newton step that leaves
the bracket or fails its backtracking test, so the drive cannot stall
even when gamma passes near zero away from the root (at the root itself
gamma is provably bounded away from zero).  Stationarity is restored
exactly at every iterate: eta matches the v-component of lam and the
v-orthogonal part of lam is replaced by eta * grad_g there (a move that
provably leaves the tilted mean unchanged); the config flag that
disables this correction exposes the stationarity residual it removes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._cgf import tilted_hessian

__all__ = ["SolverConfig", "ConstrainedSolution", "solve_constrained", "curvature_w"]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration caps, damping, and guard thresholds for the tilt solver.

    merit_tol stops on the squared-residual merit; resid_tol on the
    residual sup norm.  Steps shrink by backtrack_factor up to
    max_backtracks times.  p_interior bounds the admissible tilted
    probability band, eta_trust_bound caps the multiplier, and
    degeneracy_delta is the gradient-alignment threshold below which the
    solve is declared degenerate.
    """

    max_iter: int = 100
    merit_tol: float = 1e-20
    resid_tol: float = 1e-10
    backtrack_factor: float = 0.5
    armijo_c1: float = 1e-4
    max_backtracks: int = 10
    z_correction: bool = True
    p_interior: float = 1e-10
    eta_trust_bound: float = 1e8
    degeneracy_delta: float = 1e-10


@dataclass(frozen=True)
class ConstrainedSolution:
    """Solver output: tilt parameters, residuals, and termination status.

    status is 'converged', 'degenerate_fallback' (no admissible root or a
    blown-up multiplier; caller should use an exact or limiting path), or
    'max_iter'.
    """

    lam1: float
    lam2: float
    eta: float
    p: float
    mu_s: float
    mu_q: float
    r0: float
    r1: tuple[float, float]
    gamma: float
    iterations: int
    status: str

    @property
    def tilt(self) -> tuple[float, float]:
        return (self.lam1, self.lam2)

    @property
    def p_hat(self) -> float:
        return self.p

    @property
    def mu_hat(self) -> tuple[float, float]:
        """Constrained mean of the per-observation score, sum scale."""
        return (self.mu_s, self.mu_q)

    @property
    def merit_final(self) -> float:
        return 0.5 * (self.r0**2 + self.r1[0] ** 2 + self.r1[1] ** 2)


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def solve_constrained(
    x: float,
    tau: float,
    n: int,
    ridge_c: float = 0.25,
    config: SolverConfig | None = None,
) -> ConstrainedSolution:
    """Solve the constrained tilt equations for observed pivot x.

    The ridge_c must match the one used to form x so the solution's
    tilted probability reproduces the inverted count fraction exactly.
    """
    cfg = config or SolverConfig()
    eps = ridge_c / math.sqrt(n) if ridge_c > 0.0 else 0.0
    lt = _logit(tau)
    one_m2t = 1.0 - 2.0 * tau

    def at(z: float) -> tuple[float, float, float, float, float]:
        """(r0, p, qbar, gamma, kappa) at tilt coordinate zeta = z."""
        p = _sigmoid(lt + z)
        qbar = n * (tau * tau + p * one_m2t) + eps
        sq = math.sqrt(qbar)
        r0 = n * (tau - p) - x * sq
        gamma = -1.0 - x * one_m2t / (2.0 * sq)
        return r0, p, qbar, gamma, p * (1.0 - p)

    z_lo = _logit(cfg.p_interior) - lt
    z_hi = _logit(1.0 - cfg.p_interior) - lt
    f_lo = at(z_lo)[0]
    f_hi = at(z_hi)[0]

    z = 0.0
    r0, p, qbar, gamma, kappa = at(z)
    status = "max_iter"
    it = 0

    if f_lo < 0.0 or f_hi > 0.0:
        # pivot outside the range representable on the interior band
        status = "degenerate_fallback"
    elif abs(gamma) <= cfg.degeneracy_delta:
        # constraint gradient orthogonal to the feasible direction at the
        # accepted starting iterate
        status = "degenerate_fallback"
    else:
        lo, hi = z_lo, z_hi
        if r0 > 0.0:
            lo = z
        elif r0 < 0.0:
            hi = z
        degenerate = False
        for it in range(1, cfg.max_iter + 1):
            if 0.5 * r0 * r0 <= cfg.merit_tol or abs(r0) <= cfg.resid_tol:
                status = "converged"
                it -= 1
                break
            moved = False
            if abs(gamma) > cfg.degeneracy_delta and kappa > 0.0:
                dz = -r0 / (n * gamma * kappa)
                if lo < z + dz < hi:
                    step = 1.0
                    for _ in range(cfg.max_backtracks + 1):
                        zc = z + step * dz
                        rc, pc, qc, gc, kc = at(zc)
                        if abs(rc) <= (1.0 - cfg.armijo_c1 * step) * abs(r0):
                            z, r0, p, qbar, gamma, kappa = zc, rc, pc, qc, gc, kc
                            moved = True
                            break
                        step *= cfg.backtrack_factor
            if not moved:
                # bisect the sign bracket; adopt the midpoint as the
                # iterate only if it keeps the merit non-increasing
                zm = 0.5 * (lo + hi)
                rm, pm, qm, gm, km = at(zm)
                if abs(rm) <= abs(r0):
                    z, r0, p, qbar, gamma, kappa = zm, rm, pm, qm, gm, km
                    moved = True
                if rm > 0.0:
                    lo = zm
                elif rm < 0.0:
                    hi = zm
                else:
                    z, r0, p, qbar, gamma, kappa = zm, rm, pm, qm, gm, km
                    moved = True
            if moved:
                if r0 > 0.0:
                    lo = z
                elif r0 < 0.0:
                    hi = z
                if abs(gamma) <= cfg.degeneracy_delta:
                    degenerate = True
                    break
        else:
            it = cfg.max_iter
            if 0.5 * r0 * r0 <= cfg.merit_tol or abs(r0) <= cfg.resid_tol:
                status = "converged"
        if degenerate:
            status = "degenerate_fallback"

    # finalize multiplier and the full lam vector from the tilt coordinate
    _, v = tilted_hessian(p, tau)
    nrm2 = v[0] * v[0] + v[1] * v[1]
    sq = math.sqrt(qbar)
    gg = (1.0, -x / (2.0 * sq))
    if abs(gamma) <= cfg.degeneracy_delta:
        eta = 0.0
        if status == "converged":
            status = "degenerate_fallback"
    else:
        eta = z / gamma
        if abs(eta) > cfg.eta_trust_bound:
            status = "degenerate_fallback"
    lam_v = z / nrm2  # v-component coefficient of lam
    if cfg.z_correction:
        g_dot = (gg[0] * v[0] + gg[1] * v[1]) / nrm2
        lam1 = lam_v * v[0] + eta * (gg[0] - g_dot * v[0])
        lam2 = lam_v * v[1] + eta * (gg[1] - g_dot * v[1])
    else:
        lam1 = lam_v * v[0]
        lam2 = lam_v * v[1]
    r1 = (lam1 - eta * gg[0], lam2 - eta * gg[1])
    if status == "converged" and math.hypot(*r1) > cfg.resid_tol and 0.5 * (
        r0 * r0 + r1[0] ** 2 + r1[1] ** 2
    ) > cfg.merit_tol:
        status = "max_iter"  # stationarity not restored (z-correction off)
    mu_s = n * (tau - p)
    mu_q = qbar - eps
    return ConstrainedSolution(
        lam1=lam1,
        lam2=lam2,
        eta=eta,
        p=p,
        mu_s=mu_s,
        mu_q=mu_q,
        r0=r0,
        r1=r1,
        gamma=gamma,
        iterations=it,
        status=status,
    )


def curvature_w(sol: ConstrainedSolution, x_obs: float, tau: float, n: int) -> float:
    """Wald-scale curvature |eta| * sqrt(grad_g^T J_n grad_g) at the solution.

    With the rank-1 Hessian this collapses to |eta| * sqrt(n*kappa) * |gamma|,
    which equals |logit(u_x) - logit(tau)| * sqrt(n*u_x*(1-u_x)) at an
    exact solution.  x_obs fixes the constraint whose gradient enters
    gamma; sol already carries gamma evaluated there, so the value is
    unused in the reduced form.
    """
    del x_obs
    kappa, _ = tilted_hessian(sol.p, tau)
    return abs(sol.eta) * math.sqrt(n * kappa) * abs(sol.gamma)
