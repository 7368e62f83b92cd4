"""Cumulant generating function of the two-point quantile score vector.

Each observation contributes W_i = (psi, psi^2) where psi is the quantile
score, so W_i takes exactly two values:

    w1 = (tau - 1, (1 - tau)**2)   with probability tau     (X_i <= t)
    w0 = (tau,      tau**2)        with probability 1 - tau

under the null that t is the tau-quantile.  All cumulant quantities are
closed-form in the tilted Bernoulli probability

    p(lam) = tau * e^A / (tau * e^A + (1 - tau) * e^B),

with A = lam1*(tau-1) + lam2*(1-tau)^2 and B = lam1*tau + lam2*tau^2
evaluated in log-sum-exp form.  The Hessian is the rank-1 matrix
kappa * v v^T with kappa = p(1-p) and v = w1 - w0 = (-1, 1 - 2*tau),
hence pseudo-determinant and pseudo-inverse are explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "CGFValue",
    "cgf_eval",
    "tilted_hessian",
    "pdet",
    "pdet_pinv",
    "pinv_quadform",
    "score_support",
]

P_CLAMP = 1e-10


@dataclass(frozen=True)
class CGFValue:
    """CGF value, gradient (= tilted mean), and tilted Bernoulli probability.

    p is kept interior to [P_CLAMP, 1 - P_CLAMP]; clamped records whether
    the raw tilted probability fell outside that band.  kappa = p*(1-p)
    and v are the rank-1 Hessian factors (Hessian = kappa * v v^T).
    """

    value: float
    mean: tuple[float, float]
    p: float
    kappa: float
    v: tuple[float, float]
    clamped: bool = False


def score_support(tau: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Return (w1, w0), the two support points of the score vector."""
    return (tau - 1.0, (1.0 - tau) ** 2), (tau, tau**2)


def cgf_eval(lam1: float, lam2: float, tau: float) -> CGFValue:
    """Evaluate the per-observation CGF, its gradient, and the tilted p.

    Stable for large |lam| through the log-sum-exp shift; p is the
    conditional weight of the w1 branch under the exponential tilt.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    a = lam1 * (tau - 1.0) + lam2 * (1.0 - tau) ** 2
    b = lam1 * tau + lam2 * tau**2
    m = a if a > b else b
    ea = tau * math.exp(a - m)
    eb = (1.0 - tau) * math.exp(b - m)
    z = ea + eb
    value = m + math.log(z)
    p = ea / z
    clamped = not P_CLAMP <= p <= 1.0 - P_CLAMP
    if clamped:
        p = min(1.0 - P_CLAMP, max(P_CLAMP, p))
    mean = (tau - p, tau**2 + p * (1.0 - 2.0 * tau))
    kappa, v = tilted_hessian(p, tau)
    return CGFValue(value=value, mean=mean, p=p, kappa=kappa, v=v, clamped=clamped)


def tilted_hessian(p: float, tau: float) -> tuple[float, tuple[float, float]]:
    """Rank-1 Hessian factorization kappa * v v^T of the per-observation CGF.

    Returns (kappa, v) with kappa = p*(1-p) and v = (-1, 1 - 2*tau).
    """
    return p * (1.0 - p), (-1.0, 1.0 - 2.0 * tau)


def pdet(p: float, tau: float, n: int = 1) -> float:
    """Pseudo-determinant of the (n-scaled) rank-1 Hessian: n*kappa*|v|^2."""
    kappa, v = tilted_hessian(p, tau)
    return n * kappa * (v[0] ** 2 + v[1] ** 2)


def pdet_pinv(moments: CGFValue, n: int):
    """Pseudo-determinant and generalized-inverse quadratic form at a tilt.

    Returns (pdet, quadform): pdet = n*kappa*|v|^2 for the n-scaled
    Hessian, while quadform maps a 2-vector g to the per-observation
    g^T Sigma^+ g = (g.v)^2 / (kappa*|v|^4).
    """
    kappa, v = moments.kappa, moments.v
    nrm2 = v[0] ** 2 + v[1] ** 2
    if kappa <= 0.0:
        raise ZeroDivisionError("degenerate tilt: p at the boundary")

    def quadform(g: tuple[float, float]) -> float:
        dot = g[0] * v[0] + g[1] * v[1]
        return dot * dot / (kappa * nrm2 * nrm2)

    return n * kappa * nrm2, quadform


def pinv_quadform(g1: float, g2: float, p: float, tau: float, n: int = 1) -> float:
    """Quadratic form g^T J^+ g for the rank-1 Hessian J = n*kappa*v v^T.

    J^+ = v v^T / (n * kappa * |v|^4), so the form is
    (g . v)^2 / (n * kappa * |v|^4).  Raises ZeroDivisionError for a
    degenerate tilt (p at 0 or 1).
    """
    kappa, v = tilted_hessian(p, tau)
    nrm2 = v[0] ** 2 + v[1] ** 2
    if kappa <= 0.0:
        raise ZeroDivisionError("degenerate tilt: p at the boundary")
    dot = g1 * v[0] + g2 * v[1]
    return dot * dot / (n * kappa * nrm2 * nrm2)
