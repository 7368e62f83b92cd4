"""Coverage simulation harness for quantile interval methods.

Sampling discipline: one master seed; replication r draws its sample
from a stream derived as SeedSequence(master, spawn_key=(r,)), and each
method resamples (when it needs randomness) from
SeedSequence(master, spawn_key=(r, crc32(tag))).  Every method therefore
sees the same sample, replications are independent, and results are
byte-identical for a fixed seed regardless of execution order or thread
count: per-replication records land in a buffer indexed by r and the
reduction is a deterministic pass in r order.

All families are sampled by inverse CDF applied to uniform draws, so a
family's stream alignment is exact and distribution changes never shift
the underlying uniforms.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import betaincinv, ndtr, ndtri, stdtrit

from ._baselines import (
    bca_ci,
    harrell_davis_ci,
    m_out_of_n_ci,
    maritz_jarrett_ci,
    pct_bootstrap_ci,
    smoothed_bootstrap_ci,
    subsample_ci,
    wald_kde_ci,
)
from ._ci import IntervalResult, exact_binomial_ci, min_length_ci, snqesa_ci, snqesa_disc_ci
from ._tails import QuantileSpec

__all__ = [
    "DGP",
    "SimReport",
    "METHODS",
    "true_quantile",
    "sample_dgp",
    "derive_rng",
    "derive_rng_tagged",
    "run_study",
    "interval_score",
    "report_csv",
]

_FAMILIES = (
    "normal",
    "lognormal",
    "student_t",
    "cauchy",
    "beta",
    "exponential",
    "normal_mixture",
)

_DEFAULT_PARAMS: dict[str, tuple[float, ...]] = {
    "normal": (0.0, 1.0),
    "lognormal": (0.0, 1.0),
    "student_t": (3.0,),
    "cauchy": (0.0, 1.0),
    "beta": (2.0, 2.0),
    "exponential": (1.0,),
    "normal_mixture": (0.5, -1.0, 1.0, 0.5, 1.0, 1.0),
}


@dataclass(frozen=True)
class DGP:
    """A named data-generating process with positional parameters.

    normal(loc, scale), lognormal(mu, sigma), student_t(df),
    cauchy(loc, scale), beta(a, b), exponential(rate), and
    normal_mixture(w1, m1, s1, w2, m2, s2, ...) as weight/mean/sd triples
    (weights are renormalized).
    """

    family: str
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {_FAMILIES}")
        if not self.params:
            object.__setattr__(self, "params", _DEFAULT_PARAMS[self.family])
        p = self.params
        if self.family == "student_t" and p[0] <= 0:
            raise ValueError("student_t needs df > 0")
        if self.family == "beta" and (len(p) != 2 or p[0] <= 0 or p[1] <= 0):
            raise ValueError("beta needs two positive shape parameters")
        if self.family == "exponential" and p[0] <= 0:
            raise ValueError("exponential needs rate > 0")
        if self.family == "normal_mixture":
            if len(p) % 3 != 0 or len(p) == 0:
                raise ValueError("normal_mixture needs weight/mean/sd triples")
            if any(p[3 * i] <= 0 for i in range(len(p) // 3)):
                raise ValueError("mixture weights must be positive")
            if any(p[3 * i + 2] <= 0 for i in range(len(p) // 3)):
                raise ValueError("mixture sds must be positive")

    @classmethod
    def parse(cls, text: str) -> "DGP":
        """Parse 'family' or 'family(p1,p2,...)' into a DGP."""
        text = text.strip()
        if "(" in text:
            name, _, rest = text.partition("(")
            rest = rest.rstrip()
            if not rest.endswith(")"):
                raise ValueError(f"unbalanced parentheses in DGP {text!r}")
            body = rest[:-1].strip()
            params = tuple(float(tok) for tok in body.split(",")) if body else ()
            return cls(name.strip(), params)
        return cls(text)

    def _mixture_triples(self) -> list[tuple[float, float, float]]:
        p = self.params
        triples = [(p[3 * i], p[3 * i + 1], p[3 * i + 2]) for i in range(len(p) // 3)]
        total = sum(w for w, _, _ in triples)
        return [(w / total, m, s) for w, m, s in triples]


def true_quantile(dgp: DGP, tau: float) -> float:
    """Population tau-quantile of the DGP, closed form where available.

    The mixture quantile is found by Brent's method on the mixture CDF
    inside a geometrically expanded bracket around the component means;
    the (never expected) expansion failure falls back to a 10^7-draw
    Monte Carlo quantile.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    p = dgp.params
    if dgp.family == "normal":
        return p[0] + p[1] * float(ndtri(tau))
    if dgp.family == "lognormal":
        return math.exp(p[0] + p[1] * float(ndtri(tau)))
    if dgp.family == "student_t":
        return float(stdtrit(p[0], tau))
    if dgp.family == "cauchy":
        return p[0] + p[1] * math.tan(math.pi * (tau - 0.5))
    if dgp.family == "beta":
        return float(betaincinv(p[0], p[1], tau))
    if dgp.family == "exponential":
        return -math.log1p(-tau) / p[0]
    triples = dgp._mixture_triples()

    def cdf(x: float) -> float:
        return sum(w * float(ndtr((x - m) / s)) for w, m, s in triples)

    lo = min(m for _, m, _ in triples) - 1.0
    hi = max(m for _, m, _ in triples) + 1.0
    span = max(hi - lo, 1.0)
    for _ in range(200):
        if cdf(lo) < tau < cdf(hi):
            return float(brentq(lambda x: cdf(x) - tau, lo, hi, xtol=1e-12, rtol=1e-14))
        lo -= span
        hi += span
        span *= 2.0
    draws = sample_dgp(dgp, 10**7, np.random.default_rng(0))
    return float(np.quantile(draws, tau, method="median_unbiased"))


def sample_dgp(dgp: DGP, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n observations by inverse CDF on the generator's uniforms."""
    p = dgp.params
    if dgp.family == "normal_mixture":
        u_pick, u_val = rng.random(n), rng.random(n)
        triples = dgp._mixture_triples()
        cuts = np.cumsum([w for w, _, _ in triples])
        comp = np.searchsorted(cuts, u_pick, side="right")
        comp = np.minimum(comp, len(triples) - 1)
        means = np.array([m for _, m, _ in triples])[comp]
        sds = np.array([s for _, _, s in triples])[comp]
        return means + sds * ndtri(u_val)
    u = rng.random(n)
    if dgp.family == "normal":
        return p[0] + p[1] * ndtri(u)
    if dgp.family == "lognormal":
        return np.exp(p[0] + p[1] * ndtri(u))
    if dgp.family == "student_t":
        return np.asarray(stdtrit(p[0], u), dtype=float)
    if dgp.family == "cauchy":
        return p[0] + p[1] * np.tan(np.pi * (u - 0.5))
    if dgp.family == "beta":
        return np.asarray(betaincinv(p[0], p[1], u), dtype=float)
    return -np.log1p(-u) / p[0]


def derive_rng(master: int, r: int) -> np.random.Generator:
    """Replication-r sample stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master, spawn_key=(r,))))


def derive_rng_tagged(master: int, r: int, tag: str) -> np.random.Generator:
    """Method-tagged resampling stream for replication r."""
    key = zlib.crc32(tag.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master, spawn_key=(r, key))))


METHODS: dict[str, object] = {
    "snqesa": lambda xs, spec, rng, nb: snqesa_ci(xs, spec),
    "snqesa_disc": lambda xs, spec, rng, nb: snqesa_disc_ci(xs, spec),
    "snqesa_min": lambda xs, spec, rng, nb: min_length_ci(xs, spec),
    "exact": lambda xs, spec, rng, nb: exact_binomial_ci(xs, spec),
    "pctboot": lambda xs, spec, rng, nb: pct_bootstrap_ci(xs, spec, rng, nb),
    "bca": lambda xs, spec, rng, nb: bca_ci(xs, spec, rng, nb),
    "smboot": lambda xs, spec, rng, nb: smoothed_bootstrap_ci(xs, spec, rng, nb),
    "subsample": lambda xs, spec, rng, nb: subsample_ci(xs, spec, rng, nb),
    "moutofn": lambda xs, spec, rng, nb: m_out_of_n_ci(xs, spec, rng, nb),
    "waldkde": lambda xs, spec, rng, nb: wald_kde_ci(xs, spec, rng, nb),
    "hd": lambda xs, spec, rng, nb: harrell_davis_ci(xs, spec, rng, nb),
    "mj": lambda xs, spec, rng, nb: maritz_jarrett_ci(xs, spec, rng, nb),
}


def interval_score(lower: float, upper: float, theta: float, alpha: float) -> float:
    """Winkler interval score; NaN (missing) when an endpoint is infinite."""
    if not (math.isfinite(lower) and math.isfinite(upper)):
        return math.nan
    return (upper - lower) + (2.0 / alpha) * max(lower - theta, 0.0) + (2.0 / alpha) * max(
        theta - upper, 0.0
    )


@dataclass(frozen=True)
class SimReport:
    """One method's aggregate row for a simulation study."""

    method: str
    coverage: float
    se_cov: float
    mean_len: float
    med_len: float
    mean_time_s: float
    mean_bias: float
    med_bias: float
    rmse_bias: float
    mean_is: float
    med_is: float
    fail_rate: float


@dataclass
class _Cell:
    covered: bool = False
    length: float = math.nan
    bias: float = math.nan
    score: float = math.nan
    seconds: float = 0.0
    failed: bool = False


def _run_replication(
    r: int,
    dgp: DGP,
    spec: QuantileSpec,
    n: int,
    methods: list[str],
    master: int,
    theta: float,
    n_boot: int,
    timing: bool,
) -> dict[str, _Cell]:
    xs = sample_dgp(dgp, n, derive_rng(master, r))
    out: dict[str, _Cell] = {}
    for name in methods:
        cell = _Cell()
        try:
            rng = derive_rng_tagged(master, r, name)
            t0 = time.perf_counter()
            res: IntervalResult = METHODS[name](xs, spec, rng, n_boot)
            if timing:
                cell.seconds = time.perf_counter() - t0
            if not (math.isnan(res.lower) or math.isnan(res.upper)):
                cell.covered = res.lower <= theta <= res.upper
                if math.isfinite(res.lower) and math.isfinite(res.upper):
                    cell.length = res.upper - res.lower
                    cell.score = interval_score(res.lower, res.upper, theta, spec.alpha)
                cell.bias = res.anchor - theta
            else:
                cell.failed = True
        except Exception:
            cell.failed = True
        out[name] = cell
    return out


def run_study(
    dgp: DGP,
    tau: float,
    n: int,
    alpha: float,
    n_rep: int,
    methods: list[str] | None = None,
    seed: int = 0,
    *,
    threads: int = 1,
    n_boot: int = 1000,
    timing: bool = False,
    spec: QuantileSpec | None = None,
) -> list[SimReport]:
    """Monte Carlo coverage study; one aggregate row per method.

    Coverage, lengths, biases, and interval scores aggregate over
    non-failed replications; rows with an open interval end contribute to
    coverage but are excluded from length and score summaries.  fail_rate
    is the fraction of replications where the method raised or returned
    NaN.  mean_time_s is zero unless timing is requested, keeping default
    output byte-stable across machines and runs.
    """
    if methods is None:
        methods = list(METHODS)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {unknown}")
    the_spec = spec or QuantileSpec(tau=tau, alpha=alpha)
    theta = true_quantile(dgp, tau)

    cells: list[dict[str, _Cell] | None] = [None] * n_rep

    def job(r: int) -> None:
        cells[r] = _run_replication(
            r, dgp, the_spec, n, methods, seed, theta, n_boot, timing
        )

    if threads <= 1:
        for r in range(n_rep):
            job(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(job, range(n_rep)))

    reports = []
    for name in methods:
        rows = [cells[r][name] for r in range(n_rep)]  # type: ignore[index]
        ok = [c for c in rows if not c.failed]
        n_ok = len(ok)
        fails = n_rep - n_ok
        if n_ok == 0:
            reports.append(
                SimReport(name, math.nan, math.nan, math.nan, math.nan, 0.0, math.nan, math.nan, math.nan, math.nan, math.nan, 1.0)
            )
            continue
        cov = sum(c.covered for c in ok) / n_ok
        lens = np.array([c.length for c in ok if math.isfinite(c.length)])
        biases = np.array([c.bias for c in ok if not math.isnan(c.bias)])
        scores = np.array([c.score for c in ok if math.isfinite(c.score)])
        reports.append(
            SimReport(
                method=name,
                coverage=cov,
                se_cov=math.sqrt(cov * (1.0 - cov) / n_rep),
                mean_len=float(np.mean(lens)) if lens.size else math.nan,
                med_len=float(np.median(lens)) if lens.size else math.nan,
                mean_time_s=float(np.mean([c.seconds for c in ok])) if timing else 0.0,
                mean_bias=float(np.mean(biases)) if biases.size else math.nan,
                med_bias=float(np.median(biases)) if biases.size else math.nan,
                rmse_bias=float(np.sqrt(np.mean(biases**2))) if biases.size else math.nan,
                mean_is=float(np.mean(scores)) if scores.size else math.nan,
                med_is=float(np.median(scores)) if scores.size else math.nan,
                fail_rate=fails / n_rep,
            )
        )
    return reports


_CSV_HEADER = (
    "method,coverage,se_cov,mean_len,med_len,mean_time_s,"
    "mean_bias,med_bias,rmse_bias,mean_IS,med_IS,fail_rate"
)


def report_csv(reports: list[SimReport]) -> str:
    """Render study rows as CSV with full float precision (17 significant digits)."""
    lines = [_CSV_HEADER]
    for r in reports:
        vals = [
            r.coverage,
            r.se_cov,
            r.mean_len,
            r.med_len,
            r.mean_time_s,
            r.mean_bias,
            r.med_bias,
            r.rmse_bias,
            r.mean_is,
            r.med_is,
            r.fail_rate,
        ]
        lines.append(r.method + "," + ",".join(f"{v:.17g}" for v in vals))
    return "\n".join(lines) + "\n"
