"""Self-normalized saddlepoint inference for sample quantiles.

The package provides p-values and confidence intervals for a population
quantile from the self-normalized score pivot, whose null distribution
is an exact binomial tilt; saddlepoint approximation of the lattice
tails gives near-exact accuracy at small n without resampling.  Also
included: classical and bootstrap baselines, a simulation harness, and
a VaR backtesting toolkit built on the same intervals.
"""

from __future__ import annotations

from ._backtest import (
    BacktestReport,
    VarPath,
    backtest_report,
    cc,
    chi2_sf,
    christoffersen_ind,
    conditional_coverage,
    extreme_event_scores,
    kupiec_pof,
    rolling_var,
    stability_metrics,
    traffic_light,
)
from ._baselines import (
    bca_ci,
    harrell_davis_ci,
    maritz_jarrett_ci,
    m_out_of_n_ci,
    pct_bootstrap_ci,
    smoothed_bootstrap_ci,
    subsample_ci,
    wald_kde_ci,
)
from ._binom import (
    binom_scalars,
    exact_mid_tails,
    exact_tail,
    h_eval,
    h_prime,
    h_second,
    invert_h,
    kl_bernoulli,
)
from ._cgf import CGFValue, cgf_eval, pdet, pdet_pinv, pinv_quadform, tilted_hessian
from ._ci import (
    IntervalResult,
    exact_rank_bounds,
    exact_binomial_ci,
    min_length_bounds,
    min_length_ci,
    quantile_type8,
    smooth_tail_functions,
    snqesa_ci,
    snqesa_disc_ci,
)
from ._scores import ScoreStats, score_path, score_stats
from ._simlab import (
    DGP,
    METHODS,
    SimReport,
    derive_rng,
    derive_rng_tagged,
    interval_score,
    report_csv,
    run_study,
    sample_dgp,
    true_quantile,
)
from ._solver import ConstrainedSolution, SolverConfig, curvature_w, solve_constrained
from ._tails import QuantileSpec, TailResult, directed_tail, two_sided

__version__ = "0.1.0"

__all__ = [
    "BacktestReport",
    "CGFValue",
    "ConstrainedSolution",
    "DGP",
    "IntervalResult",
    "METHODS",
    "QuantileSpec",
    "ScoreStats",
    "SimReport",
    "SolverConfig",
    "TailResult",
    "VarPath",
    "backtest_report",
    "bca_ci",
    "binom_scalars",
    "cc",
    "cgf_eval",
    "chi2_sf",
    "christoffersen_ind",
    "conditional_coverage",
    "curvature_w",
    "derive_rng",
    "derive_rng_tagged",
    "directed_tail",
    "exact_mid_tails",
    "exact_rank_bounds",
    "exact_binomial_ci",
    "exact_tail",
    "extreme_event_scores",
    "h_eval",
    "h_prime",
    "h_second",
    "harrell_davis_ci",
    "interval_score",
    "invert_h",
    "kl_bernoulli",
    "kupiec_pof",
    "m_out_of_n_ci",
    "maritz_jarrett_ci",
    "min_length_bounds",
    "min_length_ci",
    "pdet",
    "pdet_pinv",
    "pct_bootstrap_ci",
    "pinv_quadform",
    "quantile_type8",
    "report_csv",
    "rolling_var",
    "run_study",
    "sample_dgp",
    "score_path",
    "score_stats",
    "smooth_tail_functions",
    "smoothed_bootstrap_ci",
    "snqesa_ci",
    "snqesa_disc_ci",
    "solve_constrained",
    "stability_metrics",
    "subsample_ci",
    "tilted_hessian",
    "traffic_light",
    "true_quantile",
    "two_sided",
    "wald_kde_ci",
]
