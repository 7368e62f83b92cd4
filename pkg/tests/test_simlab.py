"""Simulation harness: DGP quantiles, stream discipline, study aggregation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr

from snqesa import (
    DGP,
    METHODS,
    derive_rng,
    derive_rng_tagged,
    exact_rank_bounds,
    interval_score,
    report_csv,
    run_study,
    sample_dgp,
    true_quantile,
)
from snqesa._simlab import _CSV_HEADER

from _oracles import mixture_quantile


# --- true_quantile ----------------------------------------------------------


def test_true_quantile_closed_forms_match_scipy():
    cases = [
        (DGP("normal", (0.5, 2.0)), stats.norm(0.5, 2.0)),
        (DGP("lognormal", (0.2, 0.7)), stats.lognorm(0.7, scale=math.exp(0.2))),
        (DGP("student_t", (3.0,)), stats.t(3.0)),
        (DGP("cauchy", (1.0, 0.5)), stats.cauchy(1.0, 0.5)),
        (DGP("beta", (2.0, 5.0)), stats.beta(2.0, 5.0)),
        (DGP("exponential", (1.5,)), stats.expon(scale=1.0 / 1.5)),
    ]
    for dgp, dist in cases:
        for tau in (0.05, 0.25, 0.5, 0.9, 0.99):
            assert true_quantile(dgp, tau) == pytest.approx(
                float(dist.ppf(tau)), rel=1e-10, abs=1e-12
            )


def test_true_quantile_exponential_frozen():
    assert true_quantile(DGP("exponential", (1.0,)), 0.95) == pytest.approx(
        2.995732273553991, abs=1e-14
    )


def test_true_quantile_mixture_frozen_and_vs_brentq_oracle():
    dgp = DGP("normal_mixture", (0.3, -2.0, 0.5, 0.7, 1.0, 2.0))
    got = true_quantile(dgp, 0.6)
    assert got == pytest.approx(0.6399754014975748, abs=1e-10)
    oracle = mixture_quantile([0.3, 0.7], [-2.0, 1.0], [0.5, 2.0], 0.6)
    assert got == pytest.approx(oracle, abs=1e-10)


def test_true_quantile_default_mixture_median_is_zero():
    assert true_quantile(DGP("normal_mixture"), 0.5) == pytest.approx(0.0, abs=1e-10)


def test_mixture_weights_renormalized():
    a = true_quantile(DGP("normal_mixture", (3.0, -1.0, 1.0, 7.0, 1.0, 2.0)), 0.3)
    b = true_quantile(DGP("normal_mixture", (0.3, -1.0, 1.0, 0.7, 1.0, 2.0)), 0.3)
    assert a == pytest.approx(b, abs=1e-12)


def test_true_quantile_rejects_boundary_tau():
    for tau in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            true_quantile(DGP("normal"), tau)


# --- DGP construction -------------------------------------------------------


def test_dgp_parse_forms():
    assert DGP.parse("normal") == DGP("normal", (0.0, 1.0))
    assert DGP.parse("exponential(2.5)") == DGP("exponential", (2.5,))
    assert DGP.parse(" cauchy ( 1 , 2 ) ") == DGP("cauchy", (1.0, 2.0))
    assert DGP.parse("normal_mixture(1,0,1)") == DGP("normal_mixture", (1.0, 0.0, 1.0))


def test_dgp_validation_errors():
    with pytest.raises(ValueError):
        DGP("weibull")
    with pytest.raises(ValueError):
        DGP("student_t", (0.0,))
    with pytest.raises(ValueError):
        DGP("beta", (1.0,))
    with pytest.raises(ValueError):
        DGP("exponential", (-1.0,))
    with pytest.raises(ValueError):
        DGP("normal_mixture", (0.5, 0.0))
    with pytest.raises(ValueError):
        DGP("normal_mixture", (0.5, 0.0, -1.0))
    with pytest.raises(ValueError):
        DGP.parse("normal(1,2")


# --- sampling ---------------------------------------------------------------


@pytest.mark.parametrize(
    "dgp,cdf",
    [
        (DGP("normal"), stats.norm().cdf),
        (DGP("lognormal"), stats.lognorm(1.0).cdf),
        (DGP("student_t", (3.0,)), stats.t(3.0).cdf),
        (DGP("cauchy"), stats.cauchy().cdf),
        (DGP("beta", (2.0, 2.0)), stats.beta(2.0, 2.0).cdf),
        (DGP("exponential", (1.5,)), stats.expon(scale=1 / 1.5).cdf),
        (
            DGP("normal_mixture"),
            lambda x: 0.5 * ndtr(x + 1.0) + 0.5 * ndtr(x - 1.0),
        ),
    ],
    ids=lambda v: v.family if isinstance(v, DGP) else "",
)
def test_sample_dgp_distribution(dgp, cdf):
    draws = sample_dgp(dgp, 4000, np.random.default_rng(1234))
    assert stats.kstest(draws, cdf).pvalue > 0.01


def test_sample_dgp_deterministic_per_generator():
    a = sample_dgp(DGP("lognormal"), 10, np.random.default_rng(7))
    b = sample_dgp(DGP("lognormal"), 10, np.random.default_rng(7))
    assert np.array_equal(a, b)


# --- stream derivation ------------------------------------------------------


def test_derive_rng_deterministic_and_distinct():
    a = derive_rng(42, 3).random(4)
    b = derive_rng(42, 3).random(4)
    c = derive_rng(42, 4).random(4)
    d = derive_rng(43, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_derive_rng_tagged_distinct_per_tag_and_from_sample_stream():
    base = derive_rng(0, 5).random(4)
    t1 = derive_rng_tagged(0, 5, "pctboot").random(4)
    t2 = derive_rng_tagged(0, 5, "bca").random(4)
    t1b = derive_rng_tagged(0, 5, "pctboot").random(4)
    assert np.array_equal(t1, t1b)
    assert not np.array_equal(t1, t2)
    assert not np.array_equal(t1, base)


# --- interval score ---------------------------------------------------------


def test_interval_score_frozen_values():
    assert interval_score(0.0, 1.0, 0.5, 0.1) == 1.0
    assert interval_score(0.0, 1.0, 2.0, 0.1) == pytest.approx(21.0, abs=1e-12)
    assert interval_score(0.0, 1.0, -0.5, 0.1) == pytest.approx(11.0, abs=1e-12)
    assert math.isnan(interval_score(-math.inf, 1.0, 0.0, 0.1))
    assert math.isnan(interval_score(0.0, math.inf, 0.0, 0.1))


# --- run_study --------------------------------------------------------------


def test_single_replication_coverage_binary():
    rows = run_study(DGP("normal"), 0.5, 30, 0.1, 1, methods=["exact"], seed=5)
    assert rows[0].coverage in (0.0, 1.0)
    assert rows[0].fail_rate == 0.0


def test_small_study_rows_and_se_formula():
    methods = ["exact", "pctboot", "mj"]
    rows = run_study(DGP("normal"), 0.5, 40, 0.1, 30, methods=methods, seed=2)
    assert [r.method for r in rows] == methods
    for r in rows:
        assert 0.0 <= r.coverage <= 1.0
        assert r.se_cov == pytest.approx(
            math.sqrt(r.coverage * (1 - r.coverage) / 30), abs=1e-15
        )
        assert r.mean_len > 0.0
        assert r.fail_rate == 0.0
        assert r.mean_time_s == 0.0  # timing not requested
        assert math.isfinite(r.mean_is)


def test_method_order_does_not_change_rows():
    a = run_study(DGP("lognormal"), 0.9, 50, 0.1, 20, methods=["pctboot", "mj"], seed=9)
    b = run_study(DGP("lognormal"), 0.9, 50, 0.1, 20, methods=["mj", "pctboot"], seed=9)
    by_name_a = {r.method: r for r in a}
    by_name_b = {r.method: r for r in b}
    assert by_name_a == by_name_b


def test_thread_count_and_rerun_are_byte_identical():
    kw = dict(methods=["snqesa", "pctboot", "hd"], seed=31)
    r1 = run_study(DGP("student_t", (3.0,)), 0.75, 60, 0.1, 24, **kw)
    r2 = run_study(DGP("student_t", (3.0,)), 0.75, 60, 0.1, 24, threads=3, **kw)
    r3 = run_study(DGP("student_t", (3.0,)), 0.75, 60, 0.1, 24, threads=4, **kw)
    assert report_csv(r1) == report_csv(r2) == report_csv(r3)


def test_exact_method_hits_analytic_coverage():
    # the exact interval's coverage is a fixed binomial probability, so a
    # large study must land within 3 binomial standard errors of it
    n, tau, alpha, n_rep = 25, 0.5, 0.05, 10000
    rows = run_study(DGP("normal"), tau, n, alpha, n_rep, methods=["exact"], seed=123)
    l, u, cov_exact = exact_rank_bounds(n, tau, alpha)
    b = stats.binom(n, tau)
    analytic = float(b.cdf(u - 1) - b.cdf(l - 1))
    assert cov_exact == pytest.approx(analytic, abs=1e-12)
    se = math.sqrt(analytic * (1 - analytic) / n_rep)
    assert abs(rows[0].coverage - analytic) <= 3 * se


def test_open_intervals_count_for_coverage_not_length():
    # at n=5, tau=0.9, alpha=0.01 the exact interval is open on both ends:
    # it always covers but contributes no length or score
    rows = run_study(DGP("normal"), 0.9, 5, 0.01, 10, methods=["exact"], seed=1)
    r = rows[0]
    assert r.coverage == 1.0
    assert math.isnan(r.mean_len)
    assert math.isnan(r.mean_is)
    assert r.fail_rate == 0.0


def test_failing_method_reported_not_raised(monkeypatch):
    def boom(xs, spec, rng, nb):
        raise RuntimeError("synthetic failure")

    monkeypatch.setitem(METHODS, "boom", boom)
    rows = run_study(DGP("normal"), 0.5, 20, 0.1, 5, methods=["boom"], seed=0)
    r = rows[0]
    assert r.fail_rate == 1.0
    assert math.isnan(r.coverage)


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        run_study(DGP("normal"), 0.5, 20, 0.1, 2, methods=["nope"])


def test_timing_flag_populates_time_column():
    rows = run_study(
        DGP("normal"), 0.5, 30, 0.1, 5, methods=["pctboot"], seed=0, timing=True
    )
    assert rows[0].mean_time_s > 0.0


# --- CSV rendering ----------------------------------------------------------


def test_csv_header_frozen():
    assert _CSV_HEADER == (
        "method,coverage,se_cov,mean_len,med_len,mean_time_s,"
        "mean_bias,med_bias,rmse_bias,mean_IS,med_IS,fail_rate"
    )


def test_csv_shape_and_roundtrip():
    rows = run_study(DGP("normal"), 0.5, 30, 0.1, 10, methods=["exact", "mj"], seed=4)
    text = report_csv(rows)
    lines = text.splitlines()
    assert lines[0] == _CSV_HEADER
    assert len(lines) == 3
    assert text.endswith("\n")
    for row, line in zip(rows, lines[1:]):
        parts = line.split(",")
        assert parts[0] == row.method
        assert float(parts[1]) == row.coverage
        assert float(parts[11]) == row.fail_rate


def test_registry_contains_all_method_names():
    assert set(METHODS) == {
        "snqesa",
        "snqesa_disc",
        "snqesa_min",
        "exact",
        "pctboot",
        "bca",
        "smboot",
        "subsample",
        "moutofn",
        "waldkde",
        "hd",
        "mj",
    }
