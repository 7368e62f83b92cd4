"""Binomial pivot map h, its inverse, tilt scalars, and exact tails."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from snqesa import (
    binom_scalars,
    exact_mid_tails,
    exact_tail,
    h_eval,
    h_prime,
    h_second,
    invert_h,
    kl_bernoulli,
)
from snqesa._binom import log_pmf, log_pmf_frac, logit
from tests._oracles import fd_scalar, midp_pair


def test_h_frozen_value():
    assert h_eval(0.4, 0.5, 100, ridge_c=0.0) == pytest.approx(2.0, rel=0, abs=1e-14)


def test_invert_h_frozen_values():
    assert invert_h(2.0, 0.5, 100, ridge_c=0.0) == pytest.approx(0.4, rel=0, abs=1e-12)
    # bracketing-root oracle value for the ridged extreme-tau case
    assert invert_h(-3.0, 0.95, 100, ridge_c=0.25) == pytest.approx(
        0.9865567972342479, rel=0, abs=1e-12
    )
    assert invert_h(0.0, 0.7, 50) == pytest.approx(0.7, rel=0, abs=0)


@pytest.mark.parametrize("tau", [0.05, 0.25, 0.5, 0.9, 0.95])
@pytest.mark.parametrize("ridge_c", [0.0, 0.25])
def test_round_trip(tau, ridge_c):
    n = 173
    for x in np.linspace(-6, 6, 41):
        u = invert_h(float(x), tau, n, ridge_c)
        if 1e-12 < u < 1 - 1e-12:
            assert h_eval(u, tau, n, ridge_c) == pytest.approx(
                float(x), rel=0, abs=1e-10 * (1 + abs(x))
            )


@given(
    x=st.floats(-8, 8),
    tau=st.floats(0.02, 0.98),
    n=st.integers(2, 5000),
)
@settings(max_examples=80, deadline=None)
def test_round_trip_property(x, tau, n):
    u = invert_h(x, tau, n, 0.25)
    assert 0.0 < u < 1.0
    if 1e-11 < u < 1 - 1e-11:
        assert abs(h_eval(u, tau, n, 0.25) - x) <= 1e-9 * (1 + abs(x))


@pytest.mark.parametrize("tau", [0.2, 0.5, 0.9])
@pytest.mark.parametrize("u", [0.07, 0.33, 0.61, 0.93])
def test_h_derivatives_match_fd(tau, u):
    n = 80
    d1 = fd_scalar(lambda z: h_eval(z, tau, n), u, h=1e-6)
    d2 = fd_scalar(lambda z: h_prime(z, tau, n), u, h=1e-5)
    assert h_prime(u, tau, n) == pytest.approx(d1, rel=1e-6, abs=1e-6)
    assert h_second(u, tau, n) == pytest.approx(d2, rel=1e-4, abs=1e-4)


def test_h_prime_negative_everywhere():
    for tau in (0.1, 0.5, 0.92):
        for u in np.linspace(0.01, 0.99, 33):
            assert h_prime(float(u), tau, 60) < 0.0


def test_h_second_vanishes_at_median_level():
    for u in (0.1, 0.4, 0.9):
        assert h_second(u, 0.5, 64) == 0.0
        assert h_second(u, 0.5, 64, ridge_c=0.0) == 0.0


def test_kl_frozen_and_properties():
    assert kl_bernoulli(0.5, 0.25) == pytest.approx(0.14384103622589042, rel=0, abs=1e-15)
    assert kl_bernoulli(0.3, 0.3) == 0.0
    assert kl_bernoulli(0.0, 0.25) == pytest.approx(-math.log1p(-0.25))
    assert kl_bernoulli(1.0, 0.25) == pytest.approx(-math.log(0.25))
    for a, b in [(0.1, 0.7), (0.99, 0.2), (0.4, 0.41)]:
        assert kl_bernoulli(a, b) > 0.0
    with pytest.raises(ValueError):
        kl_bernoulli(0.5, 0.0)


def test_logit_endpoints():
    assert logit(0.5) == 0.0
    assert logit(0.0) == -math.inf
    assert logit(1.0) == math.inf


def test_binom_scalars_signs():
    # u below tau: both scalars negative and consistent with direct formulas
    r, q = binom_scalars(0.9, 0.95, 100)
    assert r < 0.0 and q < 0.0
    assert r == pytest.approx(-math.sqrt(2 * 100 * kl_bernoulli(0.9, 0.95)), rel=1e-14)
    assert q == pytest.approx(
        -abs(logit(0.9) - logit(0.95)) * math.sqrt(100 * 0.9 * 0.1), rel=1e-14
    )
    r2, q2 = binom_scalars(0.97, 0.95, 100)
    assert r2 > 0.0 and q2 > 0.0
    assert binom_scalars(0.95, 0.95, 100) == (0.0, 0.0)


def test_binom_scalars_endpoints_route_to_exact():
    r, q = binom_scalars(1.0, 0.5, 20)
    assert math.isinf(q) and q > 0
    assert r == pytest.approx(math.sqrt(2 * 20 * (-math.log(0.5))))
    r0, q0 = binom_scalars(0.0, 0.5, 20)
    assert math.isinf(q0) and q0 < 0


def test_log_pmf_matches_scipy():
    rng = np.random.default_rng(1)
    for _ in range(60):
        n = int(rng.integers(1, 2000))
        u = float(rng.uniform(0.01, 0.99))
        k = int(rng.integers(0, n + 1))
        ref = stats.binom(n, u).logpmf(k)
        assert log_pmf(k, n, u) == pytest.approx(float(ref), rel=1e-12, abs=1e-10)
    assert log_pmf(-1, 10, 0.5) == -math.inf
    assert log_pmf(0, 10, 0.0) == 0.0
    assert log_pmf(10, 10, 1.0) == 0.0


def test_log_pmf_frac_interpolates():
    for m in range(0, 13):
        assert log_pmf_frac(float(m), 12, 0.3) == pytest.approx(
            log_pmf(m, 12, 0.3), rel=0, abs=1e-12
        )
    mid = log_pmf_frac(4.5, 12, 0.3)
    assert log_pmf(4, 12, 0.3) != mid != log_pmf(5, 12, 0.3)
    assert log_pmf_frac(-0.5, 12, 0.3) == -math.inf


@pytest.mark.parametrize("n", [5, 50, 500, 5000])
@pytest.mark.parametrize("tau", [0.03, 0.25, 0.5, 0.9, 0.97])
def test_exact_tail_matches_scipy(n, tau):
    b = stats.binom(n, tau)
    ks = sorted({0, 1, n // 7, n // 3, n // 2, (9 * n) // 10, n - 1, n})
    for k in ks:
        le = exact_tail(n, tau, k, "le")
        ge = exact_tail(n, tau, k, "ge")
        ref_le, ref_ge = float(b.cdf(k)), float(b.sf(k - 1))
        # one rounding per recursion term accumulates ~n ulps at n=5000
        assert le == pytest.approx(ref_le, rel=5e-11, abs=1e-300)
        assert ge == pytest.approx(ref_ge, rel=5e-11, abs=1e-300)
        atom = float(b.pmf(k))
        assert exact_tail(n, tau, k, "le", "open") == pytest.approx(
            max(0.0, ref_le - atom), rel=1e-10, abs=1e-15
        )
        assert exact_tail(n, tau, k, "le", "mid") == pytest.approx(
            ref_le - 0.5 * atom, rel=1e-10, abs=1e-15
        )


def test_exact_tail_deep_tail_accuracy():
    # far tail where naive summation underflows in the bulk direction
    val = exact_tail(500, 0.5, 5, "le")
    ref = float(stats.binom(500, 0.5).cdf(5))
    assert val == pytest.approx(ref, rel=1e-11)
    val2 = exact_tail(2000, 0.9, 1950, "ge")
    ref2 = float(stats.binom(2000, 0.9).sf(1949))
    assert val2 == pytest.approx(ref2, rel=1e-11)


def test_exact_mid_tails_complement():
    for n, tau, k in [(50, 0.25, 10), (100, 0.95, 90), (17, 0.5, 9)]:
        down, up = exact_mid_tails(n, tau, k)
        assert down + up == pytest.approx(1.0, rel=0, abs=1e-15)
        ref_down, ref_up = midp_pair(n, tau, k)
        assert down == pytest.approx(ref_down, rel=1e-12)
        assert up == pytest.approx(ref_up, rel=1e-12)


def test_exact_tail_validation():
    with pytest.raises(ValueError):
        exact_tail(10, 0.5, 3, "up")
    with pytest.raises(ValueError):
        exact_tail(10, 0.5, 3, "le", "half")


def test_domain_guards():
    with pytest.raises(ValueError):
        h_eval(0.0, 0.5, 10)
    with pytest.raises(ValueError):
        h_prime(1.0, 0.5, 10)
    with pytest.raises(ValueError):
        h_second(-0.2, 0.5, 10)
