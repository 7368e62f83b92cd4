"""Baseline interval constructors: conventions, edge statuses, oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtri

from snqesa import (
    QuantileSpec,
    bca_ci,
    harrell_davis_ci,
    m_out_of_n_ci,
    maritz_jarrett_ci,
    pct_bootstrap_ci,
    quantile_type8,
    smoothed_bootstrap_ci,
    subsample_ci,
    wald_kde_ci,
)
from snqesa._baselines import hd_estimate

ALL_CONSTRUCTORS = [
    pct_bootstrap_ci,
    bca_ci,
    smoothed_bootstrap_ci,
    subsample_ci,
    m_out_of_n_ci,
    wald_kde_ci,
    harrell_davis_ci,
    maritz_jarrett_ci,
]

EXPECTED_METHOD = {
    pct_bootstrap_ci: "pctboot",
    bca_ci: "bca",
    smoothed_bootstrap_ci: "smboot",
    subsample_ci: "subsample",
    m_out_of_n_ci: "moutofn",
    wald_kde_ci: "waldkde",
    harrell_davis_ci: "hd",
    maritz_jarrett_ci: "mj",
}


@pytest.mark.parametrize("ctor", ALL_CONSTRUCTORS, ids=lambda c: c.__name__)
def test_constant_sample_degenerates(ctor):
    xs = np.full(25, 3.7)
    res = ctor(xs, QuantileSpec(tau=0.5, alpha=0.1), np.random.default_rng(0))
    assert res.status == "degenerate"
    assert res.lower == res.upper == 3.7
    assert res.method == EXPECTED_METHOD[ctor]


@pytest.mark.parametrize("ctor", ALL_CONSTRUCTORS, ids=lambda c: c.__name__)
def test_ordered_finite_and_metadata(ctor):
    rng = np.random.default_rng(11)
    xs = rng.standard_normal(60)
    spec = QuantileSpec(tau=0.75, alpha=0.1)
    res = ctor(xs, spec, np.random.default_rng(42))
    assert res.lower <= res.upper
    assert math.isfinite(res.lower) and math.isfinite(res.upper)
    assert res.method == EXPECTED_METHOD[ctor]
    assert res.tau == 0.75 and res.alpha == 0.1 and res.n == 60
    assert res.elapsed_s >= 0.0
    assert math.isfinite(res.anchor)


@pytest.mark.parametrize("ctor", ALL_CONSTRUCTORS, ids=lambda c: c.__name__)
def test_same_stream_is_deterministic(ctor):
    xs = np.random.default_rng(5).standard_normal(40)
    spec = QuantileSpec(tau=0.9, alpha=0.05)
    a = ctor(xs, spec, np.random.default_rng(314))
    b = ctor(xs, spec, np.random.default_rng(314))
    assert a.lower == b.lower and a.upper == b.upper and a.status == b.status


@pytest.mark.parametrize("ctor", ALL_CONSTRUCTORS, ids=lambda c: c.__name__)
def test_rejects_tiny_or_multidim_input(ctor):
    spec = QuantileSpec(tau=0.5, alpha=0.1)
    with pytest.raises(ValueError):
        ctor(np.array([1.0]), spec, np.random.default_rng(0))
    with pytest.raises(ValueError):
        ctor(np.ones((3, 3)), spec, np.random.default_rng(0))


def test_pctboot_matches_replicate_quantiles():
    # reproduce the replicate matrix with an identical generator state
    xs = np.sort(np.random.default_rng(8).standard_normal(30))
    spec = QuantileSpec(tau=0.5, alpha=0.1)
    res = pct_bootstrap_ci(xs, spec, np.random.default_rng(99), n_boot=500)
    gen = np.random.default_rng(99)
    idx = gen.integers(0, 30, size=(500, 30))
    reps = np.quantile(xs[idx], 0.5, axis=1, method="median_unbiased")
    lo = float(np.quantile(reps, 0.05, method="median_unbiased"))
    hi = float(np.quantile(reps, 0.95, method="median_unbiased"))
    assert res.lower == pytest.approx(lo, abs=0.0)
    assert res.upper == pytest.approx(hi, abs=0.0)
    assert res.anchor == quantile_type8(xs, 0.5)


def test_bca_z0_clamp_status():
    # anchor interpolates into the gap below the replicate mass; with a
    # 4-draw bootstrap every replicate can land strictly above it
    xs = np.array([0.0, 10.0, 10.1, 10.2])
    spec = QuantileSpec(tau=0.5, alpha=0.1)
    res = bca_ci(xs, spec, np.random.default_rng(9), n_boot=4)
    assert res.status == "z0_clamped"
    assert res.lower <= res.upper
    ok = bca_ci(xs, spec, np.random.default_rng(0), n_boot=2000)
    assert ok.status in ("ok", "z0_clamped")


def test_bca_shifts_toward_skew():
    # right-skewed data at an upper quantile: bca upper endpoint should not
    # sit below the plain percentile upper endpoint by more than noise
    xs = np.random.default_rng(21).exponential(size=80)
    spec = QuantileSpec(tau=0.9, alpha=0.1)
    pct = pct_bootstrap_ci(xs, spec, np.random.default_rng(77), n_boot=3000)
    bca = bca_ci(xs, spec, np.random.default_rng(77), n_boot=3000)
    assert bca.status == "ok"
    assert bca.upper >= pct.lower
    assert bca.lower <= pct.upper


def test_waldkde_density_matches_gaussian_kde_oracle():
    xs = np.sort(np.random.default_rng(14).standard_normal(80))
    spec = QuantileSpec(tau=0.5, alpha=0.05)
    res = wald_kde_ci(xs, spec)
    assert res.status == "ok"
    anchor = quantile_type8(xs, 0.5)
    sd = float(np.std(xs, ddof=1))
    iqr = float(
        np.quantile(xs, 0.75, method="median_unbiased")
        - np.quantile(xs, 0.25, method="median_unbiased")
    )
    h = 0.9 * min(sd, iqr / 1.34) * 80 ** (-0.2)
    # scipy gaussian_kde with the bandwidth expressed as a factor of the
    # data sd evaluates the same mixture density
    kde = stats.gaussian_kde(xs, bw_method=h / sd)
    fhat = float(kde(anchor)[0])
    half = ndtri(0.975) * math.sqrt(0.25 / 80) / fhat
    assert res.upper - res.lower == pytest.approx(2.0 * half, rel=1e-10)
    assert 0.5 * (res.upper + res.lower) == pytest.approx(anchor, abs=1e-12)


def test_waldkde_floor_binds_in_empty_gap():
    # a tight interior cluster gives a tiny bandwidth, and the anchor
    # interpolates into a wide empty gap where the density estimate
    # underflows; the 1e-4/range floor takes over
    rng = np.random.default_rng(3)
    cluster = 0.5 + 1e-6 * rng.standard_normal(19)
    xs = np.sort(np.concatenate([[0.0], cluster, [1.0]]))
    spec = QuantileSpec(tau=0.95, alpha=0.05)
    res = wald_kde_ci(xs, spec)
    assert res.status == "floored"
    floor = 1e-4 / (xs[-1] - xs[0])
    half = ndtri(0.975) * math.sqrt(0.95 * 0.05 / 21) / floor
    assert res.upper - res.lower == pytest.approx(2.0 * half, rel=1e-10)


def test_hd_weights_and_estimate_oracle():
    xs = np.sort(np.random.default_rng(2).standard_normal(40))
    for tau in (0.1, 0.3, 0.5, 0.8, 0.95):
        est, var = hd_estimate(xs, tau)
        n = xs.size
        dist = stats.beta((n + 1) * tau, (n + 1) * (1 - tau))
        w = np.diff(dist.cdf(np.arange(n + 1) / n))
        assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
        est_o = float(np.sum(w * xs))
        var_o = float(np.sum(w * xs**2) - est_o**2)
        assert est == pytest.approx(est_o, rel=1e-12)
        assert var == pytest.approx(max(var_o, 0.0), rel=1e-10, abs=1e-15)
        assert xs[0] <= est <= xs[-1]
        assert var >= 0.0


def test_hd_estimate_tracks_type8_on_smooth_sample():
    xs = np.sort(np.random.default_rng(6).standard_normal(400))
    for tau in (0.25, 0.5, 0.9):
        est, _ = hd_estimate(xs, tau)
        assert est == pytest.approx(quantile_type8(xs, tau), abs=0.1)


def test_mj_interval_is_normal_with_hd_scale():
    xs = np.random.default_rng(31).standard_normal(50)
    spec = QuantileSpec(tau=0.3, alpha=0.1)
    res = maritz_jarrett_ci(xs, spec)
    est, var = hd_estimate(np.sort(xs), 0.3)
    z = ndtri(0.95)
    assert res.lower == pytest.approx(est - z * math.sqrt(var), rel=1e-12)
    assert res.upper == pytest.approx(est + z * math.sqrt(var), rel=1e-12)
    assert res.anchor == pytest.approx(est, rel=1e-12)


def test_hd_bootstrap_brackets_estimate():
    xs = np.random.default_rng(40).standard_normal(60)
    spec = QuantileSpec(tau=0.6, alpha=0.1)
    res = harrell_davis_ci(xs, spec, np.random.default_rng(1))
    est, _ = hd_estimate(np.sort(xs), 0.6)
    assert res.lower <= est <= res.upper


def test_small_resample_size_arithmetic():
    # resample size convention b = round(n^0.7), clamped to [2, n]
    assert round(100**0.7) == 25
    assert round(3**0.7) == 2
    assert min(max(round(2**0.7), 2), 2) == 2


def test_subsample_n2_degenerates_moutofn_does_not():
    # without replacement at n=2 the subsample IS the sample, so every
    # pivot replicate coincides; with replacement they still vary
    xs = np.array([0.0, 1.0])
    spec = QuantileSpec(tau=0.5, alpha=0.1)
    sub = subsample_ci(xs, spec, np.random.default_rng(0))
    assert sub.status == "degenerate"
    mn = m_out_of_n_ci(xs, spec, np.random.default_rng(0))
    assert mn.status == "ok"
    assert mn.lower < mn.upper


def test_pivot_methods_cover_anchor_on_symmetric_sample():
    xs = np.random.default_rng(17).standard_normal(100)
    spec = QuantileSpec(tau=0.5, alpha=0.1)
    for ctor in (subsample_ci, m_out_of_n_ci):
        res = ctor(xs, spec, np.random.default_rng(3))
        assert res.lower <= res.anchor <= res.upper


def test_smoothed_bootstrap_wider_than_plain_on_small_sample():
    # adding kernel noise should not shrink the replicate spread
    xs = np.random.default_rng(23).standard_normal(20)
    spec = QuantileSpec(tau=0.5, alpha=0.1)
    sm = smoothed_bootstrap_ci(xs, spec, np.random.default_rng(50), n_boot=4000)
    pl = pct_bootstrap_ci(xs, spec, np.random.default_rng(50), n_boot=4000)
    assert (sm.upper - sm.lower) > 0.8 * (pl.upper - pl.lower)
