import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosefeedback.colored_noise import ColoredNoisePath, kernel_from_dimensionless
from bosefeedback.params import ModelParams, from_dimensionless
from bosefeedback.spectrum import (EstimatorError, GridTooCoarseError, SpectrumCurve, analytic_spectrum,
                                   closed_form_spectrum, default_grid, estimate_from_kernel,
                                   estimate_spectrum, find_extrema)

SQRT2 = math.sqrt(2)
FIGURE_SETS = [(0.5, SQRT2), (0.5, 1 / SQRT2), (0.8, 1 / SQRT2), (1.25, 1 / SQRT2)]


def resolved(alpha, eta):
    return find_extrema(analytic_spectrum((alpha, eta))).two_sided_peaks_resolved


@pytest.mark.parametrize("p", [ModelParams(zeta=0.0, n_mean=10, n_cond=10),
                               ModelParams(zeta=1.0, n_mean=10, n_cond=1)])
def test_no_damping_is_flat(p):
    curve = analytic_spectrum(p, np.linspace(0, 50, 501))
    assert np.array_equal(curve.values, np.ones(501))


@pytest.mark.parametrize("alpha, eta", FIGURE_SETS)
def test_white_background_at_high_frequency(alpha, eta):
    assert abs(analytic_spectrum((alpha, eta), [100.0]).values[0] - 1) < 1e-3


def test_zero_frequency_value():
    assert analytic_spectrum((0.5, SQRT2), [0.0]).values[0] == pytest.approx(3.0, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.01, 3), eta=st.floats(0.01, 100))
def test_resolvent_matches_closed_form(alpha, eta):
    w = np.linspace(0, 20, 401)
    np.testing.assert_allclose(analytic_spectrum((alpha, eta), w).values,
                               closed_form_spectrum(alpha, eta, w), rtol=1e-11)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.01, 3), eta=st.floats(0.01, 100))
def test_symmetry(alpha, eta):
    w = np.linspace(0.01, 20, 97)
    ks = kernel_from_dimensionless(alpha, eta)
    assert np.array_equal(analytic_spectrum(ks, w).values, analytic_spectrum(ks, -w).values)


@pytest.mark.parametrize("n", [2, 100, 10 ** 4, 10 ** 6])
def test_depends_only_on_dimensionless_pair(n):
    w = default_grid()
    ref = analytic_spectrum((0.8, 0.6), w).values
    got = analytic_spectrum(from_dimensionless(0.8, 0.6, n_mean=n, n_cond=n + 1), w).values
    np.testing.assert_allclose(got, ref, rtol=1e-12)


@pytest.mark.parametrize("alpha, eta", FIGURE_SETS)
def test_tail_decay_order(alpha, eta):
    w = np.geomspace(10, 100, 50)
    dev = np.abs(analytic_spectrum((alpha, eta), w).values - 1)
    order = -np.polyfit(np.log(w), np.log(dev), 1)[0]
    assert order >= 1.9


def test_white_noise_calibration():
    dt = 0.01
    rng = np.random.default_rng(3)
    data = rng.normal(size=(8, 20_000)) * math.sqrt(dt)
    curve = estimate_spectrum([data], dt=dt, segment_length=1024)
    assert np.all(np.abs(curve.values - 1) <= 4 * curve.stderr)
    assert curve.omegas.max() <= 0.18 / dt


def test_zero_input_gives_zero_spectrum():
    curve = estimate_spectrum([np.zeros((2, 10_000))], dt=0.01, segment_length=512)
    assert not curve.values.any()


def test_estimator_preconditions():
    with pytest.raises(EstimatorError, match="segments"):
        estimate_spectrum([np.zeros(3000)], dt=0.01, segment_length=1024)
    with pytest.raises(EstimatorError, match="band"):
        estimate_spectrum([np.zeros(40_000)], dt=0.01, segment_length=1024, omega_max=20)
    with pytest.raises(EstimatorError):
        estimate_spectrum([np.zeros(40_000)], segment_length=1024)
    ks = kernel_from_dimensionless(0.5, 1.0)
    with pytest.raises(EstimatorError, match="band"):
        estimate_from_kernel(ks, 0.01, 100, seed=1, omega_max=50)


def test_path_objects_carry_their_step():
    rng = np.random.default_rng(1)
    w = rng.normal(size=30_000) * 0.1
    path = ColoredNoisePath(0.01, w, w, np.zeros_like(w))
    a = estimate_spectrum([path], segment_length=1024)
    b = estimate_spectrum([w], dt=0.01, segment_length=1024)
    np.testing.assert_array_equal(a.values, b.values)


def test_kernel_estimate_agrees_with_analytic():
    ks = kernel_from_dimensionless(0.5, SQRT2)
    est = estimate_from_kernel(ks, 0.01, 400, seed=17, segment_length=2048, omega_max=5)
    ref = analytic_spectrum(ks, est.omegas).values
    # short segments smear the peaks; only the smooth part is checked here
    band = est.omegas > 2.5
    assert np.all(np.abs(est.values[band] - ref[band]) <= 4 * est.stderr[band])


def test_extrema_figure_one():
    solid = find_extrema(analytic_spectrum((0.5, SQRT2)))
    assert solid.two_sided_peaks_resolved
    peak = max((e for e in solid.extrema if e.kind == "max"), key=lambda e: e.value)
    # analytic maximum of the closed form
    assert peak.omega == pytest.approx(0.5176, abs=1e-3)
    assert peak.value == pytest.approx(3.1547, abs=1e-3)
    dashed = find_extrema(analytic_spectrum((0.5, 1 / SQRT2)))
    assert not dashed.two_sided_peaks_resolved
    top = [e for e in dashed.extrema if e.kind == "max"]
    assert len(top) == 1 and top[0].omega == 0.0


@pytest.mark.parametrize("alpha, w_min", [(0.8, 1.3179), (1.25, 1.5288)])
def test_extrema_figure_two(alpha, w_min):
    rep = find_extrema(analytic_spectrum((alpha, 1 / SQRT2)))
    assert not rep.two_sided_peaks_resolved
    assert rep.has_subunity_minima
    assert rep.min_location == pytest.approx(w_min, abs=1e-3)
    assert rep.min_location > 1.0


def test_coarse_grid_rejected():
    coarse = analytic_spectrum((0.5, SQRT2), np.linspace(0, 5, 100))
    with pytest.raises(GridTooCoarseError):
        find_extrema(coarse)


def test_noisy_minimum_needs_significance():
    w = np.linspace(0, 5, 600)
    vals = np.where(np.abs(w - 2) < 0.5, 0.99, 1.0) + 0.0 * w
    vals[300] = 0.98
    curve = SpectrumCurve(w, vals, np.full_like(w, 0.05))
    assert not find_extrema(curve).has_subunity_minima


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.69])
def test_resolvability_threshold_by_bisection(alpha):
    th = 1 / math.sqrt(2 - 4 * alpha ** 2)
    lo, hi = 0.5 * th, 2 * th
    assert not resolved(alpha, lo) and resolved(alpha, hi)
    while hi - lo > 1e-5:
        mid = 0.5 * (lo + hi)
        if resolved(alpha, mid):
            hi = mid
        else:
            lo = mid
    assert abs(hi - th) <= 1e-3


@pytest.mark.parametrize("alpha", [1 / SQRT2, 0.8, 1.25, 3.0])
def test_never_resolved_past_critical_ratio(alpha):
    assert not any(resolved(alpha, eta) for eta in np.geomspace(1e-2, 1e3, 40))
