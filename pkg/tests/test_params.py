import math

import pytest
from hypothesis import given, settings, strategies as st

from bosefeedback.params import (InvalidParameterError, ModelParams, derive_params,
                                 from_dimensionless, peaks_resolvable,
                                 stationary_width_prediction)


def test_no_feedback_single_particle():
    d = derive_params(ModelParams())
    assert d.theta_n == 0 and d.gamma_n == 0 and d.alpha_n == 0
    assert d.omega_n_sq == 1
    assert d.eta is None


def test_direct_arithmetic_example():
    # Theta_N = 99/100, so zeta = 1/0.99 gives Gamma_N = 0.5
    p = ModelParams(zeta=1 / 0.99, sigma=0.3, n_mean=100, n_cond=100)
    d = derive_params(p)
    assert d.alpha_n == pytest.approx(0.5, rel=1e-15)
    assert d.omega_n_sq == pytest.approx(0.75, rel=1e-15)
    assert d.dx0 == pytest.approx(math.sqrt(1 / 200), rel=1e-15)
    # eta by hand
    assert d.eta == pytest.approx((1 / 200) / (p.zeta * 0.09), rel=1e-14)


def test_figure_one_parameters_round_trip():
    p = from_dimensionless(0.5, math.sqrt(2), n_mean=1000, n_cond=1000)
    d = derive_params(p)
    assert d.alpha_n == pytest.approx(0.5, rel=1e-12)
    assert d.eta == pytest.approx(math.sqrt(2), rel=1e-12)
    assert p.zeta == pytest.approx(2 * 0.5 / (999 / 1000), rel=1e-15)


def test_overdamped_is_valid():
    p = from_dimensionless(1.25, 1 / math.sqrt(2), n_mean=1000, n_cond=1000)
    assert derive_params(p).omega_n_sq == pytest.approx(1 - 1.5625, rel=1e-12)


@pytest.mark.parametrize("kwargs, name", [
    ({"m": 0}, "m"), ({"omega0": -1}, "omega0"), ({"sigma": 0}, "sigma"),
    ({"hbar": float("nan")}, "hbar"), ({"zeta": -0.1}, "zeta"),
    ({"n_mean": 0.5}, "n_mean"), ({"n_cond": 0}, "n_cond"), ({"n_cond": 2.5}, "n_cond"),
])
def test_invalid_parameters_name_the_bound(kwargs, name):
    with pytest.raises(InvalidParameterError, match=name):
        ModelParams(**kwargs)


def test_from_dimensionless_errors():
    with pytest.raises(InvalidParameterError, match="alpha_n = 0"):
        from_dimensionless(0.0, 1.0, n_mean=10, n_cond=10)
    with pytest.raises(InvalidParameterError, match="theta_n"):
        from_dimensionless(0.5, 1.0, n_mean=10, n_cond=1)
    with pytest.raises(InvalidParameterError, match="eta"):
        from_dimensionless(0.5, 0.0, n_mean=10, n_cond=10)


@pytest.mark.parametrize("alpha, eta, expected", [
    (0.5, math.sqrt(2), True), (0.5, 1 / math.sqrt(2), False), (0.8, 1e6, False),
    (0.0, 0.7, False), (0.0, 0.71, True),
])
def test_peaks_resolvable_examples(alpha, eta, expected):
    assert peaks_resolvable(alpha, eta) is expected


def test_width_prediction_minimum_at_eta_one():
    assert stationary_width_prediction(2.0, 1.0) == 2.0
    assert stationary_width_prediction(1.0, math.sqrt(2)) == pytest.approx(1.0299, abs=1e-4)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(1e-3, 5), eta=st.floats(1e-3, 1e3),
       n_mean=st.floats(1, 1e6), extra=st.integers(1, 10 ** 6),
       m=st.floats(0.1, 10), omega0=st.floats(0.1, 10))
def test_round_trip_property(alpha, eta, n_mean, extra, m, omega0):
    n_cond = int(math.floor(n_mean)) + extra
    p = from_dimensionless(alpha, eta, n_mean=n_mean, n_cond=n_cond, m=m, omega0=omega0)
    d = derive_params(p)
    assert d.alpha_n == pytest.approx(alpha, rel=1e-12)
    assert d.eta == pytest.approx(eta, rel=1e-12)
    assert derive_params(p) == d


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0, 0.7), eta=st.floats(1e-3, 1e3))
def test_threshold_monotone_in_eta(alpha, eta):
    # resolvability can only switch on as eta grows
    if peaks_resolvable(alpha, eta):
        assert peaks_resolvable(alpha, eta * 1.5)
