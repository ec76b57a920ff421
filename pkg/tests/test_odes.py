import math

import numpy as np
import pytest
from scipy import integrate

from errors import InputError
from odes import bump_integrals, cutoff, gz_factor, mollified_v, ode_derivatives, ode_pair


def test_cutoff_values():
    pair = cutoff(1.0, 1.0)
    assert pair.b(-1.5) == pytest.approx(0.5)
    assert pair.b(-5.0) == 0.0 and pair.b(0.0) == 1.0
    assert pair.v(0.0) == pytest.approx(0.0, abs=1e-15)
    assert pair.v(-3.0) == pytest.approx(-1.5)


@pytest.mark.parametrize("t0,B", [(1.0, 1.0), (0.0, 2.0), (3.0, 0.25)])
def test_cutoff_sandwich(t0, B):
    pair = cutoff(t0, B)
    t = np.linspace(-t0 - B - 3, 3, 2001)
    v = pair.v(t)
    assert np.all(v >= np.maximum(t, -t0 - B) - 1e-12)
    assert np.all(v <= np.maximum(t, -t0) + 1e-12)


def test_cutoff_rejects_bad_parameters():
    with pytest.raises(InputError):
        cutoff(1.0, 0.0)
    with pytest.raises(InputError):
        cutoff(-1.0, 1.0)
    with pytest.raises(InputError):
        mollified_v(0.2, 1.0, 1.0)
    with pytest.raises(InputError):
        mollified_v(0.0, 1.0, 1.0)


def test_bump_integrals():
    assert bump_integrals(-2.0) == (0.0, 0.0, 0.0)
    k0, _, _ = bump_integrals(0.0)
    assert k0 == pytest.approx(0.5, rel=1e-10)
    assert bump_integrals(3.0)[:2] == (1.0, 3.0)


@pytest.mark.parametrize("eps", [1e-4, 1e-3, 0.05])
def test_mollified_identity_and_slope(eps):
    v = mollified_v(eps, 1.0, 1.0)
    assert v.value(0.0) == pytest.approx(0.0, abs=1e-15)
    for t in np.linspace(-1.0 - eps, 2.0, 25):
        assert v.value(t) == pytest.approx(t, abs=1e-10)
        assert v.derivative(t) == pytest.approx(1.0, abs=1e-12)
    for t in np.linspace(-4.0, 0.0, 161):
        slope = v.derivative(t)
        assert -1e-12 <= slope <= 1 + 1e-12
        assert v.second_derivative(t) >= -1e-12


def test_mollified_derivative_converges_to_ramp():
    pair = cutoff(1.0, 1.0)
    v = mollified_v(1e-4, 1.0, 1.0)
    t = np.linspace(-2.5, 0.5, 401)
    gap = max(abs(v.derivative(ti) - float(pair.b(ti))) for ti in t)
    assert gap < 1e-3


def test_mollified_second_derivative_integrates_to_one():
    v = mollified_v(1e-3, 1.0, 1.0)
    h = v.half_width
    total, _ = integrate.quad(v.second_derivative, v.lower - h, v.upper + h,
                              points=[v.lower + h, v.upper - h], epsabs=1e-13, epsrel=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_ode_pair_at_one():
    point = ode_pair(1.0)
    assert point.u == pytest.approx(0.4586751454, rel=1e-9)
    assert point.s == pytest.approx(0.5819767069, rel=1e-9)
    assert point.residual1 < 1e-12
    assert point.residual2 < 1e-12
    assert point.positivity_margin > 0


def test_ode_pair_on_log_grid():
    for t in np.geomspace(1e-3, 30, 1000):
        point = ode_pair(float(t))
        assert point.residual1 < 1e-10
        assert point.residual2 < 1e-10
        assert point.positivity_margin > 0
    assert ode_pair(30.0).u < 1e-12


def test_ode_series_branch():
    t = 1e-5
    point = ode_pair(t)
    assert point.s == pytest.approx(t / 2 + t * t / 12, rel=1e-12)
    assert point.u == pytest.approx(-math.log(t) + t / 2, rel=1e-9)
    assert point.residual2 < 1e-10
    assert point.residual1 < 1e-8
    assert point.positivity_margin > 0


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
def test_derivatives_match_finite_differences(t):
    h = 1e-5
    du, ddu, ds, dds = ode_derivatives(t)
    assert du == pytest.approx((ode_pair(t + h).u - ode_pair(t - h).u) / (2 * h), rel=1e-6)
    assert ds == pytest.approx((ode_pair(t + h).s - ode_pair(t - h).s) / (2 * h), rel=1e-6)
    assert ddu == pytest.approx((ode_derivatives(t + h)[0] - ode_derivatives(t - h)[0]) / (2 * h), rel=1e-6)
    assert dds == pytest.approx((ode_derivatives(t + h)[2] - ode_derivatives(t - h)[2]) / (2 * h), rel=1e-6)


def test_ode_rejects_nonpositive_t():
    with pytest.raises(InputError):
        ode_pair(0.0)


def test_gz_factor():
    assert gz_factor(1.0, 1.0) == pytest.approx(1 - math.exp(-2), rel=1e-15)
    with pytest.raises(InputError):
        gz_factor(1.0, -1.0)
