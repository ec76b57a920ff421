import math
from fractions import Fraction

import numpy as np
import pytest

from analysis import (
    bergman_bound,
    check_concavity,
    check_differential_inequality,
    check_lower_bound,
    check_monotonicity,
    check_scaled_mass_bound,
    composite_jumping_number,
    dk_lower_bound,
    effectiveness_threshold,
    g_curve,
    jumping_number,
    layer_cake,
    legacy_exponent,
    legacy_theta,
)
from domains import polydisc
from errors import ConfigError, G0InfiniteError, InputError
from hilbert import MonomialFn, constant_one, monomial
from ideals import monomial_ideal
from minimizer import MinimizationMethod
from weights import toric

FINE_GRID = np.round(np.arange(0, 201) * 0.01, 12)

# seeded once, then parametrized
_rng = np.random.default_rng(5)


def _random_curve_instance():
    n = int(_rng.integers(1, 3))
    psi = toric([float(x) for x in _rng.uniform(0.5, 4.0, size=n)])
    terms = {}
    for _ in range(int(_rng.integers(1, 4))):
        alpha = tuple(int(k) for k in _rng.integers(0, 3, size=n))
        terms[alpha] = complex(_rng.normal(), _rng.normal())
    return MonomialFn(terms, n), psi


RANDOM_CURVES = [_random_curve_instance() for _ in range(20)]


def _layer_cake_instance():
    k = int(_rng.integers(0, 4))
    d = float(_rng.uniform(0.3, 0.8 * (2 * k + 2)))
    return k, d


LAYER_CAKE_CASES = [_layer_cake_instance() for _ in range(20)]


def test_jumping_numbers():
    assert jumping_number(constant_one(1), toric([1])) == 1.0
    assert jumping_number(monomial([2]), toric([1])) == 3.0
    assert jumping_number(monomial([1, 0]), toric([1, 4])) == pytest.approx(0.25)
    assert jumping_number(monomial([0, 1]), toric([1, 0])) == 1.0
    f = constant_one(1) + monomial([1])
    with pytest.raises(InputError):
        jumping_number(f, toric([1]))
    assert composite_jumping_number(f, toric([1])) == 1.0
    assert composite_jumping_number(MonomialFn({}, 1), toric([1])) == math.inf


def test_pi_exp_curve(disc):
    curve = g_curve(constant_one(1), monomial_ideal([(1,)]), toric([2]), [0, 0.5, 1, 2], domain=disc)
    np.testing.assert_allclose(curve.values, math.pi * np.exp(-np.array([0, 0.5, 1, 2])), rtol=1e-13)
    report = check_lower_bound(curve)
    assert report.passed
    assert report.worst_violation <= 1e-9


def test_pi_exp_curve_structural_checks(disc):
    curve = g_curve(constant_one(1), None, toric([2]), FINE_GRID, domain=disc)
    assert curve.ideal.generators == ((1,),)
    for check in (check_lower_bound, check_monotonicity, check_concavity, check_differential_inequality):
        report = check(curve)
        assert report.passed, report.summary
    # G(-log r) = pi r is linear in r
    assert check_concavity(curve).worst_violation < 1e-12


def test_sqrt_curve_is_concave(disc):
    # 1 + z modulo (z^2) with psi = 4 log|z|: G(-log r) = pi sqrt(r) + pi r / 2
    curve = g_curve(constant_one(1) + monomial([1]), None, toric([4]), FINE_GRID, domain=disc)
    r = np.exp(-FINE_GRID)
    np.testing.assert_allclose(curve.values, math.pi * np.sqrt(r) + math.pi * r / 2, rtol=1e-13)
    assert check_concavity(curve).passed


def test_least_squares_curve_matches(disc):
    grid = [0, 0.5, 1.0]
    exact = g_curve(constant_one(1) + monomial([1]), None, toric([4]), grid, domain=disc)
    ls = g_curve(constant_one(1) + monomial([1]), None, toric([4]), grid,
                 method=MinimizationMethod.LEAST_SQUARES, domain=disc, degree=6)
    np.testing.assert_allclose(ls.values, exact.values, rtol=1e-6)


@pytest.mark.parametrize("f,psi", RANDOM_CURVES)
def test_random_curves_satisfy_lower_bound_and_concavity(f, psi):
    grid = np.linspace(0.0, 3.0, 31)
    curve = g_curve(f, None, psi, grid)
    assert check_lower_bound(curve).passed
    assert check_monotonicity(curve).passed
    assert check_concavity(curve).passed


@pytest.mark.parametrize("f,psi", RANDOM_CURVES)
def test_random_curves_satisfy_differential_inequality(f, psi):
    curve = g_curve(f, None, psi, FINE_GRID)
    report = check_differential_inequality(curve)
    assert report.passed, report.summary


def test_g_curve_errors(disc):
    with pytest.raises(InputError):
        g_curve(constant_one(1), None, toric([2]), [0.5, 1.0], domain=disc)
    with pytest.raises(InputError):
        g_curve(constant_one(1), None, toric([2]), [0.0, 1.0, 0.5], domain=disc)
    with pytest.raises(G0InfiniteError):
        g_curve(constant_one(1), monomial_ideal([(1,)]), toric([2]), [0.0, 1.0],
                domain=disc, weight_phi=toric([2]))


def test_layer_cake_disc_p2(disc):
    report = layer_cake(constant_one(1), toric([1]), disc)
    assert report.passed
    assert report.details["lhs"] == pytest.approx(2 * math.pi)
    assert report.details["rhs"] == pytest.approx(2 * math.pi, rel=1e-8)


@pytest.mark.parametrize("k,d", LAYER_CAKE_CASES)
def test_layer_cake_random_disc(disc, k, d):
    assert layer_cake(monomial([k]), toric([d]), disc).passed


def test_layer_cake_bidisc():
    report = layer_cake(constant_one(2) + monomial([1, 1], 0.5), toric([1, 0.5]), polydisc([1.0, 1.0]))
    assert report.passed, report.summary


def test_layer_cake_divergent_is_skipped(disc):
    report = layer_cake(constant_one(1), toric([2]), disc)
    assert report.skipped and report.passed


@pytest.mark.parametrize("p0", ["1.5", "2", "3", "10"])
def test_effectiveness_is_sharp_on_disc(disc, p0):
    p = Fraction(p0)
    phi = toric([Fraction(2) / p])
    result = effectiveness_threshold(constant_one(1), phi, disc)
    assert result.ratio == pytest.approx(float(p / (p - 1)), rel=1e-9)
    assert result.p_star == pytest.approx(float(p), rel=1e-9)
    assert result.report.passed
    assert result.report.details["p_old_below_p_star"]


@pytest.mark.parametrize("p0", ["1.5", "2", "3"])
def test_bergman_form(disc, p0):
    p = Fraction(p0)
    report = bergman_bound(toric([Fraction(2) / p]), disc)
    assert report.passed
    assert report.details["q"] == pytest.approx(float(p / (p - 1)), rel=1e-12)
    assert report.details["p_bergman"] == pytest.approx(float(p), rel=1e-12)


def test_demailly_kollar_disc(disc):
    r_grid = [0.01, 0.1, 0.5, 0.9]
    report = dk_lower_bound(constant_one(1), toric([1]), disc, r_grid)
    assert report.passed
    assert report.worst_violation <= 1e-9
    assert report.details["C"] == pytest.approx(math.pi)
    assert dk_lower_bound(constant_one(1), toric([1]), disc, r_grid, use_bergman=True).passed


def test_demailly_kollar_infinite_branch(disc):
    report = dk_lower_bound(constant_one(1), toric([1]), disc, [0.1, 0.5],
                            weight_extra=toric([2]))
    assert report.details["infinite_branch"]
    assert report.passed


def test_demailly_kollar_rejects_bad_grid(disc):
    with pytest.raises(InputError):
        dk_lower_bound(constant_one(1), toric([1]), disc, [0.5, 1.5])
    with pytest.raises(InputError):
        dk_lower_bound(monomial([1]), toric([1]), disc, [0.5], use_bergman=True)


def test_scaled_mass_bound_is_tight(disc):
    report = check_scaled_mass_bound(constant_one(1), toric([2]), disc, [1.5, 2.0, 4.0])
    assert report.passed
    assert report.details["C"] == pytest.approx(math.pi)


def test_effectiveness_rejects_zero_function(disc):
    with pytest.raises(ConfigError, match="function"):
        effectiveness_threshold(MonomialFn({}, 1), toric([1]), disc)


def test_legacy_effectiveness():
    assert legacy_theta(1.5) == pytest.approx((1 / (0.5 * 2.0)) ** (1 / 1.5))
    p_old = legacy_exponent(2.0)
    assert 1.0 < p_old < 2.0
    assert legacy_theta(p_old) == pytest.approx(2.0, rel=1e-10)
