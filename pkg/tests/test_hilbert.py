import math

import numpy as np
import pytest

from domains import ball
from errors import ConfigError, DivergedNormError, InputError
from hilbert import (
    MonomialFn,
    bergman_at_origin,
    constant_one,
    describe_function,
    function_mass,
    gram_matrix,
    mc_gram_matrix,
    monomial,
    monomialfn_from_dict,
    monomialfn_to_dict,
    truncation,
    weighted_norms,
)
from weights import SublevelRegion, toric


def test_zero_coefficients_are_dropped():
    f = MonomialFn({(0,): 1, (1,): 0, (2,): 2j}, 1)
    assert f.exponents == [(0,), (2,)]
    assert (f - f).is_zero()
    assert f.degree == 2


def test_graded_lex_order():
    assert list(truncation(1, 2).exponents) == [(0, 0), (1, 0), (0, 1)]
    assert len(truncation(2, 2)) == 6
    assert len(truncation(3, 3)) == 20


def test_basis_covers():
    basis = truncation(2, 2)
    assert basis.covers(monomial([1, 1]))
    assert not basis.covers(monomial([3, 0]))
    with pytest.raises(InputError):
        truncation(-1, 2)


def test_disc_norms(disc):
    region = SublevelRegion(disc, toric([2]), 0.0)
    norms = weighted_norms(truncation(4, 1), region)
    for k, est in enumerate(norms):
        assert est.value == pytest.approx(math.pi / (k + 1), rel=1e-14)


def test_gram_is_diagonal(bidisc):
    region = SublevelRegion(bidisc, toric([1, 2]), 0.3)
    G = gram_matrix(truncation(3, 2), region)
    assert np.count_nonzero(G - np.diag(np.diag(G))) == 0
    assert np.all(np.real(np.diag(G)) > 0)


def test_gram_diverged_norm(disc):
    phi = toric([2])
    with pytest.raises(DivergedNormError):
        gram_matrix(truncation(2, 1), SublevelRegion(disc, phi, 0.0), phi)


def test_mc_gram_is_hermitian_psd(disc):
    region = SublevelRegion(disc, toric([2]), 0.0)
    basis = truncation(3, 1)
    mc = mc_gram_matrix(basis, region, samples=20_000, seed=2)
    np.testing.assert_allclose(mc.matrix, mc.matrix.conj().T, atol=1e-13)
    eigs = np.linalg.eigvalsh(mc.matrix)
    assert eigs.min() > -1e-12 * eigs.max()
    exact = np.real(np.diag(gram_matrix(basis, region)))
    diag = np.real(np.diag(mc.matrix))
    assert np.all(np.abs(diag - exact) < 5 * np.diag(mc.std_error))


def test_function_mass(disc):
    f = monomialfn_from_dict([{"exp": [0], "re": 1}, {"exp": [1], "re": 2}])
    est = function_mass(f, SublevelRegion(disc, toric([2]), 0.0))
    assert est.value == pytest.approx(3 * math.pi, rel=1e-14)


def test_function_mass_diverges_on_nonzero_term(disc):
    phi = toric([2])
    region = SublevelRegion(disc, phi, 0.0)
    assert function_mass(constant_one(1), region, phi).diverged
    assert not function_mass(monomial([1]), region, phi).diverged


def test_bergman_at_origin(disc):
    assert bergman_at_origin(disc) == pytest.approx(1 / math.pi)
    assert bergman_at_origin(ball(1.0, 2)) == pytest.approx(2 / math.pi ** 2)


def test_function_dict():
    f = monomialfn_from_dict([{"exponent": [1, 0], "re": 1, "im": -1}, {"exp": [0, 2], "re": 3}])
    assert f.coefficient([1, 0]) == 1 - 1j
    assert monomialfn_from_dict(monomialfn_to_dict(f)) == f
    assert describe_function(monomial([0, 2], 3)) == "3*z2^2"
    with pytest.raises(ConfigError, match="exp"):
        monomialfn_from_dict([{"exp": [-1], "re": 1}])
    with pytest.raises(ConfigError):
        monomialfn_from_dict([{"exp": [1], "re": 1}, {"exp": [1, 0], "re": 1}])
