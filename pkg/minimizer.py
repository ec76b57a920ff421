"""
Minimal L2 Integrals
C_{f,I}(region) = inf { integral of |f~|^2 e^{-phi} : (f~ - f, o) in I } and its minimizer
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from errors import ConditioningError, DivergenceError, InputError
from hilbert import (
    Exponent,
    MonomialFn,
    BasisTruncation,
    function_mass,
    gram_for,
    mc_gram_for,
    mc_inner_product,
    norms_for,
    truncation,
)
from ideals import MonomialIdeal
from quadrature import DEFAULT_MC_SAMPLES, is_divergent, radial_exponents
from weights import SublevelRegion, ToricWeight

logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 12
CONVERGENCE_STEP = 4
CONVERGENCE_RTOL = 1e-8
CONDITION_CAP = 1e12
_TINY = 1e-300


class MinimizationMethod(Enum):
    ORTHOGONAL = "Orthogonal"
    LEAST_SQUARES = "LeastSquares"


class GramSource(Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


@dataclass
class MinimizationResult:
    value: float
    minimizer: Optional[MonomialFn]
    method: MinimizationMethod
    residual_pythagoras: Optional[float] = None
    diverged: bool = False
    abs_error: Optional[float] = None
    converged: Optional[bool] = None
    # Monte Carlo Gram only: standard error of residual_pythagoras
    residual_std_error: Optional[float] = None

    def __post_init__(self):
        if self.value == math.inf and self.minimizer is not None:
            raise InputError("An infinite minimal integral has no minimizer")


def _diverged_result(method: MinimizationMethod) -> MinimizationResult:
    return MinimizationResult(math.inf, None, method, diverged=True)


def minimal_l2(f: MonomialFn, ideal: MonomialIdeal, region: SublevelRegion,
               weight_phi: Optional[ToricWeight] = None,
               basis: Optional[BasisTruncation] = None,
               method: MinimizationMethod = MinimizationMethod.ORTHOGONAL,
               gram: GramSource = GramSource.EXACT,
               samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
               check_convergence: bool = True) -> MinimizationResult:
    """
    Minimal weighted L2 integral over the region among f~ with f~ - f in the ideal.

    ORTHOGONAL is exact on Reinhardt regions: monomials outside the ideal keep
    their coefficients, the rest drop out. LEAST_SQUARES minimizes the Gram
    quadratic form over a truncated basis with the coefficients outside the
    ideal fixed; with gram=MONTE_CARLO the Gram matrix comes from one seeded
    sample set.
    """
    n = region.dimension
    if f.dimension != n or ideal.dimension != n:
        raise InputError(
            f"Dimensions differ: function {f.dimension}, ideal {ideal.dimension}, region {n}"
        )
    if method == MinimizationMethod.ORTHOGONAL:
        return _orthogonal(f, ideal, region, weight_phi)

    if basis is None:
        basis = truncation(max(DEFAULT_DEGREE, f.degree), n)
    elif not basis.covers(f):
        raise InputError(
            f"Basis of degree {basis.max_degree} does not contain every exponent of f (degree {f.degree})"
        )
    result = _least_squares(f, ideal, region, weight_phi, basis.exponents, gram, samples, seed)
    if check_convergence and gram == GramSource.EXACT and not result.diverged:
        finer = truncation(basis.max_degree + CONVERGENCE_STEP, n)
        refined = _least_squares(f, ideal, region, weight_phi, finer.exponents, gram, samples, seed)
        change = abs(refined.value - result.value) / max(abs(result.value), _TINY)
        result.converged = change < CONVERGENCE_RTOL or refined.value == result.value
        if not result.converged:
            logger.warning(
                "Truncation at degree %d not converged: relative change %.3e at degree %d",
                basis.max_degree, change, finer.max_degree,
            )
    return result


def _orthogonal(f: MonomialFn, ideal: MonomialIdeal, region: SublevelRegion,
                weight_phi: Optional[ToricWeight]) -> MinimizationResult:
    fixed = [alpha for alpha in f.exponents if not ideal.contains(alpha)]
    minimizer = f.restricted(fixed)
    estimate = function_mass(minimizer, region, weight_phi)
    if estimate.diverged:
        return _diverged_result(MinimizationMethod.ORTHOGONAL)
    result = MinimizationResult(
        value=estimate.value,
        minimizer=minimizer,
        method=MinimizationMethod.ORTHOGONAL,
        abs_error=estimate.abs_error,
    )
    try:
        result.residual_pythagoras = pythagoras_residual(minimizer, f, region, weight_phi)
    except DivergenceError:
        logger.debug("f itself has infinite mass; Pythagoras residual not available")
    return result


def _split_indices(f: MonomialFn, ideal: MonomialIdeal, exponents: Sequence[Exponent],
                   divergent: Sequence[bool]) -> Tuple[Optional[List[int]], List[int]]:
    """(fixed, free) basis positions; fixed is None when a nonzero fixed term has infinite norm"""
    fixed, free = [], []
    for i, alpha in enumerate(exponents):
        if ideal.contains(alpha):
            if not divergent[i]:
                free.append(i)
        elif f.coefficient(alpha) != 0:
            if divergent[i]:
                return None, free
            fixed.append(i)
    return fixed, free


def _least_squares(f: MonomialFn, ideal: MonomialIdeal, region: SublevelRegion,
                   weight_phi: Optional[ToricWeight], exponents: Sequence[Exponent],
                   gram: GramSource, samples: int, seed: int) -> MinimizationResult:
    method = MinimizationMethod.LEAST_SQUARES
    n = region.dimension
    if gram == GramSource.EXACT:
        divergent = [est.diverged for est in norms_for(exponents, region, weight_phi)]
    else:
        divergent = [is_divergent(radial_exponents(alpha, weight_phi, n)) for alpha in exponents]
    fixed, free = _split_indices(f, ideal, exponents, divergent)
    if fixed is None:
        return _diverged_result(method)
    active = fixed + free
    active_exps = [exponents[i] for i in active]
    if not active_exps:
        return MinimizationResult(0.0, MonomialFn({}, n), method, residual_pythagoras=0.0)

    if gram == GramSource.EXACT:
        G = gram_for(active_exps, region, weight_phi)
    else:
        G = mc_gram_for(active_exps, region, weight_phi, samples, seed).matrix
    # the quadratic form is c^H H c with H = conj(G) for G_jk = <z^a_j, z^a_k>
    H = G.conj()
    k = len(fixed)
    c_fixed = np.array([f.coefficient(exponents[i]) for i in fixed], dtype=complex)
    c_free = _solve_free(H, k, c_fixed)
    coeffs = np.concatenate([c_fixed, c_free])
    value = max(float(np.real(coeffs.conj() @ H @ coeffs)), 0.0)
    minimizer = MonomialFn(dict(zip(active_exps, coeffs)), n)

    # f restricted to the active basis is the admissible competitor
    c_hat = np.array([f.coefficient(alpha) for alpha in active_exps], dtype=complex)
    if gram == GramSource.EXACT:
        residual = _gram_pythagoras(H, coeffs, c_hat)
        return MinimizationResult(value, minimizer, method, residual_pythagoras=residual)

    f_hat = MonomialFn(dict(zip(active_exps, c_hat)), n)
    full = max(float(np.real(c_hat.conj() @ H @ c_hat)), _TINY)
    residual, residual_se = _mc_pythagoras(minimizer, f_hat, region, weight_phi, samples, seed)
    _, value_se = mc_inner_product(minimizer, minimizer, region, weight_phi, samples, seed)
    return MinimizationResult(value, minimizer, method, residual_pythagoras=residual / full,
                              abs_error=value_se, residual_std_error=residual_se / full)


def _solve_free(H: np.ndarray, k: int, c_fixed: np.ndarray) -> np.ndarray:
    """Normal equations H_UU c_U = -H_UF c_F with Jacobi scaling and a Cholesky solve"""
    H_uu = H[k:, k:]
    if H_uu.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    rhs = -H[k:, :k] @ c_fixed
    diag = np.real(np.diag(H_uu))
    if np.any(diag <= 0):
        raise ConditioningError(math.inf, H_uu.shape[0], CONDITION_CAP)
    scale = 1.0 / np.sqrt(diag)
    S = (H_uu * scale[:, np.newaxis]) * scale[np.newaxis, :]
    S = 0.5 * (S + S.conj().T)
    eigs = np.linalg.eigvalsh(S)
    cond = math.inf if eigs[0] <= 0 else float(eigs[-1] / eigs[0])
    if cond > CONDITION_CAP:
        raise ConditioningError(cond, H_uu.shape[0], CONDITION_CAP)
    y = linalg.cho_solve(linalg.cho_factor(S, lower=True), scale * rhs)
    return scale * y


def _gram_pythagoras(H: np.ndarray, c_t: np.ndarray, c_hat: np.ndarray) -> float:
    def norm(c):
        return float(np.real(c.conj() @ H @ c))
    full = norm(c_hat)
    return abs(norm(c_t) + norm(c_hat - c_t) - full) / max(full, _TINY)


def _independent_seed(seed: int) -> int:
    """A seed whose sample batches never coincide with those of `seed`"""
    return int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])


def _mc_pythagoras(f_t: MonomialFn, f_hat: MonomialFn, region: SublevelRegion,
                   weight_phi: Optional[ToricWeight], samples: int, seed: int) -> Tuple[float, float]:
    """
    ‖F_t‖² + ‖F̂ - F_t‖² - ‖F̂‖² = -2 Re <F_t, F̂ - F_t>, estimated on a sample
    independent of the one the Gram matrix was fitted on; returns the absolute
    defect and its standard error.
    """
    ip, se = mc_inner_product(f_t, f_hat - f_t, region, weight_phi, samples, _independent_seed(seed))
    return 2 * abs(ip.real), 2 * se


def pythagoras_residual(f_t: MonomialFn, f_hat: MonomialFn, region: SublevelRegion,
                        weight_phi: Optional[ToricWeight] = None) -> float:
    """|‖F_t‖² + ‖F̂ - F_t‖² - ‖F̂‖²| / ‖F̂‖²"""
    masses = []
    for g in (f_t, f_hat - f_t, f_hat):
        est = function_mass(g, region, weight_phi)
        if est.diverged:
            raise DivergenceError("Pythagoras identity needs finite masses")
        masses.append(est.value)
    a, b, c = masses
    return abs(a + b - c) / max(c, _TINY)
