"""
Weighted Hilbert Spaces
Monomial expansions, truncated bases, norms, Gram matrices and K_D(o)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from domains import ModelDomain, euclidean_volume
from errors import ConfigError, DivergedNormError, InputError
from quadrature import (
    DEFAULT_MC_SAMPLES,
    IntegralEstimate,
    RegionSample,
    monomial_mass,
    sample_region,
    zero_estimate,
)
from weights import SublevelRegion, ToricWeight

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]


@dataclass(frozen=True)
class MonomialFn:
    """Finite expansion sum_alpha F_alpha z^alpha; zero coefficients are never stored"""
    terms: Dict[Exponent, complex] = field(default_factory=dict)
    dimension: int = 1

    def __post_init__(self):
        if self.dimension < 1:
            raise InputError(f"Function dimension must be >= 1, got {self.dimension}")
        cleaned = {}
        for alpha, coeff in self.terms.items():
            alpha = tuple(int(k) for k in alpha)
            if len(alpha) != self.dimension or any(k < 0 for k in alpha):
                raise InputError(f"Bad exponent {list(alpha)} for dimension {self.dimension}")
            coeff = complex(coeff)
            if coeff != 0:
                cleaned[alpha] = cleaned.get(alpha, 0) + coeff
        object.__setattr__(self, "terms", {a: c for a, c in cleaned.items() if c != 0})

    @property
    def exponents(self) -> List[Exponent]:
        return sorted(self.terms, key=graded_lex_key)

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, alpha: Sequence[int]) -> complex:
        return self.terms.get(tuple(alpha), 0j)

    def restricted(self, exponents) -> "MonomialFn":
        keep = set(map(tuple, exponents))
        return MonomialFn({a: c for a, c in self.terms.items() if a in keep}, self.dimension)

    def __add__(self, other: "MonomialFn") -> "MonomialFn":
        _same_dimension(self, other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0) + c
        return MonomialFn(terms, self.dimension)

    def __sub__(self, other: "MonomialFn") -> "MonomialFn":
        return self + other.scaled(-1)

    def scaled(self, factor: complex) -> "MonomialFn":
        return MonomialFn({a: factor * c for a, c in self.terms.items()}, self.dimension)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        total = np.zeros(pts.shape[0], dtype=complex)
        for alpha, coeff in self.terms.items():
            total += coeff * np.prod(pts ** np.asarray(alpha), axis=1)
        return total


def _same_dimension(a: MonomialFn, b: MonomialFn):
    if a.dimension != b.dimension:
        raise InputError(f"Functions live in dimensions {a.dimension} and {b.dimension}")


def monomial(alpha: Sequence[int], coeff: complex = 1.0) -> MonomialFn:
    alpha = tuple(int(k) for k in alpha)
    return MonomialFn({alpha: coeff}, len(alpha))


def constant_one(dimension: int) -> MonomialFn:
    return monomial((0,) * dimension)


def graded_lex_key(alpha: Sequence[int]) -> Tuple:
    """Total degree first, then lexicographic with z_1 the largest variable"""
    return (sum(alpha),) + tuple(-k for k in alpha)


def _exponents_up_to(degree: int, n: int) -> Iterator[Exponent]:
    if n == 1:
        for k in range(degree + 1):
            yield (k,)
        return
    for k in range(degree + 1):
        for rest in _exponents_up_to(degree - k, n - 1):
            yield (k,) + rest


@dataclass(frozen=True)
class BasisTruncation:
    """All exponents of total degree <= max_degree, graded-lex ordered"""
    max_degree: int
    dimension: int
    exponents: Tuple[Exponent, ...] = ()

    def __post_init__(self):
        if self.max_degree < 0:
            raise InputError(f"Truncation degree must be >= 0, got {self.max_degree}")
        if self.dimension < 1:
            raise InputError(f"Basis dimension must be >= 1, got {self.dimension}")
        if not self.exponents:
            exps = sorted(_exponents_up_to(self.max_degree, self.dimension), key=graded_lex_key)
            object.__setattr__(self, "exponents", tuple(exps))

    def __len__(self) -> int:
        return len(self.exponents)

    def index(self, alpha: Sequence[int]) -> int:
        return self.exponents.index(tuple(alpha))

    def covers(self, f: MonomialFn) -> bool:
        return f.dimension == self.dimension and f.degree <= self.max_degree


def truncation(max_degree: int, dimension: int) -> BasisTruncation:
    return BasisTruncation(int(max_degree), int(dimension))


def weighted_norms(basis: BasisTruncation, region: SublevelRegion,
                   weight_phi: Optional[ToricWeight] = None) -> List[IntegralEstimate]:
    return norms_for(basis.exponents, region, weight_phi)


def norms_for(exponents: Sequence[Exponent], region: SublevelRegion,
              weight_phi: Optional[ToricWeight] = None) -> List[IntegralEstimate]:
    norms = [monomial_mass(alpha, region, weight_phi) for alpha in exponents]
    _log_norm_summary(norms)
    return norms


def gram_matrix(basis: BasisTruncation, region: SublevelRegion,
                weight_phi: Optional[ToricWeight] = None) -> np.ndarray:
    """
    Entry (j, k) = integral of z^{alpha_j} conj(z^{alpha_k}) e^{-phi}.

    Rotation invariance of Reinhardt regions and toric weights kills every
    off-diagonal entry, so only the diagonal is integrated.
    """
    return gram_for(basis.exponents, region, weight_phi)


def gram_for(exponents: Sequence[Exponent], region: SublevelRegion,
             weight_phi: Optional[ToricWeight] = None) -> np.ndarray:
    norms = norms_for(exponents, region, weight_phi)
    for alpha, est in zip(exponents, norms):
        if est.diverged:
            raise DivergedNormError(alpha)
    return np.diag(np.array([est.value for est in norms], dtype=complex))


@dataclass(frozen=True)
class MonteCarloGram:
    matrix: np.ndarray
    std_error: np.ndarray
    draws: int


def _mc_design(exponents: Sequence[Exponent], region: SublevelRegion,
               weight_phi: Optional[ToricWeight], samples: int, seed: int) -> Tuple[np.ndarray, RegionSample]:
    """W_ij = z_i^{alpha_j} e^{-phi(z_i)/2} on the accepted points of one seeded sample"""
    sample = sample_region(region, samples, seed)
    pts = sample.points
    exps = np.asarray(exponents, dtype=int)
    d = weight_phi.effective() if weight_phi is not None else np.zeros(region.dimension)
    with np.errstate(divide="ignore"):
        damping = np.prod(np.abs(pts) ** (-d / 2), axis=1)
    W = np.empty((pts.shape[0], len(exps)), dtype=complex)
    for j, alpha in enumerate(exps):
        W[:, j] = np.prod(pts ** alpha, axis=1) * damping
    return W, sample


def mc_gram_for(exponents: Sequence[Exponent], region: SublevelRegion,
                weight_phi: Optional[ToricWeight] = None,
                samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> MonteCarloGram:
    """
    Gram matrix estimated from one seeded sample set of the region.

    With W as in _mc_design the estimate is V/N * W^T conj(W), Hermitian and
    positive semidefinite as built.
    """
    W, sample = _mc_design(exponents, region, weight_phi, samples, seed)
    n = sample.draws
    scale = sample.box_volume / n
    matrix = scale * (W.T @ W.conj())
    second = np.abs(W.T) ** 2 @ np.abs(W) ** 2 / n
    variance = np.maximum(second - np.abs(matrix / sample.box_volume) ** 2, 0.0)
    std_error = sample.box_volume * np.sqrt(variance / (n - 1))
    return MonteCarloGram(matrix, std_error, n)


def mc_inner_product(f: MonomialFn, g: MonomialFn, region: SublevelRegion,
                     weight_phi: Optional[ToricWeight] = None,
                     samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> Tuple[complex, float]:
    """
    Monte Carlo estimate of the integral of f * conj(g) e^{-phi} over the region.

    Returns the estimate and the standard error of its real part.
    """
    if f.dimension != region.dimension or g.dimension != region.dimension:
        raise InputError(f"Function dimensions {f.dimension}, {g.dimension} != region dimension {region.dimension}")
    exponents = sorted(set(f.terms) | set(g.terms))
    if not exponents:
        return 0j, 0.0
    W, sample = _mc_design(exponents, region, weight_phi, samples, seed)
    fv = W @ np.array([f.coefficient(alpha) for alpha in exponents], dtype=complex)
    gv = W @ np.array([g.coefficient(alpha) for alpha in exponents], dtype=complex)
    products = sample.box_volume * fv * gv.conj()
    n = sample.draws
    estimate = complex(products.sum() / n)
    second = float(np.sum(np.real(products) ** 2)) / n
    variance = max(second - estimate.real ** 2, 0.0)
    return estimate, float(np.sqrt(variance / (n - 1)))


def mc_gram_matrix(basis: BasisTruncation, region: SublevelRegion,
                   weight_phi: Optional[ToricWeight] = None,
                   samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> MonteCarloGram:
    return mc_gram_for(basis.exponents, region, weight_phi, samples, seed)


def function_mass(f: MonomialFn, region: SublevelRegion,
                  weight_phi: Optional[ToricWeight] = None) -> IntegralEstimate:
    """Integral of |f|^2 e^{-phi}: sum of |F_alpha|^2 ||z^alpha||^2 by orthogonality"""
    if f.dimension != region.dimension:
        raise InputError(f"Function dimension {f.dimension} != region dimension {region.dimension}")
    total = zero_estimate()
    for alpha, coeff in f.terms.items():
        total = total + monomial_mass(alpha, region, weight_phi).scaled(abs(coeff) ** 2)
    return total


def bergman_at_origin(domain: ModelDomain) -> float:
    """K_D(o) = 1/vol(D): only the constant survives at the origin"""
    return 1.0 / euclidean_volume(domain)


def monomialfn_from_dict(data: List[Dict], field_name: str = "function") -> MonomialFn:
    """Parse [{"exp":[0],"re":1,"im":0}, ...]; "exponent" is accepted for "exp" """
    if not isinstance(data, list) or not data:
        raise ConfigError(field_name, "expected a non-empty list of terms")
    terms: Dict[Exponent, complex] = {}
    dimension = None
    for i, term in enumerate(data):
        where = f"{field_name}[{i}]"
        if not isinstance(term, dict):
            raise ConfigError(where, "expected an object")
        exp = term.get("exp", term.get("exponent"))
        if not isinstance(exp, list) or not exp:
            raise ConfigError(f"{where}.exp", "expected a non-empty list of integers")
        try:
            alpha = tuple(int(k) for k in exp)
            coeff = complex(float(term.get("re", 0.0)), float(term.get("im", 0.0)))
        except (TypeError, ValueError) as e:
            raise ConfigError(where, str(e)) from e
        if any(k < 0 or k != v for k, v in zip(alpha, exp)):
            raise ConfigError(f"{where}.exp", f"exponents must be nonnegative integers, got {exp}")
        if dimension is None:
            dimension = len(alpha)
        elif len(alpha) != dimension:
            raise ConfigError(f"{where}.exp", f"length {len(alpha)} differs from {dimension}")
        terms[alpha] = terms.get(alpha, 0) + coeff
    return MonomialFn(terms, dimension)


def monomialfn_to_dict(f: MonomialFn) -> List[Dict]:
    return [
        {"exp": list(alpha), "re": f.terms[alpha].real, "im": f.terms[alpha].imag}
        for alpha in f.exponents
    ]


def describe_function(f: MonomialFn) -> str:
    if f.is_zero():
        return "0"
    parts = []
    for alpha in f.exponents:
        coeff = f.terms[alpha]
        mono = "*".join(
            (f"z{j + 1}" if k == 1 else f"z{j + 1}^{k}") for j, k in enumerate(alpha) if k > 0
        )
        c = coeff.real if coeff.imag == 0 else coeff
        if not mono:
            parts.append(f"{c:g}")
        elif c == 1:
            parts.append(mono)
        else:
            parts.append(f"{c:g}*{mono}")
    return " + ".join(parts)


def _log_norm_summary(norms: List[IntegralEstimate]):
    finite = [est.value for est in norms if not est.diverged]
    if finite:
        logger.debug("Norms: %d finite, range [%.3e, %.3e]", len(finite), min(finite), max(finite))
