"""
Monomial Ideals
Staircase ideals at the origin: multiplier ideals I(p*phi) and plus-ideals of toric weights
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from errors import ConfigError, InputError
from hilbert import Exponent, MonomialFn
from weights import JUMP_TOLERANCE, Number, ToricWeight, as_rational, snapped_floor


@dataclass(frozen=True)
class MonomialIdeal:
    """
    Ideal generated by the monomials z^g, g in generators.

    alpha is in the ideal iff alpha >= g componentwise for some generator.
    The full ring is the single generator 0.
    """
    generators: Tuple[Exponent, ...]
    dimension: int

    def __post_init__(self):
        if not self.generators:
            raise InputError("A monomial ideal needs at least one generator")
        for g in self.generators:
            if len(g) != self.dimension or any(k < 0 for k in g):
                raise InputError(f"Bad generator {list(g)} for dimension {self.dimension}")
        for i, g in enumerate(self.generators):
            for j, h in enumerate(self.generators):
                if i != j and _dominates(g, h):
                    raise InputError(f"Generators {list(g)} and {list(h)} do not form an antichain")

    def contains(self, alpha: Sequence[int]) -> bool:
        alpha = tuple(alpha)
        if len(alpha) != self.dimension:
            raise InputError(f"Exponent {list(alpha)} does not match ideal dimension {self.dimension}")
        return any(_dominates(alpha, g) for g in self.generators)

    __contains__ = contains

    def is_full(self) -> bool:
        return self.generators == ((0,) * self.dimension,)

    def issubset(self, other: "MonomialIdeal") -> bool:
        """Staircase comparison: every generator of self lies in other"""
        return all(other.contains(g) for g in self.generators)

    def describe(self) -> str:
        if self.is_full():
            return "(1)"
        names = []
        for g in self.generators:
            names.append("*".join(
                (f"z{j + 1}" if k == 1 else f"z{j + 1}^{k}") for j, k in enumerate(g) if k > 0
            ))
        return "(" + ", ".join(names) + ")"


def _dominates(alpha: Sequence[int], g: Sequence[int]) -> bool:
    return all(a >= b for a, b in zip(alpha, g))


def monomial_ideal(generators: Sequence[Sequence[int]]) -> MonomialIdeal:
    """Build an ideal from any generating set, keeping only the minimal corners"""
    gens = sorted({tuple(int(k) for k in g) for g in generators})
    if not gens:
        raise InputError("A monomial ideal needs at least one generator")
    dims = {len(g) for g in gens}
    if len(dims) != 1:
        raise InputError(f"Generators have mixed lengths {sorted(dims)}")
    minimal = [g for g in gens if not any(h != g and _dominates(g, h) for h in gens)]
    return MonomialIdeal(tuple(minimal), dims.pop())


def full_ring(dimension: int) -> MonomialIdeal:
    return MonomialIdeal(((0,) * dimension,), dimension)


def _staircase_ideal(thresholds: Sequence[Number]) -> MonomialIdeal:
    """Single generator g_j = least integer with g_j + 1 > threshold_j"""
    return MonomialIdeal((tuple(max(0, snapped_floor(x)) for x in thresholds),), len(thresholds))


def multiplier_ideal(weight: ToricWeight) -> MonomialIdeal:
    """
    I(phi) at the origin: |z^alpha|^2 e^{-phi} is integrable near o iff
    alpha_j + 1 > d_j/2 in every coordinate.
    """
    return _staircase_ideal([_half(d) for d in weight.effective_exact()])


def _half(value: Number) -> Number:
    if isinstance(value, (int, Fraction)):
        return Fraction(value) / 2
    return value / 2


def plus_ideal(weight: ToricWeight, c: float) -> MonomialIdeal:
    """
    I_+(2c*phi) = I((2c + eps)*phi) for small eps > 0.

    The staircase of p -> I(p*phi) changes only where p*d_j/2 crosses an
    integer, and at such a crossing I(p*phi) already equals the ideal just
    above it; the generator is therefore floor(c*d_j) with exact rational
    arithmetic when the coefficients allow it.
    """
    if not (isinstance(c, (int, Fraction)) or math.isfinite(c)) or c <= 0:
        raise InputError(f"c must be positive and finite, got {c}")
    exact_c = as_rational(c)
    factor = exact_c if exact_c is not None else c
    return _staircase_ideal([factor * d for d in weight.effective_exact()])


def jump_points(weight: ToricWeight, max_exponent: int = 8) -> List[float]:
    """Exponents p where I(p*phi) changes: 2(k+1)/d_j for k = 0..max_exponent"""
    points: List = []
    for d in weight.effective_exact():
        if d <= 0:
            continue
        exact = as_rational(d)
        for k in range(max_exponent + 1):
            points.append(Fraction(2 * (k + 1)) / exact if exact is not None else 2 * (k + 1) / d)
    merged: List[float] = []
    for p in sorted(float(x) for x in points):
        if merged and abs(p - merged[-1]) <= JUMP_TOLERANCE * max(1.0, p):
            continue
        merged.append(p)
    return merged


def germ_in_ideal(f: MonomialFn, ideal: MonomialIdeal) -> bool:
    """A monomial ideal contains f iff it contains every monomial of f"""
    if f.dimension != ideal.dimension:
        raise InputError(f"Function dimension {f.dimension} != ideal dimension {ideal.dimension}")
    return all(ideal.contains(alpha) for alpha in f.terms)


def ideal_from_dict(data: Dict, field: str = "ideal") -> MonomialIdeal:
    """Parse {"generators": [[1, 0], [0, 2]]}"""
    if not isinstance(data, dict):
        raise ConfigError(field, "expected an object")
    gens = data.get("generators")
    if not isinstance(gens, list) or not gens or not all(isinstance(g, list) and g for g in gens):
        raise ConfigError(f"{field}.generators", "expected a non-empty list of exponent lists")
    try:
        if any(int(k) != k or k < 0 for g in gens for k in g):
            raise ConfigError(f"{field}.generators", "exponents must be nonnegative integers")
        return monomial_ideal(gens)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{field}.generators", str(e)) from e


def ideal_to_dict(ideal: MonomialIdeal) -> Dict:
    return {"generators": [list(g) for g in ideal.generators]}
