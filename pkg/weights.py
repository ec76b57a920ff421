"""
Toric Weights
phi(z) = scale * sum_j c_j log|z_j|, sublevel regions {phi < -t} inside a model domain
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from domains import DomainKind, ModelDomain, contains_many
from errors import ConfigError, InputError

Number = Union[int, float, Fraction]

# Largest denominator accepted when recognizing a float coefficient as a ratio of integers
RATIONAL_MAX_DENOMINATOR = 10 ** 4
# Coincidence tolerance for jump points built from irrational coefficients
JUMP_TOLERANCE = 1e-12


def _parse_number(value) -> Number:
    """Accept ints, floats, Fractions and strings such as "2/3" """
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return float(value)


def as_rational(value: Number) -> Optional[Fraction]:
    """Exact rational for ints/Fractions, or for floats within JUMP_TOLERANCE of a small ratio"""
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if not math.isfinite(value):
        return None
    candidate = Fraction(value).limit_denominator(RATIONAL_MAX_DENOMINATOR)
    if abs(float(candidate) - value) <= JUMP_TOLERANCE * max(1.0, abs(value)):
        return candidate
    return None


def snapped_floor(value: Number) -> int:
    """floor(value), treating values within JUMP_TOLERANCE of an integer as that integer"""
    exact = as_rational(value)
    if exact is not None:
        return math.floor(exact)
    nearest = round(value)
    if abs(value - nearest) <= JUMP_TOLERANCE * max(1.0, abs(value)):
        return int(nearest)
    return math.floor(value)


@dataclass(frozen=True)
class ToricWeight:
    """Diagonal toric weight; the effective coefficient vector is scale * coeffs"""
    coeffs: Tuple[Number, ...]
    scale: Number = 1

    def __post_init__(self):
        if not self.coeffs:
            raise InputError("Toric weight needs at least one coefficient")
        for c in self.coeffs:
            if not (math.isfinite(float(c)) and c >= 0):
                raise InputError(f"Coefficients must be finite and >= 0, got {list(self.coeffs)}")
        if not any(c > 0 for c in self.coeffs):
            raise InputError("At least one coefficient must be positive")
        if not (math.isfinite(float(self.scale)) and self.scale > 0):
            raise InputError(f"Scale must be positive and finite, got {self.scale}")

    @property
    def dimension(self) -> int:
        return len(self.coeffs)

    def effective(self) -> np.ndarray:
        """Scale folded into the coefficients, as floats"""
        return np.array([float(self.scale * c) for c in self.coeffs])

    def effective_exact(self) -> Tuple[Number, ...]:
        """Scale folded in, keeping Fractions exact where given"""
        return tuple(self.scale * c for c in self.coeffs)


def toric(coeffs: Sequence, scale=1) -> ToricWeight:
    return ToricWeight(tuple(_parse_number(c) for c in coeffs), _parse_number(scale))


def scaled(weight: ToricWeight, factor: Number) -> ToricWeight:
    """factor * weight (the p in I(p*phi))"""
    return ToricWeight(weight.coeffs, weight.scale * _parse_number(factor))


def combined(first: ToricWeight, second: ToricWeight) -> ToricWeight:
    """Sum of two toric weights as a single toric weight with unit scale"""
    if first.dimension != second.dimension:
        raise InputError(
            f"Cannot add weights of dimension {first.dimension} and {second.dimension}"
        )
    a, b = first.effective_exact(), second.effective_exact()
    return ToricWeight(tuple(x + y for x, y in zip(a, b)), 1)


def _check_dimension(weight: ToricWeight, n: int):
    if weight.dimension != n:
        raise InputError(f"Weight has dimension {weight.dimension}, point/domain has {n}")


def evaluate(weight: ToricWeight, point) -> float:
    """scale * sum c_j log|z_j|; -inf when some z_j = 0 with c_j > 0"""
    z = np.asarray(point, dtype=complex).reshape(-1)
    _check_dimension(weight, z.shape[0])
    return float(evaluate_many(weight, z[np.newaxis, :])[0])


def evaluate_many(weight: ToricWeight, points: np.ndarray) -> np.ndarray:
    """Vectorized evaluation on an (m, n) array"""
    pts = np.asarray(points, dtype=complex)
    _check_dimension(weight, pts.shape[1])
    d = weight.effective()
    moduli = np.abs(pts)
    total = np.zeros(pts.shape[0])
    with np.errstate(divide="ignore"):
        for j in range(pts.shape[1]):
            if d[j] > 0:
                total = total + d[j] * np.log(moduli[:, j])
    return total


def weight_sup(weight: ToricWeight, domain: ModelDomain) -> float:
    """
    Supremum of the weight over the closed domain.

    Maximizes the affine form d·x over the closure of the log-shadow. For the
    polydisc the maximum sits at the corner x_j = log R_j; for the ball the
    Lagrange condition gives exp(2 x_j) = R^2 d_j / sum(d) on the support of d.
    """
    _check_dimension(weight, domain.dimension)
    d = weight.effective()
    if domain.kind == DomainKind.POLYDISC:
        return float(sum(dj * math.log(r) for dj, r in zip(d, domain.radii) if dj > 0))
    total = d.sum()
    r2 = domain.radius ** 2
    return float(sum(0.5 * dj * math.log(r2 * dj / total) for dj in d if dj > 0))


def validate_negative(weight: ToricWeight, domain: ModelDomain) -> bool:
    """True iff the weight is <= 0 on the closed domain"""
    return weight_sup(weight, domain) <= 1e-12


@dataclass(frozen=True)
class SublevelRegion:
    """The open set {z in D : psi(z) < -t}"""
    domain: ModelDomain
    weight: ToricWeight
    threshold: float = 0.0

    def __post_init__(self):
        _check_dimension(self.weight, self.domain.dimension)
        if not (math.isfinite(self.threshold) and self.threshold >= 0):
            raise InputError(f"Threshold must be finite and >= 0, got {self.threshold}")

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def at(self, threshold: float) -> "SublevelRegion":
        return SublevelRegion(self.domain, self.weight, float(threshold))


def region_below_log(domain: ModelDomain, weight: ToricWeight, r: float) -> SublevelRegion:
    """{phi < log r} for r in (0, 1]"""
    if not (0 < r <= 1):
        raise InputError(f"r must lie in (0, 1], got {r}")
    return SublevelRegion(domain, weight, -math.log(r))


def in_sublevel(region: SublevelRegion, point) -> bool:
    z = np.asarray(point, dtype=complex).reshape(-1)
    _check_dimension(region.weight, z.shape[0])
    return bool(in_sublevel_many(region, z[np.newaxis, :])[0])


def in_sublevel_many(region: SublevelRegion, points: np.ndarray) -> np.ndarray:
    inside = contains_many(region.domain, points)
    return inside & (evaluate_many(region.weight, points) < -region.threshold)


def weight_from_dict(data: Dict, field: str = "weight") -> ToricWeight:
    """Parse {"type":"toric","coeffs":[2.0],"scale":1.0}; coefficients may be strings like "2/3" """
    if not isinstance(data, dict):
        raise ConfigError(field, "expected an object")
    kind = str(data.get("type", "toric")).lower()
    if kind != "toric":
        raise ConfigError(f"{field}.type", f"unsupported weight type {data.get('type')!r}")
    coeffs = data.get("coeffs")
    if not isinstance(coeffs, list) or not coeffs:
        raise ConfigError(f"{field}.coeffs", "expected a non-empty list")
    try:
        return toric(coeffs, data.get("scale", 1))
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ConfigError(field, str(e)) from e


def _number_to_json(value: Number):
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    return value


def weight_to_dict(weight: ToricWeight) -> Dict:
    return {
        "type": "toric",
        "coeffs": [_number_to_json(c) for c in weight.coeffs],
        "scale": _number_to_json(weight.scale),
    }
