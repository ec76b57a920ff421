"""
Model Domains
Polydiscs and balls centered at the origin, membership, volumes and log-shadows
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Sequence, Tuple

import numpy as np

from errors import ConfigError, InputError


class DomainKind(Enum):
    POLYDISC = "polydisc"
    BALL = "ball"


@dataclass(frozen=True)
class ModelDomain:
    """A bounded Reinhardt domain: polydisc with per-coordinate radii, or ball of one radius"""
    kind: DomainKind
    radii: Tuple[float, ...]  # length n for polydisc, length 1 for ball
    dimension: int

    def __post_init__(self):
        if self.dimension < 1:
            raise InputError(f"Domain dimension must be >= 1, got {self.dimension}")
        if not self.radii:
            raise InputError("Domain needs at least one radius")
        for r in self.radii:
            if not (math.isfinite(r) and r > 0):
                raise InputError(f"Radii must be positive and finite, got {list(self.radii)}")
        if self.kind == DomainKind.POLYDISC and len(self.radii) != self.dimension:
            raise InputError(
                f"Polydisc needs {self.dimension} radii, got {len(self.radii)}"
            )
        if self.kind == DomainKind.BALL and len(self.radii) != 1:
            raise InputError(f"Ball takes a single radius, got {list(self.radii)}")

    @property
    def radius(self) -> float:
        """Ball radius (first radius for a polydisc)"""
        return self.radii[0]

    def bounding_radii(self) -> np.ndarray:
        """Radii of the smallest coordinate polydisc containing the domain"""
        if self.kind == DomainKind.POLYDISC:
            return np.array(self.radii, dtype=float)
        return np.full(self.dimension, self.radius)


def polydisc(radii: Sequence[float]) -> ModelDomain:
    radii = tuple(float(r) for r in radii)
    return ModelDomain(DomainKind.POLYDISC, radii, len(radii))


def ball(radius: float, dim: int) -> ModelDomain:
    return ModelDomain(DomainKind.BALL, (float(radius),), int(dim))


def unit_disc() -> ModelDomain:
    return polydisc([1.0])


@dataclass(frozen=True)
class LogShadow:
    """
    Image of D ∩ (C*)^n under z -> (log|z_1|, ..., log|z_n|).

    Polydisc: affine constraints x_j < log R_j, stored as (normal, offset) pairs
    meaning normal·x < offset. Ball: the single convex constraint
    sum_j exp(2 x_j) < R^2.
    """
    dimension: int
    constraints: Tuple[Tuple[Tuple[float, ...], float], ...]
    ball_radius: float = 0.0  # > 0 only for the convex ball constraint

    def contains(self, x: Sequence[float]) -> bool:
        x = np.asarray(x, dtype=float)
        for normal, offset in self.constraints:
            if not float(np.dot(normal, x)) < offset:
                return False
        if self.ball_radius > 0:
            return float(np.sum(np.exp(2 * x))) < self.ball_radius ** 2
        return True


def log_shadow(domain: ModelDomain) -> LogShadow:
    """Describe the domain in log-radius coordinates"""
    n = domain.dimension
    if domain.kind == DomainKind.POLYDISC:
        constraints = []
        for j, r in enumerate(domain.radii):
            normal = tuple(1.0 if i == j else 0.0 for i in range(n))
            constraints.append((normal, math.log(r)))
        return LogShadow(n, tuple(constraints))
    return LogShadow(n, (), ball_radius=domain.radius)


def _as_point(domain_dim: int, point) -> np.ndarray:
    z = np.asarray(point, dtype=complex).reshape(-1)
    if z.shape[0] != domain_dim:
        raise InputError(f"Point has length {z.shape[0]}, domain dimension is {domain_dim}")
    return z


def contains(domain: ModelDomain, point) -> bool:
    """True iff the point lies in the open domain"""
    z = _as_point(domain.dimension, point)
    return bool(contains_many(domain, z[np.newaxis, :])[0])


def contains_many(domain: ModelDomain, points: np.ndarray) -> np.ndarray:
    """Vectorized membership for an (m, n) array of complex points"""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim != 2 or pts.shape[1] != domain.dimension:
        raise InputError(
            f"Expected points of shape (m, {domain.dimension}), got {pts.shape}"
        )
    moduli_sq = np.abs(pts) ** 2
    if domain.kind == DomainKind.POLYDISC:
        return np.all(moduli_sq < np.asarray(domain.radii) ** 2, axis=1)
    return moduli_sq.sum(axis=1) < domain.radius ** 2


def euclidean_volume(domain: ModelDomain) -> float:
    """2n-dimensional Lebesgue volume"""
    if domain.kind == DomainKind.POLYDISC:
        return float(np.prod([math.pi * r * r for r in domain.radii]))
    n = domain.dimension
    return math.pi ** n * domain.radius ** (2 * n) / math.factorial(n)


def domain_from_dict(data: Dict, field: str = "domain") -> ModelDomain:
    """
    Build a domain from its JSON fragment:
    {"kind":"polydisc","radii":[1.0,1.0]} or {"kind":"ball","radius":1.0,"dim":2}
    """
    if not isinstance(data, dict):
        raise ConfigError(field, "expected an object")
    kind = str(data.get("kind", "")).lower()
    try:
        if kind == DomainKind.POLYDISC.value:
            radii = data.get("radii")
            if not isinstance(radii, list) or not radii:
                raise ConfigError(f"{field}.radii", "expected a non-empty list of radii")
            return polydisc([float(r) for r in radii])
        if kind == DomainKind.BALL.value:
            if "radius" not in data or "dim" not in data:
                raise ConfigError(field, "ball needs 'radius' and 'dim'")
            return ball(float(data["radius"]), int(data["dim"]))
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(field, str(e)) from e
    raise ConfigError(f"{field}.kind", f"unknown domain kind {data.get('kind')!r}")


def domain_to_dict(domain: ModelDomain) -> Dict:
    if domain.kind == DomainKind.POLYDISC:
        return {"kind": "polydisc", "radii": list(domain.radii)}
    return {"kind": "ball", "radius": domain.radius, "dim": domain.dimension}


def describe(domain: ModelDomain) -> str:
    if domain.kind == DomainKind.POLYDISC:
        if domain.dimension == 1:
            return f"disc(R={domain.radius:g})"
        return "polydisc(" + ", ".join(f"{r:g}" for r in domain.radii) + ")"
    return f"ball(n={domain.dimension}, R={domain.radius:g})"
