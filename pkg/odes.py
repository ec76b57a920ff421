"""
Cutoffs and ODE Pair
The ramp b, its primitive v, the mollified family v_eps, and the closed-form
solution (u, s) of the extension ODE system
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import integrate

from errors import InputError

SERIES_CUTOFF = 1e-4
BUMP_EPSABS = 1e-12


@dataclass(frozen=True)
class CutoffPair:
    """
    b rises linearly from 0 at -t0-B to 1 at -t0; v(t) is the integral of b from 0 to t.

    max{t, -t0-B} <= v(t) <= max{t, -t0}.
    """
    t0: float
    B: float

    def b(self, t):
        return np.clip((np.asarray(t, dtype=float) + self.t0 + self.B) / self.B, 0.0, 1.0)

    def primitive(self, t):
        """Integral of b over (-inf, t)"""
        t = np.asarray(t, dtype=float)
        start = -self.t0 - self.B
        ramp = (t - start) ** 2 / (2 * self.B)
        flat = self.B / 2 + (t + self.t0)
        return np.where(t <= start, 0.0, np.where(t < -self.t0, ramp, flat))

    def v(self, t):
        return self.primitive(t) - (self.B / 2 + self.t0)


def cutoff(t0: float, B: float) -> CutoffPair:
    if not (math.isfinite(B) and B > 0):
        raise InputError(f"B must be positive and finite, got {B}")
    if not (math.isfinite(t0) and t0 >= 0):
        raise InputError(f"t0 must be finite and >= 0, got {t0}")
    return CutoffPair(float(t0), float(B))


# ---------------------------------------------------------------------------
# bump kernel
# ---------------------------------------------------------------------------

def _bump_shape(s: float) -> float:
    if abs(s) >= 1:
        return 0.0
    return math.exp(-1.0 / (1.0 - s * s))


@lru_cache(maxsize=None)
def _bump_normalizer() -> float:
    value, _ = integrate.quad(_bump_shape, -1.0, 1.0, epsabs=BUMP_EPSABS, epsrel=1e-13)
    return value


@lru_cache(maxsize=None)
def _bump_variance() -> float:
    value, _ = integrate.quad(lambda s: s * s * _bump_shape(s), -1.0, 1.0,
                              epsabs=BUMP_EPSABS, epsrel=1e-13)
    return value / _bump_normalizer()


def _bump_moments(y: float) -> Tuple[float, float, float]:
    """Partial moments of the normalized bump over (-1, y): mass, first, second"""
    if y <= -1:
        return 0.0, 0.0, 0.0
    if y >= 1:
        return 1.0, 0.0, _bump_variance()
    z = _bump_normalizer()
    moments = []
    for power in range(3):
        value, _ = integrate.quad(lambda s: s ** power * _bump_shape(s), -1.0, y,
                                  epsabs=BUMP_EPSABS, epsrel=1e-13)
        moments.append(value / z)
    return moments[0], moments[1], moments[2]


def bump_integrals(y: float) -> Tuple[float, float, float]:
    """
    (k0, k1, k2) at y for the unit bump rho: k0 is its CDF, k1 and k2 its first
    and second iterated integrals, k1(y) = int (y-s) rho, k2(y) = int (y-s)^2/2 rho.
    """
    if y >= 1:
        return 1.0, y, 0.5 * (y * y + _bump_variance())
    mass, first, second = _bump_moments(y)
    k0 = min(max(mass, 0.0), 1.0)
    k1 = max(y * mass - first, 0.0)
    k2 = max(0.5 * (y * y * mass - 2 * y * first + second), 0.0)
    return k0, k1, k2


@dataclass(frozen=True)
class MollifiedCutoff:
    """
    v_eps: the ramp derivative 1/(B-4eps) on (-t0-B+2eps, -t0-2eps) smoothed by a bump of
    half-width eps/4, integrated twice and shifted so that v_eps(0) = 0.
    """
    eps: float
    t0: float
    B: float

    @property
    def lower(self) -> float:
        return -self.t0 - self.B + 2 * self.eps

    @property
    def upper(self) -> float:
        return -self.t0 - 2 * self.eps

    @property
    def half_width(self) -> float:
        return self.eps / 4

    def _iterated(self, t: float) -> Tuple[float, float, float]:
        h = self.half_width
        lo = bump_integrals((t - self.lower) / h)
        hi = bump_integrals((t - self.upper) / h)
        norm = self.B - 4 * self.eps
        second = (lo[0] - hi[0]) / norm
        first = h * (lo[1] - hi[1]) / norm
        primitive = h * h * (lo[2] - hi[2]) / norm
        return primitive, first, second

    def evaluate(self, t: float) -> Tuple[float, float, float]:
        """(v_eps(t), v_eps'(t), v_eps''(t))"""
        primitive, first, second = self._iterated(float(t))
        offset, _, _ = self._iterated(0.0)
        return primitive - offset, first, second

    def value(self, t: float) -> float:
        return self.evaluate(t)[0]

    def derivative(self, t: float) -> float:
        return self.evaluate(t)[1]

    def second_derivative(self, t: float) -> float:
        return self.evaluate(t)[2]


def mollified_v(eps: float, t0: float, B: float) -> MollifiedCutoff:
    cutoff(t0, B)
    if not (0 < eps < B / 8):
        raise InputError(f"eps must lie in (0, B/8) = (0, {B / 8:g}), got {eps}")
    return MollifiedCutoff(float(eps), float(t0), float(B))


# ---------------------------------------------------------------------------
# ODE pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OdePoint:
    t: float
    u: float
    s: float
    residual1: float
    residual2: float
    positivity_margin: float  # u''s - s''


def _check_t(t: float):
    if not (math.isfinite(t) and t > 0):
        raise InputError(f"t must be positive and finite, got {t}")


def _series_parts(t: float) -> Tuple[float, float, float, float]:
    """q = 1/(1-e^-t), q - 1, s = tq - 1 and m = 1 - t/(e^t - 1), guarded near 0"""
    q = 1.0 / -math.expm1(-t)
    qm1 = 1.0 / math.expm1(t)
    if t < SERIES_CUTOFF:
        t2 = t * t
        s = t / 2 + t2 / 12 - t2 * t2 / 720
        m = t / 2 - t2 / 12 + t2 * t2 / 720
    else:
        s = t * q - 1.0
        m = 1.0 - t * qm1
    return q, qm1, s, m


def ode_derivatives(t: float) -> Tuple[float, float, float, float]:
    """(u', u'', s', s'') from the closed forms"""
    _check_t(t)
    q, qm1, s, m = _series_parts(t)
    return -qm1, q * qm1, q * m, q * qm1 * (s - m)


def ode_pair(t: float) -> OdePoint:
    """u = -log(1 - e^-t), s = t/(1 - e^-t) - 1 and the residuals of both ODEs"""
    _check_t(t)
    q, qm1, s, m = _series_parts(t)
    u = -math.log1p(-math.exp(-t))
    du, ddu, ds, dds = ode_derivatives(t)
    margin = ddu * s - dds
    residual1 = abs((s + ds * ds / margin) * math.exp(u - t) - 1.0)
    residual2 = abs(ds - s * du - 1.0)
    return OdePoint(t, u, s, residual1, residual2, margin)


def gz_factor(t0: float, B: float) -> float:
    """1 - e^{-(t0+B)}, the constant of the optimal extension estimate"""
    cutoff(t0, B)
    return -math.expm1(-(t0 + B))
