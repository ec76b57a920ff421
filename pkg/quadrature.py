"""
Quadrature Engines
Weighted masses of monomials over sublevel regions: exact 1D/2D closed forms,
adaptive recursion in log coordinates (n <= 4), seeded Monte Carlo
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize, special

from domains import DomainKind
from errors import DegenerateRegionError, InputError
from weights import JUMP_TOLERANCE, SublevelRegion, ToricWeight, in_sublevel_many

logger = logging.getLogger(__name__)

MAX_ADAPTIVE_DIM = 4
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
MC_BATCH_SIZE = 8192
MC_MIN_SAMPLES = 100
DEFAULT_MC_SAMPLES = 100_000
THREADS_ENV = "SUBLEVEL_L2_THREADS"


class IntegrationMethod(Enum):
    CLOSED_FORM = "ClosedForm"
    ADAPTIVE = "Adaptive"
    MONTE_CARLO = "MonteCarlo"


_METHOD_RANK = {
    IntegrationMethod.CLOSED_FORM: 0,
    IntegrationMethod.ADAPTIVE: 1,
    IntegrationMethod.MONTE_CARLO: 2,
}


@dataclass(frozen=True)
class IntegralEstimate:
    """A mass with its error estimate; +inf is a legitimate value"""
    value: float
    abs_error: Optional[float]
    method: IntegrationMethod
    diverged: bool = False

    def __post_init__(self):
        if self.diverged and self.value != math.inf:
            raise InputError("A diverged estimate must carry value +inf")
        if self.method == IntegrationMethod.CLOSED_FORM and self.abs_error is not None:
            raise InputError("Closed-form estimates carry no error estimate")

    def __add__(self, other: "IntegralEstimate") -> "IntegralEstimate":
        method = max(self.method, other.method, key=_METHOD_RANK.get)
        if self.diverged or other.diverged:
            return diverged_estimate(method)
        if method == IntegrationMethod.CLOSED_FORM:
            error = None
        else:
            error = (self.abs_error or 0.0) + (other.abs_error or 0.0)
        return IntegralEstimate(self.value + other.value, error, method)

    def scaled(self, factor: float) -> "IntegralEstimate":
        """factor * estimate for factor >= 0; 0 * (+inf) stays 0 (a zero coefficient kills the term)"""
        if factor < 0:
            raise InputError("Masses can only be scaled by nonnegative factors")
        if self.diverged:
            if factor == 0:
                return zero_estimate()
            return self
        error = None if self.abs_error is None else self.abs_error * factor
        return IntegralEstimate(self.value * factor, error, self.method)


def diverged_estimate(method: IntegrationMethod = IntegrationMethod.CLOSED_FORM) -> IntegralEstimate:
    return IntegralEstimate(math.inf, None if method == IntegrationMethod.CLOSED_FORM else 0.0,
                            method, diverged=True)


def zero_estimate() -> IntegralEstimate:
    return IntegralEstimate(0.0, None, IntegrationMethod.CLOSED_FORM)


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def _validate_alpha(alpha: Sequence[int], n: int) -> np.ndarray:
    alpha = tuple(alpha)
    if len(alpha) != n:
        raise InputError(f"Exponent {list(alpha)} has length {len(alpha)}, region dimension is {n}")
    for k in alpha:
        if int(k) != k or k < 0:
            raise InputError(f"Exponents must be nonnegative integers, got {list(alpha)}")
    return np.array(alpha, dtype=float)


def radial_exponents(alpha: Sequence[int], weight_phi: Optional[ToricWeight], n: int) -> np.ndarray:
    """a_j = 2 alpha_j + 2 - d_j: the integrand is exp(a·x) in x_j = log r_j"""
    a = 2 * _validate_alpha(alpha, n) + 2
    if weight_phi is not None:
        if weight_phi.dimension != n:
            raise InputError(
                f"Weight phi has dimension {weight_phi.dimension}, region dimension is {n}"
            )
        a = a - weight_phi.effective()
    return a


def is_divergent(a: np.ndarray) -> bool:
    """Every coordinate zero set meets a sublevel region, so any a_j <= 0 diverges"""
    return bool(np.any(a <= JUMP_TOLERANCE * np.maximum(1.0, np.abs(a))))


# ---------------------------------------------------------------------------
# closed forms in log coordinates
# ---------------------------------------------------------------------------

def _log_tail(a: float, upper: float) -> float:
    """log of the integral of exp(a x) over (-inf, upper)"""
    return a * upper - math.log(a)


def _log_exp_integral(k: float, lo: float, hi: float) -> float:
    """log of the integral of exp(k x) over (lo, hi)"""
    h = hi - lo
    if h <= 0:
        return -math.inf
    if k == 0:
        return math.log(h)
    if k > 0:
        return k * hi + math.log(-math.expm1(-k * h)) - math.log(k)
    return k * lo + math.log(math.expm1(k * h) / k)


def _disc_log(a: float, e: float, b: float, t: float) -> float:
    """{x < b, e x < -t}"""
    if e > 0:
        return _log_tail(a, min(b, -t / e))
    return _log_tail(a, b) if t < 0 else -math.inf


def _polydisc2_log(a, e, b, t: float) -> float:
    """{x1 < b1, x2 < b2, e1 x1 + e2 x2 < -t}, sliced at the kink of the x2 upper limit"""
    a1, a2 = a
    e1, e2 = e
    b1, b2 = b
    if e1 <= 0 and e2 <= 0:
        return _log_tail(a1, b1) + _log_tail(a2, b2) if t < 0 else -math.inf
    if e2 <= 0:
        return _log_tail(a2, b2) + _disc_log(a1, e1, b1, t)
    if e1 <= 0:
        return _log_tail(a1, b1) + _disc_log(a2, e2, b2, t)
    x1_star = (-t - e2 * b2) / e1
    box_part = _log_tail(a1, min(x1_star, b1)) + _log_tail(a2, b2)
    if x1_star >= b1:
        return box_part
    k = a1 - a2 * e1 / e2
    cut_part = -a2 * t / e2 - math.log(a2) + _log_exp_integral(k, x1_star, b1)
    return float(np.logaddexp(box_part, cut_part))


def _log_full_box(a, b) -> float:
    return float(sum(_log_tail(aj, bj) for aj, bj in zip(a, b)))


def _quad(func: Callable[[float], float], lo: float, hi: float) -> Tuple[float, float]:
    value, error = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    return value, error


def _polydisc_reduced(a: np.ndarray, e: np.ndarray, b: np.ndarray, t: float) -> Tuple[float, float, bool]:
    """
    Integral of exp(a·x) over {x < b, e·x < -t}.

    Returns (value, abs_error, used_quadrature). n <= 2 is exact; higher
    dimensions integrate out the coordinate with the largest e_k: below the
    point where the remaining constraint goes slack the inner mass is the box
    product, above it a finite-interval adaptive quadrature over the exact
    lower-dimensional mass.
    """
    n = len(a)
    if n == 1:
        return math.exp(_disc_log(a[0], e[0], b[0], t)), 0.0, False
    if n == 2:
        return math.exp(_polydisc2_log(a, e, b, t)), 0.0, False
    if not np.any(e > 0):
        return (math.exp(_log_full_box(a, b)) if t < 0 else 0.0), 0.0, False

    k = int(np.argmax(e))
    rest = [j for j in range(n) if j != k]
    a_k, e_k, b_k = a[k], e[k], b[k]
    a_r, e_r, b_r = a[rest], e[rest], b[rest]
    s_crit = -float(np.dot(e_r, b_r))
    x_split = min(b_k, (s_crit - t) / e_k)
    exact = math.exp(_log_full_box(a_r, b_r) + _log_tail(a_k, x_split))
    if x_split >= b_k or not np.any(e_r > 0):
        return exact, 0.0, False

    def integrand(x: float) -> float:
        inner, _, _ = _polydisc_reduced(a_r, e_r, b_r, t + e_k * x)
        return math.exp(a_k * x) * inner

    value, error = _quad(integrand, x_split, b_k)
    return exact + value, error, True


def _log_full_ball(a: np.ndarray, radius: float) -> float:
    """log of the integral of prod r_j^(a_j - 1) over the ball (Dirichlet integral)"""
    total = float(a.sum())
    return (float(np.sum(special.gammaln(a / 2))) - len(a) * math.log(2.0)
            + total * math.log(radius) - float(special.gammaln(total / 2 + 1)))


def _ball_reduced(a: np.ndarray, e: np.ndarray, radius: float, t: float) -> Tuple[float, float, bool]:
    """
    Integral of exp(a·x) over {sum exp(2 x_j) < R^2, e·x < -t}.

    Integrates out the pivot radius r = exp(x_k): the slice is a ball of radius
    sqrt(R^2 - r^2) with threshold t + e_k log r. Wherever the slice constraint is
    slack the slice mass is a Dirichlet closed form, so those r-ranges reduce to
    incomplete beta functions; only the binding range is integrated adaptively.
    """
    n = len(a)
    if n == 1:
        return math.exp(_disc_log(a[0], e[0], math.log(radius), t)), 0.0, False
    if not np.any(e > 0):
        return (math.exp(_log_full_ball(a, radius)) if t < 0 else 0.0), 0.0, False

    k = int(np.argmax(e))
    rest = [j for j in range(n) if j != k]
    a_k, e_k = a[k], e[k]
    a_r, e_r = a[rest], e[rest]
    A_r = float(a_r.sum())
    log_slice_const = _log_full_ball(a_r, 1.0)

    # integral of r^(a_k - 1) (R^2 - r^2)^(A_r/2) dr = (R^(a_k+A_r)/2) B(p, q) I_u(p, q), u = r^2/R^2
    p, q = a_k / 2, A_r / 2 + 1
    log_beta_scale = (log_slice_const + (a_k + A_r) * math.log(radius) - math.log(2.0)
                      + float(special.betaln(p, q)))

    def slack_mass(u_lo: float, u_hi: float) -> float:
        lower = special.betainc(p, q, u_lo) if u_lo > 0 else 0.0
        upper = special.betainc(p, q, u_hi) if u_hi < 1 else 1.0
        return math.exp(log_beta_scale) * max(upper - lower, 0.0)

    E_r = float(e_r.sum())
    if E_r <= 0:
        # slices are whole balls while t + e_k log r < 0, empty afterwards
        r0 = min(radius, math.exp(-t / e_k))
        return slack_mass(0.0, (r0 / radius) ** 2), 0.0, False

    c_r = float(sum(0.5 * ej * math.log(ej / E_r) for ej in e_r if ej > 0))

    def binding(r: float) -> float:
        # > 0 where the slice constraint cuts into the slice ball
        return t + c_r + 0.5 * E_r * math.log(radius ** 2 - r ** 2) + e_k * math.log(r)

    r_peak = radius * math.sqrt(e_k / (E_r + e_k))
    if binding(r_peak) <= 0:
        return math.exp(_log_full_ball(a, radius)), 0.0, False

    # binding -> -inf at both ends; clip the brackets where the slack sliver is below float resolution
    tiny, near_edge = r_peak * 1e-300, radius * (1 - 1e-15)
    r_lo = tiny
    if binding(tiny) < 0:
        r_lo = optimize.brentq(binding, tiny, r_peak, xtol=1e-300, rtol=1e-15)
    r_hi = near_edge
    if binding(near_edge) < 0:
        r_hi = optimize.brentq(binding, r_peak, near_edge, xtol=1e-300, rtol=1e-15)
    exact = slack_mass(0.0, (r_lo / radius) ** 2) + slack_mass((r_hi / radius) ** 2, 1.0)

    def integrand(r: float) -> float:
        slice_radius = math.sqrt(max(radius ** 2 - r ** 2, 0.0))
        if slice_radius <= 0 or r <= 0:
            return 0.0
        inner, _, _ = _ball_reduced(a_r, e_r, slice_radius, t + e_k * math.log(r))
        return r ** (a_k - 1) * inner

    value, error = _quad(integrand, r_lo, r_hi)
    return exact + value, error, True


def _reduced_mass(a: np.ndarray, region: SublevelRegion) -> Tuple[float, float, bool]:
    e = region.weight.effective()
    domain = region.domain
    if domain.kind == DomainKind.POLYDISC:
        return _polydisc_reduced(a, e, np.log(np.asarray(domain.radii)), region.threshold)
    return _ball_reduced(a, e, domain.radius, region.threshold)


def monomial_mass(alpha: Sequence[int], region: SublevelRegion,
                  weight_phi: Optional[ToricWeight] = None,
                  samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> IntegralEstimate:
    """
    Integral over {psi < -t} ∩ D of |z^alpha|^2 e^{-phi}.

    The angular integrals contribute (2 pi)^n and the radial part is
    exp(a·x) in log coordinates with a_j = 2 alpha_j + 2 - d_j. Dimensions
    above MAX_ADAPTIVE_DIM fall back to Monte Carlo with (samples, seed).
    """
    n = region.dimension
    a = radial_exponents(alpha, weight_phi, n)
    if is_divergent(a):
        return diverged_estimate()
    if n > MAX_ADAPTIVE_DIM:
        logger.warning("Dimension %d > %d: monomial mass falls back to Monte Carlo", n, MAX_ADAPTIVE_DIM)
        return mc_integral(monomial_integrand(alpha, weight_phi), region, samples, seed)
    value, error, used_quad = _reduced_mass(a, region)
    value *= (2 * math.pi) ** n
    if used_quad:
        error = error * (2 * math.pi) ** n + QUAD_EPSREL * value
        return IntegralEstimate(value, error, IntegrationMethod.ADAPTIVE)
    return IntegralEstimate(value, None, IntegrationMethod.CLOSED_FORM)


def monomial_mass_mc(alpha: Sequence[int], region: SublevelRegion,
                     weight_phi: Optional[ToricWeight] = None,
                     samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> IntegralEstimate:
    """Monte Carlo counterpart of monomial_mass; divergence is still decided in closed form"""
    if is_divergent(radial_exponents(alpha, weight_phi, region.dimension)):
        return diverged_estimate(IntegrationMethod.MONTE_CARLO)
    return mc_integral(monomial_integrand(alpha, weight_phi), region, samples, seed)


def monomial_integrand(alpha: Sequence[int], weight_phi: Optional[ToricWeight]):
    """|z^alpha|^2 e^{-phi} as a vectorized integrand for mc_integral"""
    alpha = np.asarray(alpha, dtype=float)
    d = weight_phi.effective() if weight_phi is not None else np.zeros(len(alpha))

    def integrand(points: np.ndarray) -> np.ndarray:
        moduli = np.abs(points)
        with np.errstate(divide="ignore"):
            return np.prod(moduli ** (2 * alpha - d), axis=1)

    return integrand


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def thread_count() -> int:
    """Parallelism cap from SUBLEVEL_L2_THREADS (0 or unset = all cores)"""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


def _batch_points(seed: int, batch: int, radii: np.ndarray) -> np.ndarray:
    """Uniform points in the bounding polydisc; batch b always gets the same stream"""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(batch,)))
    shape = (MC_BATCH_SIZE, len(radii))
    moduli = radii * np.sqrt(rng.random(shape))
    angles = 2 * math.pi * rng.random(shape)
    return moduli * np.exp(1j * angles)


@dataclass(frozen=True)
class RegionSample:
    """Accepted points of a rejection sampler and the draw count behind them"""
    points: np.ndarray
    draws: int
    box_volume: float


def sample_region(region: SublevelRegion, samples: int, seed: int) -> RegionSample:
    """
    Rejection-sample the region from its bounding polydisc.

    Draws fixed-size batches, each seeded by (seed, batch index), and consumes
    them in index order until `samples` points are accepted or 10 * samples
    are rejected. Batches may be generated in parallel; the consumed prefix is
    the same under any thread count.
    """
    if samples < MC_MIN_SAMPLES:
        raise InputError(f"Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}")
    radii = region.domain.bounding_radii()
    box_volume = float(np.prod(math.pi * radii ** 2))
    accepted, draws, rejected = [], 0, 0
    n_accepted = 0
    workers = thread_count()
    batch = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while n_accepted < samples and rejected < 10 * samples:
            indices = range(batch, batch + workers)
            batch += workers
            for pts in pool.map(lambda b: _batch_points(seed, b, radii), indices):
                mask = in_sublevel_many(region, pts)
                hits = pts[mask]
                accepted.append(hits)
                draws += len(pts)
                n_accepted += len(hits)
                rejected += len(pts) - len(hits)
                if n_accepted >= samples or rejected >= 10 * samples:
                    break
    if n_accepted == 0:
        raise DegenerateRegionError(
            f"No accepted samples after {rejected} rejections; region has numerically zero volume"
        )
    return RegionSample(np.concatenate(accepted), draws, box_volume)


def mc_integral(integrand: Callable[[np.ndarray], np.ndarray], region: SublevelRegion,
                samples: int, seed: int) -> IntegralEstimate:
    """
    Unbiased estimate of the integral of a nonnegative integrand over the region.

    The integrand maps an (m, n) complex array to m nonnegative values.
    """
    sample = sample_region(region, samples, seed)
    values = np.asarray(integrand(sample.points), dtype=float)
    n = sample.draws
    mean = values.sum() / n
    second = np.square(values).sum() / n
    if not np.isfinite(mean):
        return diverged_estimate(IntegrationMethod.MONTE_CARLO)
    variance = max(second - mean ** 2, 0.0)
    return IntegralEstimate(
        value=float(sample.box_volume * mean),
        abs_error=float(sample.box_volume * math.sqrt(variance / (n - 1))),
        method=IntegrationMethod.MONTE_CARLO,
    )
