"""
Theorem Verifiers
Jumping numbers, the G(t) curve and its structural checks, layer-cake identity,
sharp effectiveness of strong openness and the Demailly-Kollar lower bound
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from domains import ModelDomain, polydisc
from errors import ConfigError, DivergenceError, G0InfiniteError, InputError, InternalConsistencyError
from hilbert import MonomialFn, bergman_at_origin, function_mass, truncation
from ideals import MonomialIdeal, germ_in_ideal, multiplier_ideal, plus_ideal
from minimizer import DEFAULT_DEGREE, GramSource, MinimizationMethod, minimal_l2
from quadrature import DEFAULT_MC_SAMPLES
from validation import DEFAULT_TOLERANCES, CheckReport, make_report, skipped_report
from weights import (
    SublevelRegion,
    ToricWeight,
    as_rational,
    combined,
    region_below_log,
    scaled,
)

logger = logging.getLogger(__name__)

MEMBERSHIP_GRID_SIZE = 64
_LAYER_CAKE_EPSREL = 1e-10


# ---------------------------------------------------------------------------
# jumping numbers
# ---------------------------------------------------------------------------

def jumping_number(f: MonomialFn, weight: ToricWeight) -> float:
    """
    c_o^F(phi) = sup{c : |F|^2 e^{-2c phi} integrable near o} for F = z^k.

    Equals min over c_j > 0 of (k_j + 1)/c_j with c the effective coefficients.
    """
    if len(f.terms) != 1:
        raise InputError(
            f"jumping_number takes a single monomial, got {len(f.terms)} terms; "
            "use composite_jumping_number"
        )
    if f.dimension != weight.dimension:
        raise InputError(f"Function dimension {f.dimension} != weight dimension {weight.dimension}")
    (alpha,) = f.terms
    best = math.inf
    for k, c in zip(alpha, weight.effective_exact()):
        if c > 0:
            exact = as_rational(c)
            ratio = Fraction(k + 1) / exact if exact is not None else (k + 1) / c
            best = min(best, float(ratio))
    return best


def composite_jumping_number(f: MonomialFn, weight: ToricWeight) -> float:
    """Minimum of the single-monomial jumping numbers; +inf for f = 0"""
    return min(
        (jumping_number(MonomialFn({alpha: 1}, f.dimension), weight) for alpha in f.terms),
        default=math.inf,
    )


# ---------------------------------------------------------------------------
# G(t)
# ---------------------------------------------------------------------------

@dataclass
class GCurve:
    """Sampled t -> G(t); raw values, no monotone repair"""
    grid: np.ndarray
    values: np.ndarray
    f: MonomialFn
    ideal: MonomialIdeal
    weight: ToricWeight
    domain: ModelDomain
    weight_phi: Optional[ToricWeight] = None
    method: MinimizationMethod = MinimizationMethod.ORTHOGONAL

    @property
    def g0(self) -> float:
        return float(self.values[0])

    @property
    def r_grid(self) -> np.ndarray:
        return np.exp(-self.grid)


def _validate_grid(grid: Sequence[float], name: str = "grid") -> np.ndarray:
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise InputError(f"{name} must be strictly increasing")
    return arr


def g_curve(f: MonomialFn, ideal: Optional[MonomialIdeal], weight_psi: ToricWeight,
            grid: Sequence[float],
            method: MinimizationMethod = MinimizationMethod.ORTHOGONAL,
            domain: Optional[ModelDomain] = None,
            weight_phi: Optional[ToricWeight] = None,
            gram: GramSource = GramSource.EXACT,
            degree: int = DEFAULT_DEGREE,
            samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> GCurve:
    """
    G(t) = minimal weighted integral over {psi < -t} for t on the grid.

    The domain defaults to the unit polydisc; the ideal defaults to I(psi),
    or I(phi + psi) when a weight phi is given. gram, degree, samples and seed
    configure the least-squares path.
    """
    t = _validate_grid(grid)
    if t[0] != 0:
        raise InputError(f"grid must start at 0, got {t[0]}")
    if domain is None:
        domain = polydisc([1.0] * weight_psi.dimension)
    if ideal is None:
        ideal = multiplier_ideal(weight_psi if weight_phi is None else combined(weight_phi, weight_psi))
    basis = None
    if method == MinimizationMethod.LEAST_SQUARES:
        basis = truncation(max(degree, f.degree), domain.dimension)
    values = []
    for i, ti in enumerate(t):
        result = minimal_l2(f, ideal, SublevelRegion(domain, weight_psi, float(ti)), weight_phi,
                            basis=basis, method=method, gram=gram, samples=samples, seed=seed)
        if i == 0 and result.diverged:
            raise G0InfiniteError("G(0) is infinite: the minimal integral over the domain diverges")
        values.append(result.value)
    logger.debug("G curve on %d points: G(0) = %.12g", len(values), values[0])
    return GCurve(t, np.array(values), f, ideal, weight_psi, domain, weight_phi, method)


def check_lower_bound(curve: GCurve, tolerance: float = DEFAULT_TOLERANCES["lower_bound"]) -> CheckReport:
    """G(t) >= e^{-t} G(0)"""
    g0 = curve.g0
    if g0 == 0:
        return make_report("lower_bound", 0.0, None, tolerance, {"g0": 0.0})
    violations = np.maximum((np.exp(-curve.grid) * g0 - curve.values) / g0, 0.0)
    worst = int(np.argmax(violations))
    return make_report("lower_bound", float(violations[worst]), float(curve.grid[worst]), tolerance,
                       {"g0": g0})


def check_monotonicity(curve: GCurve, tolerance: float = DEFAULT_TOLERANCES["monotone"]) -> CheckReport:
    """G nonincreasing in t"""
    g0 = curve.g0
    if curve.values.size < 2 or g0 == 0:
        return make_report("monotone", 0.0, None, tolerance)
    increases = np.maximum(np.diff(curve.values) / g0, 0.0)
    worst = int(np.argmax(increases))
    return make_report("monotone", float(increases[worst]), float(curve.grid[worst + 1]), tolerance)


def check_concavity(curve: GCurve, tolerance: float = DEFAULT_TOLERANCES["concavity"]) -> CheckReport:
    """
    Discrete concavity of r -> G(-log r).

    On the r-image of the grid (non-uniform, no resampling) each interior value
    must lie on or above the chord through its neighbours; the defect is the
    chord excess normalized by G(0).
    """
    if curve.grid.size < 3:
        raise InputError("Concavity check needs at least 3 grid points")
    g0 = curve.g0
    if g0 == 0:
        return make_report("concavity", 0.0, None, tolerance)
    r = curve.r_grid[::-1]
    g = curve.values[::-1]
    defects = concavity_defects(r, g) / g0
    worst = int(np.argmax(defects))
    return make_report("concavity", float(defects[worst]), float(r[worst + 1]), tolerance)


def concavity_defects(r: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Chord excess at each interior point of an ascending grid, clamped at 0"""
    left, mid, right = r[:-2], r[1:-1], r[2:]
    weight = (mid - left) / (right - left)
    chord = g[:-2] + (g[2:] - g[:-2]) * weight
    return np.maximum(chord - g[1:-1], 0.0)


def check_differential_inequality(curve: GCurve,
                                  tolerance: float = DEFAULT_TOLERANCES["differential"]) -> CheckReport:
    """
    G(0) - G(t0) <= (e^{t0} - 1) * (-slope) at interior grid points.

    The slope is the forward difference. The allowance scales 2h|slope| and the
    gap between forward and backward slopes by e^{t0} - 1; raw and allowed
    violations are both recorded.
    """
    if curve.grid.size < 3:
        raise InputError("Differential inequality check needs at least 3 grid points")
    g0 = curve.g0
    if g0 == 0:
        return make_report("differential", 0.0, None, tolerance, {"raw": 0.0, "allowance": 0.0})
    t, g = curve.grid, curve.values
    worst, worst_at, worst_raw, worst_allow = -1.0, None, 0.0, 0.0
    for i in range(1, t.size - 1):
        h = t[i + 1] - t[i]
        fwd = (g[i + 1] - g[i]) / h
        bwd = (g[i] - g[i - 1]) / (t[i] - t[i - 1])
        factor = math.expm1(t[i])
        raw = g0 - g[i] - factor * (-fwd)
        allowance = factor * max(2 * h * abs(fwd), abs(fwd - bwd))
        violation = max(raw - allowance, 0.0) / g0
        if violation > worst:
            worst, worst_at = violation, float(t[i])
            worst_raw, worst_allow = raw / g0, allowance / g0
    return make_report("differential", worst, worst_at, tolerance,
                       {"raw": worst_raw, "allowance": worst_allow})


# ---------------------------------------------------------------------------
# identities on the full domain
# ---------------------------------------------------------------------------

def _domain_region(domain: ModelDomain, weight: ToricWeight) -> SublevelRegion:
    """{weight < 0} ∩ D, which is D for negative weights"""
    return SublevelRegion(domain, weight, 0.0)


def layer_cake(f: MonomialFn, weight_phi: ToricWeight, domain: ModelDomain,
               tolerance: Optional[float] = None) -> CheckReport:
    """
    integral_D |F|^2 e^{-phi} = integral over t of e^t * mass(F, {phi < -t}).

    For t < 0 the sublevel set is all of D, so that half-line contributes
    mass(F, D) exactly; the t > 0 half is integrated adaptively.
    """
    if tolerance is None:
        key = "layer_cake" if domain.dimension == 1 else "layer_cake_adaptive"
        tolerance = DEFAULT_TOLERANCES[key]
    region = _domain_region(domain, weight_phi)
    lhs = function_mass(f, region, weight_phi)
    if lhs.diverged:
        return skipped_report("layer_cake", "weighted mass diverges", tolerance)

    def mass_at(t: float) -> float:
        return function_mass(f, region.at(t)).value

    head = mass_at(0.0)
    tail, tail_error = integrate.quad(lambda t: math.exp(t) * mass_at(t), 0.0, math.inf,
                                      epsabs=0.0, epsrel=_LAYER_CAKE_EPSREL, limit=200)
    rhs = head + tail
    if lhs.value == 0:
        discrepancy = abs(rhs)
    else:
        discrepancy = abs(lhs.value - rhs) / lhs.value
    return make_report("layer_cake", discrepancy, None, tolerance,
                       {"lhs": lhs.value, "rhs": rhs, "quad_error": tail_error})


def legacy_theta(p: float) -> float:
    """Earlier non-sharp effectiveness function (1 / ((p-1)(2p-1)))^{1/p}"""
    return (1.0 / ((p - 1.0) * (2.0 * p - 1.0))) ** (1.0 / p)


def legacy_exponent(ratio: float) -> float:
    """sup{p > 1 : legacy_theta(p) > ratio}; legacy_theta falls below 1 past p = 3/2"""
    lo, hi = 1.0 + 1e-12, 1.5
    if legacy_theta(lo) <= ratio:
        return 1.0
    return optimize.brentq(lambda p: legacy_theta(p) - ratio, lo, hi, xtol=1e-14)


class EffectivenessResult(NamedTuple):
    ratio: float
    p_star: float
    report: CheckReport


def _plus_minimum(f: MonomialFn, weight_phi: ToricWeight, domain: ModelDomain,
                  weight_extra: Optional[ToricWeight] = None) -> float:
    """C_{F, I_+(2c phi)}(D), or the plain mass of F when c = +inf"""
    region = _domain_region(domain, weight_phi)
    c = composite_jumping_number(f, weight_phi)
    if math.isinf(c):
        return function_mass(f, region, weight_extra).value
    return minimal_l2(f, plus_ideal(weight_phi, c), region, weight_extra).value


def effectiveness_threshold(f: MonomialFn, weight_phi: ToricWeight, domain: ModelDomain,
                            tolerance: float = DEFAULT_TOLERANCES["effectiveness"]) -> EffectivenessResult:
    """
    Sharp effectiveness of strong openness.

    ratio = integral_D |F|^2 e^{-phi} / C_{F, I_+(2c phi)}(D) and
    p_star = ratio / (ratio - 1); F lies in I(p*phi) for every p < p_star. The
    report counts grid points below p_star where membership fails or disagrees
    with direct integrability.
    """
    if f.is_zero():
        raise ConfigError("function", "effectiveness needs a nonzero germ F")
    region = _domain_region(domain, weight_phi)
    mass = function_mass(f, region, weight_phi)
    if mass.diverged:
        raise DivergenceError("Effectiveness needs a finite weighted mass of F")
    C = _plus_minimum(f, weight_phi, domain)
    if C <= 0:
        raise InternalConsistencyError("Minimal integral over the plus-ideal vanished")
    ratio = mass.value / C
    if ratio <= 1:
        raise InternalConsistencyError(
            f"Effectiveness ratio {ratio:.15g} <= 1 contradicts the scaled-mass bound"
        )
    p_star = ratio / (ratio - 1)

    failures, first_failure = 0, None
    grid = 1.0 + (p_star - 1.0) * np.arange(1, MEMBERSHIP_GRID_SIZE + 1) / (MEMBERSHIP_GRID_SIZE + 1)
    for p in grid:
        weight_p = scaled(weight_phi, float(p))
        member = germ_in_ideal(f, multiplier_ideal(weight_p))
        integrable = not function_mass(f, region, weight_p).diverged
        if not member or member != integrable:
            failures += 1
            if first_failure is None:
                first_failure = float(p)
    p_old = legacy_exponent(ratio)
    details = {
        "mass": mass.value,
        "C": C,
        "theta_at_p_star": p_star / (p_star - 1),
        "p_old": p_old,
        "p_old_below_p_star": p_old < p_star,
        "grid_points": MEMBERSHIP_GRID_SIZE,
    }
    report = make_report("effectiveness", float(failures), first_failure, tolerance, details)
    return EffectivenessResult(ratio, p_star, report)


def bergman_bound(weight_phi: ToricWeight, domain: ModelDomain,
                  tolerance: float = DEFAULT_TOLERANCES["bergman"]) -> CheckReport:
    """
    Bergman form for F = 1: C_{1,I_+}(D) >= 1/K_D(o), hence ratio <= q = K_D(o) * integral e^{-phi}
    and p_star >= q/(q-1).
    """
    one = MonomialFn({(0,) * domain.dimension: 1}, domain.dimension)
    K = bergman_at_origin(domain)
    mass = function_mass(one, _domain_region(domain, weight_phi), weight_phi)
    if mass.diverged:
        return skipped_report("bergman", "weighted mass diverges", tolerance)
    q = K * mass.value
    C = _plus_minimum(one, weight_phi, domain)
    ratio = mass.value / C
    kernel_gap = max((1.0 / K - C) * K, 0.0)
    ratio_gap = max((ratio - q) / q, 0.0)
    details = {"K": K, "C": C, "q": q, "ratio": ratio}
    if q > 1:
        details["p_bergman"] = q / (q - 1)
    return make_report("bergman", max(kernel_gap, ratio_gap), None, tolerance, details)


def dk_lower_bound(f: MonomialFn, weight_phi: ToricWeight, domain: ModelDomain,
                   r_grid: Sequence[float], use_bergman: bool = False,
                   weight_extra: Optional[ToricWeight] = None,
                   tolerance: float = DEFAULT_TOLERANCES["dk"]) -> CheckReport:
    """
    r^{-2c} * mass(F, {phi < log r}) >= C_{F, I_+(2c phi)}(D) for r in (0, 1).

    use_bergman compares with 1/K_D(o) instead (F = 1 only). weight_extra puts
    e^{-phi'} inside every mass and inside C; when C = +inf every sublevel mass
    must diverge.
    """
    r = _validate_grid(r_grid, "r_grid")
    if np.any(r <= 0) or np.any(r >= 1):
        raise InputError("r_grid values must lie in (0, 1)")
    c = composite_jumping_number(f, weight_phi)
    if math.isinf(c):
        raise InputError("The Demailly-Kollar bound needs a finite jumping number")
    if use_bergman:
        if f != MonomialFn({(0,) * f.dimension: 1}, f.dimension) or weight_extra is not None:
            raise InputError("The Bergman form of the bound applies to F = 1 without extra weight")
        C = 1.0 / bergman_at_origin(domain)
    else:
        C = _plus_minimum(f, weight_phi, domain, weight_extra)

    violations: List[float] = []
    for ri in r:
        mass = function_mass(f, region_below_log(domain, weight_phi, float(ri)), weight_extra)
        if math.isinf(C):
            violations.append(0.0 if mass.diverged else 1.0)
        elif mass.diverged:
            violations.append(0.0)
        else:
            violations.append(max((C - ri ** (-2 * c) * mass.value) / C, 0.0))
    worst = int(np.argmax(violations))
    details = {"C": C, "c": c, "infinite_branch": math.isinf(C), "bergman_form": use_bergman}
    name = "dk_bergman" if use_bergman else "dk"
    return make_report(name, violations[worst], float(r[worst]), tolerance, details)


def check_scaled_mass_bound(f: MonomialFn, weight_psi: ToricWeight, domain: ModelDomain,
                            p_grid: Sequence[float],
                            tolerance: float = DEFAULT_TOLERANCES["scaled_mass"]) -> CheckReport:
    """integral_D |F|^2 e^{-psi/p} >= p/(p-1) * C_{F,psi}(D) for p > 1"""
    p = _validate_grid(p_grid, "p_grid")
    if np.any(p <= 1):
        raise InputError("p_grid values must exceed 1")
    region = _domain_region(domain, weight_psi)
    C = minimal_l2(f, multiplier_ideal(weight_psi), region).value
    if C == 0:
        return make_report("scaled_mass", 0.0, None, tolerance, {"C": 0.0})
    if math.isinf(C):
        return skipped_report("scaled_mass", "C_{F,psi}(D) is infinite", tolerance)
    violations = []
    for pi in p:
        mass = function_mass(f, region, scaled(weight_psi, 1.0 / float(pi)))
        bound = pi / (pi - 1) * C
        violations.append(0.0 if mass.diverged else max((bound - mass.value) / C, 0.0))
    worst = int(np.argmax(violations))
    return make_report("scaled_mass", violations[worst], float(p[worst]), tolerance, {"C": C})
