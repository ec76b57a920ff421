"""
Job Configuration
Loads and validates JSON job files and run manifests
"""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from analysis import composite_jumping_number
from domains import ModelDomain, domain_from_dict, unit_disc
from errors import ConfigError, NegativeWeightError
from hilbert import MonomialFn, monomialfn_from_dict
from ideals import MonomialIdeal, ideal_from_dict, multiplier_ideal, plus_ideal
from minimizer import DEFAULT_DEGREE
from quadrature import DEFAULT_MC_SAMPLES, MC_MIN_SAMPLES
from validation import DEFAULT_TOLERANCES
from weights import ToricWeight, combined, validate_negative, weight_from_dict, weight_sup

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_T_GRID = [0.0, 0.5, 1.0, 2.0]
DEFAULT_CHECKS = ["lower_bound", "monotone", "concavity", "differential"]


class Task(Enum):
    MASS = "mass"
    MINIMIZE = "minimize"
    GCURVE = "gcurve"
    LCT = "lct"
    ODE = "ode"
    VERIFY = "verify"


class Method(Enum):
    ORTHOGONAL = "orthogonal"
    LEAST_SQUARES = "least_squares"
    MONTE_CARLO = "monte_carlo"


KNOWN_CHECKS = {
    "lower_bound", "monotone", "concavity", "differential", "layer_cake",
    "effectiveness", "bergman", "dk", "dk_bergman", "scaled_mass", "pythagoras",
    "ode", "mollifier", "gz",
}
EXPECTED_KEYS = {"mass", "C", "G0", "K", "ratio", "p_star", "jumping_number", "gz"}


@dataclass
class OdeSettings:
    """Sampling for the ODE pair and the cutoff/mollifier checks"""
    t_min: float = 1e-3
    t_max: float = 30.0
    points: int = 1000
    t0: float = 1.0
    B: float = 1.0
    eps: List[float] = field(default_factory=lambda: [1e-4])


@dataclass
class JobConfig:
    name: str
    task: Task
    domain: ModelDomain
    weight_psi: Optional[ToricWeight] = None
    weight_phi: Optional[ToricWeight] = None
    weight_extra: Optional[ToricWeight] = None
    function: Optional[MonomialFn] = None
    ideal: Optional[MonomialIdeal] = None
    alphas: List[Tuple[int, ...]] = field(default_factory=list)
    t_grid: List[float] = field(default_factory=lambda: list(DEFAULT_T_GRID))
    r_grid: List[float] = field(default_factory=list)
    p_grid: List[float] = field(default_factory=list)
    method: Method = Method.ORTHOGONAL
    samples: int = DEFAULT_MC_SAMPLES
    seed: Optional[int] = None
    degree: int = DEFAULT_DEGREE
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    checks: List[str] = field(default_factory=list)
    expected: Dict[str, float] = field(default_factory=dict)
    ode: OdeSettings = field(default_factory=OdeSettings)


@dataclass
class RunManifest:
    jobs: List[JobConfig]
    output_dir: Optional[str] = None
    format_version: int = FORMAT_VERSION


def load_config(path: str, seed: Optional[int] = None,
                samples: Optional[int] = None) -> Union[JobConfig, RunManifest]:
    """
    Load a single job or a manifest ({"jobs": [...]}) from JSON.

    seed/samples override the file's values. Every validation failure names
    the offending field.
    """
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(str(path), f"invalid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    if "jobs" in data:
        return manifest_from_dict(data, seed, samples)
    return job_from_dict(data, data.get("name") or "job", seed=seed, samples=samples)


def manifest_from_dict(data: Dict, seed: Optional[int] = None,
                       samples: Optional[int] = None) -> RunManifest:
    jobs_data = data.get("jobs")
    if not isinstance(jobs_data, list):
        raise ConfigError("jobs", "expected a list of job objects")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError("format_version", f"unsupported version {version!r}, expected {FORMAT_VERSION}")
    jobs, seen = [], set()
    for i, job_data in enumerate(jobs_data):
        where = f"jobs[{i}]"
        if not isinstance(job_data, dict):
            raise ConfigError(where, "expected an object")
        name = job_data.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{where}.name", "every manifest job needs a non-empty name")
        if name in seen:
            raise ConfigError(f"{where}.name", f"duplicate job name {name!r}")
        seen.add(name)
        jobs.append(job_from_dict(job_data, name, prefix=where, seed=seed, samples=samples))
    output_dir = data.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("output_dir", "expected a string path")
    return RunManifest(jobs, output_dir, version)


def _grid(data: Dict, key: str, where: str, default=None) -> List[float]:
    raw = data.get(key, default)
    if raw is None:
        return []
    if isinstance(raw, dict):
        # {"start": 0, "stop": 2, "step": 0.01}, both ends included
        try:
            start, stop, step = float(raw["start"]), float(raw["stop"]), float(raw["step"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{where}.{key}", f"range needs numeric start/stop/step ({e})") from e
        if step <= 0 or stop < start:
            raise ConfigError(f"{where}.{key}", "range needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        raw = [round(start + k * step, 12) for k in range(count)]
    if not isinstance(raw, list):
        raise ConfigError(f"{where}.{key}", "expected a list of numbers or a range object")
    try:
        values = [float(x) for x in raw]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}.{key}", str(e)) from e
    if not values:
        raise ConfigError(f"{where}.{key}", "grid must not be empty")
    if any(not math.isfinite(x) for x in values):
        raise ConfigError(f"{where}.{key}", "values must be finite")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{where}.{key}", "grid must be strictly increasing")
    return values


def _weight(data: Dict, key: str, where: str, domain: ModelDomain) -> Optional[ToricWeight]:
    if data.get(key) is None:
        return None
    field_path = f"{where}.{key}"
    weight = weight_from_dict(data[key], field_path)
    if weight.dimension != domain.dimension:
        raise ConfigError(field_path, f"dimension {weight.dimension} != domain dimension {domain.dimension}")
    if not validate_negative(weight, domain):
        raise NegativeWeightError(field_path, weight_sup(weight, domain))
    return weight


def _derive_ideal(spec, where: str, psi: Optional[ToricWeight],
                  phi: Optional[ToricWeight], function: Optional[MonomialFn]) -> Optional[MonomialIdeal]:
    field_path = f"{where}.ideal"
    if spec is None:
        if psi is None:
            return None
        return multiplier_ideal(psi if phi is None else combined(phi, psi))
    if not isinstance(spec, dict):
        raise ConfigError(field_path, "expected an object")
    if "generators" in spec:
        return ideal_from_dict(spec, field_path)
    source = spec.get("derive_from")
    chosen = spec.get("weight", "psi" if source == "multiplier" else "phi")
    weights = {"psi": psi, "phi": phi,
               "phi+psi": combined(phi, psi) if phi is not None and psi is not None else None}
    if chosen not in weights:
        raise ConfigError(f"{field_path}.weight", f"expected one of {sorted(weights)}, got {chosen!r}")
    weight = weights[chosen]
    if weight is None:
        raise ConfigError(f"{field_path}.weight", f"weight {chosen!r} is not configured")
    if source == "multiplier":
        return multiplier_ideal(weight)
    if source == "plus":
        if "c" in spec:
            try:
                c = float(spec["c"])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{field_path}.c", str(e)) from e
        else:
            if function is None:
                raise ConfigError(f"{field_path}.c", "needed when no function is configured")
            c = composite_jumping_number(function, weight)
        if not (math.isfinite(c) and c > 0):
            raise ConfigError(f"{field_path}.c", f"must be positive and finite, got {c}")
        return plus_ideal(weight, c)
    raise ConfigError(f"{field_path}.derive_from", f"expected 'multiplier' or 'plus', got {source!r}")


def _ode_settings(data, where: str) -> OdeSettings:
    if data is None:
        return OdeSettings()
    if not isinstance(data, dict):
        raise ConfigError(where, "expected an object")
    defaults = OdeSettings()
    try:
        settings = OdeSettings(
            t_min=float(data.get("t_min", defaults.t_min)),
            t_max=float(data.get("t_max", defaults.t_max)),
            points=int(data.get("points", defaults.points)),
            t0=float(data.get("t0", defaults.t0)),
            B=float(data.get("B", defaults.B)),
            eps=[float(e) for e in data.get("eps", defaults.eps)],
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(where, str(e)) from e
    if not (0 < settings.t_min < settings.t_max) or settings.points < 2:
        raise ConfigError(where, "need 0 < t_min < t_max and points >= 2")
    if settings.B <= 0 or settings.t0 < 0:
        raise ConfigError(where, "need B > 0 and t0 >= 0")
    for e in settings.eps:
        if not 0 < e < settings.B / 8:
            raise ConfigError(f"{where}.eps", f"{e} outside (0, B/8)")
    return settings


def job_from_dict(data: Dict, name: str, prefix: str = "", seed: Optional[int] = None,
                  samples: Optional[int] = None) -> JobConfig:
    where = prefix or name
    try:
        task = Task(str(data.get("task", Task.VERIFY.value)).lower())
    except ValueError as e:
        raise ConfigError(f"{where}.task", f"unknown task {data.get('task')!r}") from e
    try:
        method = Method(str(data.get("method", Method.ORTHOGONAL.value)).lower())
    except ValueError as e:
        raise ConfigError(f"{where}.method", f"unknown method {data.get('method')!r}") from e

    ode = _ode_settings(data.get("ode"), f"{where}.ode")
    if task == Task.ODE and "domain" not in data:
        domain = unit_disc()
    else:
        if "domain" not in data:
            raise ConfigError(f"{where}.domain", "required")
        domain = domain_from_dict(data["domain"], f"{where}.domain")

    psi = _weight(data, "weight_psi", where, domain)
    phi = _weight(data, "weight_phi", where, domain)
    extra = _weight(data, "weight_extra", where, domain)

    function = None
    if data.get("function") is not None:
        function = monomialfn_from_dict(data["function"], f"{where}.function")
        if function.dimension != domain.dimension:
            raise ConfigError(f"{where}.function", "dimension differs from the domain")
    ideal = _derive_ideal(data.get("ideal"), where, psi, phi, function)
    if ideal is not None and ideal.dimension != domain.dimension:
        raise ConfigError(f"{where}.ideal", "dimension differs from the domain")

    alphas = []
    for i, alpha in enumerate(data.get("alpha", [[0] * domain.dimension])):
        if not isinstance(alpha, list) or len(alpha) != domain.dimension:
            raise ConfigError(f"{where}.alpha[{i}]", f"expected {domain.dimension} exponents")
        if any(not isinstance(k, int) or k < 0 for k in alpha):
            raise ConfigError(f"{where}.alpha[{i}]", "exponents must be nonnegative integers")
        alphas.append(tuple(alpha))

    t_grid = _grid(data, "t_grid", where, DEFAULT_T_GRID)
    if any(t < 0 for t in t_grid):
        raise ConfigError(f"{where}.t_grid", "thresholds must be >= 0")
    r_grid = _grid(data, "r_grid", where)
    if any(not 0 < r < 1 for r in r_grid):
        raise ConfigError(f"{where}.r_grid", "values must lie in (0, 1)")
    p_grid = _grid(data, "p_grid", where)
    if any(p <= 1 for p in p_grid):
        raise ConfigError(f"{where}.p_grid", "values must exceed 1")

    seed = seed if seed is not None else data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError(f"{where}.seed", f"expected a nonnegative integer, got {seed!r}")
    if method == Method.MONTE_CARLO and seed is None:
        raise ConfigError(f"{where}.seed", "required when method is monte_carlo")
    samples = samples if samples is not None else data.get("samples", DEFAULT_MC_SAMPLES)
    if not isinstance(samples, int) or samples < MC_MIN_SAMPLES:
        raise ConfigError(f"{where}.samples", f"expected an integer >= {MC_MIN_SAMPLES}, got {samples!r}")
    degree = data.get("degree", DEFAULT_DEGREE)
    if not isinstance(degree, int) or degree < 0:
        raise ConfigError(f"{where}.degree", f"expected a nonnegative integer, got {degree!r}")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in (data.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"{where}.tolerances.{key}", "unknown tolerance name")
        try:
            tolerances[key] = float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{where}.tolerances.{key}", str(e)) from e
        if not tolerances[key] >= 0:
            raise ConfigError(f"{where}.tolerances.{key}", "must be >= 0")

    checks = data.get("checks")
    if checks is None:
        checks = list(DEFAULT_CHECKS) if task == Task.VERIFY else []
    if not isinstance(checks, list) or any(c not in KNOWN_CHECKS for c in checks):
        raise ConfigError(f"{where}.checks", f"expected a list drawn from {sorted(KNOWN_CHECKS)}")

    expected = {}
    for key, value in (data.get("expected") or {}).items():
        if key not in EXPECTED_KEYS:
            raise ConfigError(f"{where}.expected.{key}", f"unknown constant; expected one of {sorted(EXPECTED_KEYS)}")
        try:
            expected[key] = float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{where}.expected.{key}", str(e)) from e

    return JobConfig(
        name=name, task=task, domain=domain, weight_psi=psi, weight_phi=phi,
        weight_extra=extra, function=function, ideal=ideal, alphas=alphas,
        t_grid=t_grid, r_grid=r_grid, p_grid=p_grid, method=method,
        samples=samples, seed=seed, degree=degree, tolerances=tolerances,
        checks=list(checks), expected=expected, ode=ode,
    )
