"""
Command Line Runner
Runs mass, minimize, gcurve, lct, ode and verify over a job file or manifest
"""

import argparse
import json
import logging
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy import integrate

from analysis import (
    GCurve,
    EffectivenessResult,
    bergman_bound,
    check_concavity,
    check_differential_inequality,
    check_lower_bound,
    check_monotonicity,
    check_scaled_mass_bound,
    composite_jumping_number,
    concavity_defects,
    dk_lower_bound,
    effectiveness_threshold,
    g_curve,
    jumping_number,
    layer_cake,
)
from errors import ConfigError, SublevelL2Error
from hilbert import (
    MonomialFn,
    bergman_at_origin,
    constant_one,
    describe_function,
    function_mass,
    monomial,
    monomialfn_to_dict,
    truncation,
)
from ideals import plus_ideal
from job_config import JobConfig, Method, RunManifest, Task, load_config
from minimizer import GramSource, MinimizationMethod, MinimizationResult, minimal_l2
from odes import cutoff, gz_factor, mollified_v, ode_pair
from quadrature import monomial_mass, monomial_mass_mc, thread_count
from validation import CheckReport, check_expected, make_report, reports_frame, generate_summary_report
from weights import SublevelRegion, ToricWeight

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.csv"
MOLLIFIER_CONVERGENCE_TOL = 1e-3
PYTHAGORAS_MC_SIGMAS = 5
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

SUBCOMMANDS = {
    "mass": "weighted monomial masses over sublevel sets",
    "minimize": "minimal L2 integral and its minimizer",
    "gcurve": "sample G(t) on the configured t grid",
    "lct": "jumping numbers and plus-ideals",
    "ode": "sample the closed-form ODE pair",
    "verify": "run every configured check",
}

_SOLVERS = {
    Method.ORTHOGONAL: (MinimizationMethod.ORTHOGONAL, GramSource.EXACT),
    Method.LEAST_SQUARES: (MinimizationMethod.LEAST_SQUARES, GramSource.EXACT),
    Method.MONTE_CARLO: (MinimizationMethod.LEAST_SQUARES, GramSource.MONTE_CARLO),
}


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def format_cell(value) -> str:
    """CSV cell text: shortest round-trip floats, inf spelled out, lowercase booleans"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return format_cell(value) if not math.isfinite(value) else value
    if isinstance(value, np.integer):
        return int(value)
    return value


def _atomic_write(path: str, text: str):
    """Write via a temporary file in the target directory so readers never see a partial file"""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_csv(df: pd.DataFrame, path: str):
    if df.empty:
        text = ",".join(str(c) for c in df.columns) + "\n"
    else:
        cells = df.astype(object).apply(lambda column: column.map(format_cell))
        text = cells.to_csv(index=False, lineterminator="\n")
    _atomic_write(path, text)


def write_json(data: Dict, path: str):
    _atomic_write(path, json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n")


def artifact_name(job_name: str, suffix: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", job_name)
    return f"{safe}_{suffix}"


# ---------------------------------------------------------------------------
# one job
# ---------------------------------------------------------------------------

@dataclass
class JobOutcome:
    job: str
    reports: List[CheckReport] = field(default_factory=list)
    error: Optional[str] = None


class JobRunner:
    """Computes the artifacts and checks of a single job; shared results are cached"""

    def __init__(self, job: JobConfig, out_dir: str):
        self.job = job
        self.out_dir = out_dir

    # -- configured inputs --------------------------------------------------

    def _require(self, value, key: str, purpose: str):
        if value is None:
            raise ConfigError(f"{self.job.name}.{key}", f"required for {purpose}")
        return value

    @property
    def function(self) -> MonomialFn:
        return self.job.function if self.job.function is not None else constant_one(self.job.domain.dimension)

    @property
    def seed(self) -> int:
        return self.job.seed if self.job.seed is not None else 0

    def base_weight(self, purpose: str) -> ToricWeight:
        """psi when configured, else phi; it cuts out the sublevel sets"""
        weight = self.job.weight_psi if self.job.weight_psi is not None else self.job.weight_phi
        return self._require(weight, "weight_psi", purpose)

    def region(self, t: float, purpose: str) -> SublevelRegion:
        return SublevelRegion(self.job.domain, self.base_weight(purpose), float(t))

    def tolerance(self, name: str) -> float:
        return self.job.tolerances[name]

    def _path(self, suffix: str) -> str:
        return os.path.join(self.out_dir, artifact_name(self.job.name, suffix))

    # -- shared computations -----------------------------------------------

    def minimize_at(self, t: float) -> MinimizationResult:
        ideal = self._require(self.job.ideal, "ideal", "minimization")
        method, gram = _SOLVERS[self.job.method]
        basis = None
        if method == MinimizationMethod.LEAST_SQUARES:
            basis = truncation(max(self.job.degree, self.function.degree), self.job.domain.dimension)
        return minimal_l2(self.function, ideal, self.region(t, "minimization"), self.job.weight_phi,
                          basis=basis, method=method, gram=gram,
                          samples=self.job.samples, seed=self.seed)

    @cached_property
    def curve(self) -> GCurve:
        psi = self._require(self.job.weight_psi, "weight_psi", "the G curve")
        method, gram = _SOLVERS[self.job.method]
        return g_curve(self.function, self.job.ideal, psi, self.job.t_grid, method,
                       domain=self.job.domain, weight_phi=self.job.weight_phi, gram=gram,
                       degree=self.job.degree, samples=self.job.samples, seed=self.seed)

    @cached_property
    def effectiveness(self) -> EffectivenessResult:
        phi = self._require(self.job.weight_phi, "weight_phi", "effectiveness")
        return effectiveness_threshold(self.function, phi, self.job.domain,
                                       self.tolerance("effectiveness"))

    # -- tasks -------------------------------------------------------------

    def run_task(self, task: Task):
        handlers: Dict[Task, Callable[[], None]] = {
            Task.MASS: self.write_masses,
            Task.MINIMIZE: self.write_minimizer,
            Task.GCURVE: self.write_curve,
            Task.LCT: self.write_jumping_numbers,
            Task.ODE: self.write_ode,
        }
        handler = handlers.get(task)
        if handler is not None:
            handler()

    def write_masses(self):
        rows = []
        for alpha in self.job.alphas:
            for t in self.job.t_grid:
                region = self.region(t, "masses")
                if self.job.method == Method.MONTE_CARLO:
                    est = monomial_mass_mc(alpha, region, self.job.weight_phi, self.job.samples, self.seed)
                else:
                    est = monomial_mass(alpha, region, self.job.weight_phi, self.job.samples, self.seed)
                rows.append({
                    "alpha": " ".join(str(k) for k in alpha),
                    "t": t,
                    "value": est.value,
                    "abs_error": est.abs_error,
                    "method": est.method.value,
                    "diverged": est.diverged,
                })
        columns = ["alpha", "t", "value", "abs_error", "method", "diverged"]
        write_csv(pd.DataFrame(rows, columns=columns), self._path("mass.csv"))

    def write_minimizer(self):
        t = self.job.t_grid[0]
        result = self.minimize_at(t)
        write_json({
            "job": self.job.name,
            "t": t,
            "value": result.value,
            "method": result.method.value,
            "coefficients": monomialfn_to_dict(result.minimizer) if result.minimizer is not None else None,
            "minimizer": describe_function(result.minimizer) if result.minimizer is not None else None,
            "residual": result.residual_pythagoras,
            "residual_std_error": result.residual_std_error,
            "abs_error": result.abs_error,
            "diverged": result.diverged,
            "converged": result.converged,
        }, self._path("minimize.json"))

    def write_curve(self):
        curve = self.curve
        defects = np.zeros_like(curve.values)
        if curve.values.size >= 3 and curve.g0 > 0:
            defects[1:-1] = concavity_defects(curve.r_grid[::-1], curve.values[::-1])[::-1] / curve.g0
        df = pd.DataFrame({
            "t": curve.grid,
            "r": curve.r_grid,
            "G": curve.values,
            "exp(-t)*G0": np.exp(-curve.grid) * curve.g0,
            "concavity_defect": defects,
        })
        write_csv(df, self._path("gcurve.csv"))

    def write_jumping_numbers(self):
        weight = self.job.weight_phi if self.job.weight_phi is not None else self.base_weight("jumping numbers")
        f = self.function
        rows = []
        for alpha in f.exponents:
            rows.append(_jump_row(describe_function(monomial(alpha)), jumping_number(monomial(alpha), weight), weight))
        if len(f.terms) > 1:
            rows.append(_jump_row(describe_function(f), composite_jumping_number(f, weight), weight))
        columns = ["term", "jumping_number", "plus_ideal"]
        write_csv(pd.DataFrame(rows, columns=columns), self._path("lct.csv"))

    def write_ode(self):
        rows = []
        for t in _ode_grid(self.job):
            point = ode_pair(float(t))
            rows.append({
                "t": point.t,
                "u": point.u,
                "s": point.s,
                "residual1": point.residual1,
                "residual2": point.residual2,
                "positivity_margin": point.positivity_margin,
            })
        write_csv(pd.DataFrame(rows), self._path("ode.csv"))

    # -- checks ------------------------------------------------------------

    def run_checks(self) -> List[CheckReport]:
        checks: Dict[str, Callable[[], List[CheckReport]]] = {
            "lower_bound": lambda: [check_lower_bound(self.curve, self.tolerance("lower_bound"))],
            "monotone": lambda: [check_monotonicity(self.curve, self.tolerance("monotone"))],
            "concavity": lambda: [check_concavity(self.curve, self.tolerance("concavity"))],
            "differential": lambda: [check_differential_inequality(self.curve, self.tolerance("differential"))],
            "layer_cake": self.check_layer_cake,
            "effectiveness": lambda: [self.effectiveness.report],
            "bergman": self.check_bergman,
            "dk": lambda: [self.check_dk(use_bergman=False)],
            "dk_bergman": lambda: [self.check_dk(use_bergman=True)],
            "scaled_mass": self.check_scaled_mass,
            "pythagoras": self.check_pythagoras,
            "ode": self.check_ode,
            "mollifier": self.check_mollifier,
            "gz": self.check_gz,
        }
        reports = []
        for name in self.job.checks:
            reports.extend(checks[name]())
        for key in sorted(self.job.expected):
            actual = self.expected_value(key)
            reports.append(check_expected(f"expected_{key}", actual, self.job.expected[key],
                                          self.tolerance("expected")))
        return reports

    def check_layer_cake(self) -> List[CheckReport]:
        phi = self._require(self.job.weight_phi, "weight_phi", "the layer-cake identity")
        return [layer_cake(self.function, phi, self.job.domain)]

    def check_bergman(self) -> List[CheckReport]:
        phi = self._require(self.job.weight_phi, "weight_phi", "the Bergman bound")
        return [bergman_bound(phi, self.job.domain, self.tolerance("bergman"))]

    def check_dk(self, use_bergman: bool) -> CheckReport:
        phi = self._require(self.job.weight_phi, "weight_phi", "the Demailly-Kollar bound")
        if not self.job.r_grid:
            raise ConfigError(f"{self.job.name}.r_grid", "required for the Demailly-Kollar bound")
        extra = None if use_bergman else self.job.weight_extra
        tolerance = self.tolerance("dk")
        return dk_lower_bound(self.function, phi, self.job.domain, self.job.r_grid,
                              use_bergman=use_bergman, weight_extra=extra, tolerance=tolerance)

    def check_scaled_mass(self) -> List[CheckReport]:
        psi = self._require(self.job.weight_psi, "weight_psi", "the scaled-mass bound")
        if not self.job.p_grid:
            raise ConfigError(f"{self.job.name}.p_grid", "required for the scaled-mass bound")
        return [check_scaled_mass_bound(self.function, psi, self.job.domain, self.job.p_grid,
                                        self.tolerance("scaled_mass"))]

    def check_pythagoras(self) -> List[CheckReport]:
        """Closed-form residuals against the tolerance; Monte Carlo residuals against k standard errors"""
        worst, worst_at = 0.0, None
        for t in self.job.t_grid:
            result = self.minimize_at(t)
            if result.residual_pythagoras is None:
                continue
            residual = result.residual_pythagoras
            if result.residual_std_error is not None:
                residual = max(residual - PYTHAGORAS_MC_SIGMAS * result.residual_std_error, 0.0)
            if residual >= worst:
                worst, worst_at = residual, t
        return [make_report("pythagoras", worst, worst_at, self.tolerance("pythagoras"))]

    def check_ode(self) -> List[CheckReport]:
        worst, worst_at, min_margin = 0.0, None, math.inf
        for t in _ode_grid(self.job):
            point = ode_pair(float(t))
            residual = max(point.residual1, point.residual2)
            if residual >= worst:
                worst, worst_at = residual, point.t
            min_margin = min(min_margin, point.positivity_margin)
        if min_margin <= 0:
            worst = math.inf
        return [make_report("ode", worst, worst_at, self.tolerance("ode"), {"min_margin": min_margin})]

    def check_mollifier(self) -> List[CheckReport]:
        return mollifier_reports(self.job.ode.t0, self.job.ode.B, self.job.ode.eps,
                                 self.tolerance("mollifier"))

    def check_gz(self) -> List[CheckReport]:
        t0, B = self.job.ode.t0, self.job.ode.B
        value = gz_factor(t0, B)
        grid = np.linspace(0.0, t0 + B, 1001)[1:]
        sampled = max(math.exp(-ode_pair(float(t)).u) for t in grid)
        return [make_report("gz", abs(value - sampled), t0 + B, self.tolerance("gz"),
                            {"gz": value, "sampled": sampled})]

    def expected_value(self, key: str) -> float:
        f = self.function
        if key == "mass":
            return function_mass(f, self.region(self.job.t_grid[0], "the mass"), self.job.weight_phi).value
        if key == "C":
            return self.minimize_at(self.job.t_grid[0]).value
        if key == "G0":
            return self.curve.g0
        if key == "K":
            return bergman_at_origin(self.job.domain)
        if key == "ratio":
            return self.effectiveness.ratio
        if key == "p_star":
            return self.effectiveness.p_star
        if key == "jumping_number":
            weight = self.job.weight_phi if self.job.weight_phi is not None else self.base_weight("jumping numbers")
            return composite_jumping_number(f, weight)
        if key == "gz":
            return gz_factor(self.job.ode.t0, self.job.ode.B)
        raise ConfigError(f"{self.job.name}.expected.{key}", "unknown constant")


def _jump_row(term: str, c: float, weight: ToricWeight) -> Dict:
    return {
        "term": term,
        "jumping_number": c,
        "plus_ideal": plus_ideal(weight, c).describe() if math.isfinite(c) else "",
    }


def _ode_grid(job: JobConfig) -> np.ndarray:
    return np.geomspace(job.ode.t_min, job.ode.t_max, job.ode.points)


def mollifier_reports(t0: float, B: float, eps_values: List[float], tolerance: float) -> List[CheckReport]:
    """
    Cutoff bounds, v_eps(t) = t for t >= -t0 - eps, 0 <= v_eps' <= 1, unit mass
    of v_eps'', and uniform closeness of v_eps' to b at the smallest eps.
    """
    pair = cutoff(t0, B)
    ts = np.linspace(-t0 - B - 1.0, 1.0, 401)
    v = pair.v(ts)
    bounds_gap = float(max(np.max(np.maximum(ts, -t0 - B) - v), np.max(v - np.maximum(ts, -t0)), 0.0))

    worst, worst_at = bounds_gap, None
    details: Dict = {"cutoff_bounds": bounds_gap}
    for eps in eps_values:
        mv = mollified_v(eps, t0, B)
        identity = max(abs(mv.value(float(t)) - float(t)) for t in np.linspace(-t0 - eps, 2.0, 41))
        slope = 0.0
        for t in ts:
            _, d1, d2 = mv.evaluate(float(t))
            slope = max(slope, -d1, d1 - 1.0, -d2)
        h = mv.half_width
        mass, _ = integrate.quad(mv.second_derivative, mv.lower - h, mv.upper + h,
                                 points=[mv.lower + h, mv.upper - h],
                                 epsabs=1e-13, epsrel=1e-12, limit=200)
        violation = max(identity, slope, abs(mass - 1.0))
        details[f"eps={eps:g}"] = {"identity": identity, "slope": slope, "mass": mass}
        if violation >= worst:
            worst, worst_at = violation, eps
    reports = [make_report("mollifier", worst, worst_at, tolerance, details)]

    eps = min(eps_values)
    mv = mollified_v(eps, t0, B)
    gap = max(abs(mv.derivative(float(t)) - float(pair.b(t))) for t in ts)
    reports.append(make_report("mollifier_convergence", gap, eps, MOLLIFIER_CONVERGENCE_TOL))
    return reports


def run_job(job: JobConfig, out_dir: str, task: Optional[Task]) -> JobOutcome:
    """Artifacts for the task (every configured check on verify); any error ends only this job"""
    runner = JobRunner(job, out_dir)
    outcome = JobOutcome(job.name)
    try:
        selected = job.task if task is None else task
        if selected != Task.VERIFY:
            runner.run_task(selected)
        outcome.reports = runner.run_checks()
    except Exception as e:
        if isinstance(e, SublevelL2Error):
            logger.error("Job %s failed: %s", job.name, e)
        else:
            logger.exception("Job %s crashed", job.name)
        outcome.error = f"{type(e).__name__}: {e}"
        outcome.reports.append(CheckReport("job_error", False, math.inf, None, 0.0, {"error": outcome.error}))
        return outcome
    if outcome.reports:
        checks = pd.DataFrame([{
            "check": r.name,
            "passed": r.passed,
            "worst_violation": r.worst_violation,
            "location": r.location,
            "tolerance": r.tolerance,
            "skipped": r.skipped,
            "details": json.dumps(_json_safe(r.details), sort_keys=True),
        } for r in outcome.reports])
        write_csv(checks, runner._path("checks.csv"))
    return outcome


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def run(manifest: RunManifest, out_dir: str, task: Optional[Task] = None) -> int:
    """
    Run every job, write summary.csv and print the summary.

    Exit code 0 iff no check failed and no job errored.
    """
    os.makedirs(out_dir, exist_ok=True)
    if not manifest.jobs:
        logger.warning("Manifest has no jobs; nothing to run")
    workers = max(1, min(thread_count(), len(manifest.jobs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda job: run_job(job, out_dir, task), manifest.jobs))

    rows, errors = [], {}
    for outcome in sorted(outcomes, key=lambda o: o.job):
        rows.extend({"job": outcome.job, "report": report} for report in outcome.reports)
        if outcome.error:
            errors[outcome.job] = outcome.error
    summary = reports_frame(rows)
    write_csv(summary, os.path.join(out_dir, SUMMARY_FILE))
    print(generate_summary_report(summary, errors))

    failed = bool(errors) or (not summary.empty and not summary["passed"].all())
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sublevel-l2",
        description="Minimal L2 integrals on sublevel sets of toric weights",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="job file or manifest (JSON)")
        sub.add_argument("--out", default=None, help="output directory (default: manifest output_dir or ./out)")
        sub.add_argument("--seed", type=int, default=None, help="override every job's seed")
        sub.add_argument("--samples", type=int, default=None, help="override every job's Monte Carlo samples")
        sub.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        config = load_config(args.config, seed=args.seed, samples=args.samples)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"❌ Cannot read {args.config}: {e}", file=sys.stderr)
        return 2

    manifest = config if isinstance(config, RunManifest) else RunManifest([config])
    out_dir = args.out or manifest.output_dir or "out"
    task = None if args.command == "verify" else Task(args.command)
    logger.info("Running %d job(s) into %s", len(manifest.jobs), out_dir)
    return run(manifest, out_dir, task)


if __name__ == "__main__":
    sys.exit(main())
