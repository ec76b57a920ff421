"""
Check Reports
Pass/fail records for every verified inequality and the run summary built from them
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import pandas as pd

# Tolerances per check; job configs may override any entry
DEFAULT_TOLERANCES: Dict[str, float] = {
    "lower_bound": 1e-9,
    "concavity": 1e-8,
    "differential": 1e-9,
    "layer_cake": 1e-6,
    "layer_cake_adaptive": 1e-3,
    "effectiveness": 0.0,
    "bergman": 1e-9,
    "dk": 1e-8,
    "scaled_mass": 1e-9,
    "pythagoras": 1e-9,
    "monotone": 1e-12,
    "expected": 1e-9,
    "ode": 1e-10,
    "mollifier": 1e-10,
    "gz": 1e-10,
}


@dataclass
class CheckReport:
    """Result of one verified inequality: passed iff worst_violation <= tolerance"""
    name: str
    passed: bool
    worst_violation: float
    location: Optional[float]  # grid value or parameter of the worst case
    tolerance: float
    details: Dict = field(default_factory=dict)
    skipped: bool = False
    reason: str = ""

    @property
    def summary(self) -> str:
        if self.skipped:
            return f"⏭️ {self.name}: skipped ({self.reason})"
        where = "" if self.location is None else f" at {self.location:g}"
        if self.passed:
            return f"✅ {self.name}: worst violation {self.worst_violation:.3e}{where} (tol {self.tolerance:.1e})"
        return f"❌ {self.name}: worst violation {self.worst_violation:.3e}{where} exceeds tol {self.tolerance:.1e}"


def make_report(name: str, worst_violation: float, location: Optional[float], tolerance: float,
                details: Optional[Dict] = None) -> CheckReport:
    worst = float(worst_violation)
    passed = not math.isnan(worst) and worst <= tolerance
    return CheckReport(name, passed, worst, location, float(tolerance), dict(details or {}))


def skipped_report(name: str, reason: str, tolerance: float) -> CheckReport:
    """A check whose hypothesis fails; it does not count as a failure"""
    return CheckReport(name, True, 0.0, None, float(tolerance), {}, skipped=True, reason=reason)


def check_expected(name: str, actual: float, expected: float,
                   tolerance: float = DEFAULT_TOLERANCES["expected"]) -> CheckReport:
    """Relative agreement with a known constant; inf matches only inf"""
    if math.isinf(expected) or math.isinf(actual):
        violation = 0.0 if actual == expected else math.inf
    elif expected == 0:
        violation = abs(actual)
    else:
        violation = abs(actual - expected) / abs(expected)
    return make_report(name, violation, None, tolerance, {"actual": actual, "expected": expected})


def reports_frame(rows: List[Dict]) -> pd.DataFrame:
    """
    Summary table, one row per CheckReport.

    Each row dict carries "job" and "report"; rows are ordered by job name and
    then by position within the job.
    """
    records = []
    for position, row in enumerate(rows):
        report: CheckReport = row["report"]
        records.append({
            "job": row["job"],
            "check": report.name,
            "passed": report.passed,
            "worst_violation": report.worst_violation,
            "location": report.location,
            "tolerance": report.tolerance,
            "skipped": report.skipped,
            "_order": position,
        })
    columns = ["job", "check", "passed", "worst_violation", "location", "tolerance", "skipped"]
    if not records:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame(records).sort_values(["job", "_order"], kind="stable")
    return df[columns].reset_index(drop=True)


def generate_summary_report(summary: pd.DataFrame, errors: Optional[Dict[str, str]] = None) -> str:
    """Console report for a finished run"""
    errors = errors or {}
    lines = []
    lines.append("=" * 60)
    lines.append("🔍 VERIFICATION SUMMARY")
    lines.append("=" * 60)

    if summary.empty:
        lines.append("No checks were run.")
    else:
        shown = summary.copy()
        shown["passed"] = shown["passed"].map({True: "✅", False: "❌"})
        lines.append(shown.to_markdown(index=False, floatfmt=".3e"))

    if errors:
        lines.append("\n⚠️ Failed jobs:")
        for job, message in sorted(errors.items()):
            lines.append(f"  • {job}: {message}")

    failed = int((~summary["passed"]).sum()) if not summary.empty else 0
    lines.append("\n" + "=" * 60)
    if failed == 0 and not errors:
        lines.append(f"✅ ALL CHECKS PASSED - {len(summary)} checks")
    else:
        lines.append(f"❌ {failed} CHECKS FAILED, {len(errors)} JOBS ERRORED")
    lines.append("=" * 60)
    return "\n".join(lines)
