import json
import math
import os

import pandas as pd
import pytest

from cli import format_cell, main, run, run_job
from errors import ConfigError, NegativeWeightError
from job_config import Method, RunManifest, Task, load_config, manifest_from_dict

DISC_JOB = {
    "task": "gcurve",
    "domain": {"kind": "polydisc", "radii": [1.0]},
    "weight_psi": {"type": "toric", "coeffs": [2]},
    "function": [{"exp": [0], "re": 1, "im": 0}],
    "ideal": {"generators": [[1]]},
    "t_grid": [0.0, 0.5, 1.0, 2.0],
    "checks": ["lower_bound", "monotone", "concavity", "differential"],
    "expected": {"G0": math.pi},
}


def _write(tmp_path, data, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _reference_data(reference_manifest_path):
    with open(reference_manifest_path) as f:
        return json.load(f)


def test_single_job_loads(tmp_path):
    job = load_config(_write(tmp_path, DISC_JOB))
    assert job.task == Task.GCURVE
    assert job.method == Method.ORTHOGONAL
    assert job.ideal.generators == ((1,),)
    assert job.expected == {"G0": math.pi}


def test_positive_weight_is_rejected(tmp_path):
    data = dict(DISC_JOB, domain={"kind": "polydisc", "radii": [2.0]},
                weight_psi={"type": "toric", "coeffs": [2.0]})
    with pytest.raises(NegativeWeightError):
        load_config(_write(tmp_path, data))


def test_reference_manifest_loads(reference_manifest_path):
    manifest = load_config(reference_manifest_path)
    assert isinstance(manifest, RunManifest)
    assert len(manifest.jobs) == 10
    assert manifest.output_dir == "out/reference"


def test_monte_carlo_needs_seed(tmp_path):
    with pytest.raises(ConfigError, match="seed"):
        load_config(_write(tmp_path, dict(DISC_JOB, method="monte_carlo")))
    job = load_config(_write(tmp_path, dict(DISC_JOB, method="monte_carlo")), seed=3)
    assert job.seed == 3


def test_grid_must_increase(tmp_path):
    with pytest.raises(ConfigError, match="t_grid"):
        load_config(_write(tmp_path, dict(DISC_JOB, t_grid=[0.0, 1.0, 1.0])))


def test_empty_grids_are_rejected(tmp_path):
    with pytest.raises(ConfigError, match="t_grid"):
        load_config(_write(tmp_path, dict(DISC_JOB, t_grid=[])))
    with pytest.raises(ConfigError, match="r_grid"):
        load_config(_write(tmp_path, dict(DISC_JOB, r_grid=[])))


def test_unknown_check_and_expected_key(tmp_path):
    with pytest.raises(ConfigError, match="checks"):
        load_config(_write(tmp_path, dict(DISC_JOB, checks=["lower_bound", "nonsense"])))
    with pytest.raises(ConfigError, match="expected.bogus"):
        load_config(_write(tmp_path, dict(DISC_JOB, expected={"bogus": 1.0})))


def test_duplicate_job_names():
    with pytest.raises(ConfigError, match="duplicate"):
        manifest_from_dict({"jobs": [dict(DISC_JOB, name="a"), dict(DISC_JOB, name="a")]})


def test_reference_manifest_passes(tmp_path, reference_manifest_path):
    out = tmp_path / "out"
    assert run(load_config(reference_manifest_path), str(out)) == 0
    summary = pd.read_csv(out / "summary.csv", dtype=str, keep_default_na=False)
    assert len(summary) > 0
    assert set(summary["passed"]) == {"true"}
    assert set(summary["job"]) == {job["name"] for job in _reference_data(reference_manifest_path)["jobs"]}
    assert "expected_gz" in set(summary["check"])


def test_runs_are_byte_identical(tmp_path, reference_manifest_path):
    manifest = load_config(reference_manifest_path)
    first, second = tmp_path / "a", tmp_path / "b"
    run(manifest, str(first))
    run(manifest, str(second))
    names = sorted(os.listdir(first))
    assert names == sorted(os.listdir(second))
    assert "lower_bound_disc_gcurve.csv" in names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_wrong_expected_value_fails(tmp_path):
    manifest = manifest_from_dict({"jobs": [dict(DISC_JOB, name="disc", expected={"G0": 3.0})]})
    out = tmp_path / "out"
    assert run(manifest, str(out)) == 1
    summary = pd.read_csv(out / "summary.csv", dtype=str, keep_default_na=False)
    row = summary[summary["check"] == "expected_G0"].iloc[0]
    assert row["passed"] == "false"


def test_empty_manifest(tmp_path, caplog):
    out = tmp_path / "out"
    assert run(manifest_from_dict({"jobs": []}), str(out)) == 0
    assert "no jobs" in caplog.text
    assert (out / "summary.csv").read_text() == "job,check,passed,worst_violation,location,tolerance,skipped\n"


def test_gcurve_artifact(tmp_path):
    out = tmp_path / "out"
    code = main(["gcurve", "--config", _write(tmp_path, dict(DISC_JOB, name="disc")), "--out", str(out)])
    assert code == 0
    df = pd.read_csv(out / "disc_gcurve.csv")
    assert list(df.columns) == ["t", "r", "G", "exp(-t)*G0", "concavity_defect"]
    assert df["G"].iloc[0] == pytest.approx(math.pi)
    assert df["G"].iloc[-1] == pytest.approx(math.pi * math.exp(-2))


def test_main_reports_config_errors(tmp_path, capsys):
    code = main(["verify", "--config", _write(tmp_path, dict(DISC_JOB, method="bogus"))])
    assert code == 2
    assert "method" in capsys.readouterr().err
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2


def test_format_cell():
    assert format_cell(None) == ""
    assert format_cell(float("nan")) == ""
    assert format_cell(True) == "true"
    assert format_cell(3) == "3"
    assert format_cell(0.1) == "0.1"
    assert format_cell(math.inf) == "inf"
    assert format_cell(-math.inf) == "-inf"
    assert format_cell("orthogonal") == "orthogonal"


def test_unexpected_error_ends_only_its_job(tmp_path):
    manifest = manifest_from_dict({"jobs": [dict(DISC_JOB, name="broken", task="minimize"),
                                            dict(DISC_JOB, name="disc")]})
    broken_job = next(job for job in manifest.jobs if job.name == "broken")
    broken_job.t_grid = []
    outcome = run_job(broken_job, str(tmp_path), Task.MINIMIZE)
    assert outcome.error.startswith("IndexError")
    assert [r.name for r in outcome.reports] == ["job_error"]
    assert not outcome.reports[0].passed

    out = tmp_path / "out"
    assert run(manifest, str(out)) == 1
    summary = pd.read_csv(out / "summary.csv", dtype=str, keep_default_na=False)
    broken = summary[summary["job"] == "broken"]
    assert list(broken["check"]) == ["job_error"]
    assert set(summary[summary["job"] == "disc"]["passed"]) == {"true"}


def test_minimize_artifact(tmp_path):
    out = tmp_path / "out"
    code = main(["minimize", "--config", _write(tmp_path, dict(DISC_JOB, name="disc", task="minimize")),
                 "--out", str(out)])
    assert code == 0
    with open(out / "disc_minimize.json") as f:
        result = json.load(f)
    assert result["value"] == pytest.approx(math.pi)
    assert result["residual"] == pytest.approx(0.0, abs=1e-12)
    assert "residual_pythagoras" not in result
