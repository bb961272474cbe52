"""CLI behaviour, exercised in subprocesses so --seedless cannot leak into the test process."""

import json
import subprocess
import sys

import numpy as np
import pytest

from shortpulse import io


def cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "shortpulse", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def write(path, obj):
    path.write_text(json.dumps(obj, indent=1) if not isinstance(obj, str) else obj)
    return path


RUN = {"schema_version": 1, "solver": "dispersive", "epsilon": 0.1, "beta": 0.01,
       "grid": {"n_points": 256}, "t_final": 0.2}
FV = {"schema_version": 1, "solver": "fv", "grid": {"n_points": 256}, "t_final": 0.2}
SWEEP = {"schema_version": 1, "epsilons": [0.2, 0.1, 0.05], "grid": {"n_points": 256},
         "t_final": 0.2, "comparison_times": [0.2], "p_norms": [1, 2]}


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = write(base / "run.json", RUN)
    res = cli("run", "--config", cfg, "--out", base / "run", "--seedless")
    assert res.returncode == 0, res.stderr
    return base / "run"


def test_run_writes_artifacts(run_dir):
    names = {p.name for p in run_dir.iterdir()}
    assert {"params.json", "diagnostics.csv", "snapshots", "series", "last_valid.f64",
            "config.json"} <= names
    meta = json.loads((run_dir / "params.json").read_text())
    assert meta["schema_version"] == 1 and meta["status"] == "completed"
    assert (run_dir / "diagnostics.csv").read_text().startswith("# shortpulse diagnostics.csv schema_version=1")
    snap = np.fromfile(run_dir / "snapshots" / "0000.f64", dtype="<f8")
    assert snap.size == json.loads((run_dir / "snapshots" / "0000.json").read_text())["n_points"]
    first = (run_dir / "series" / "l2_u.dat").read_text().splitlines()
    assert first[0].startswith("#") and len(first[1].split()) == 2
    assert not list(run_dir.parent.glob(".*partial*"))


def test_check_passes_on_fresh_run(run_dir):
    res = cli("check", run_dir)
    assert res.returncode == 0, res.stdout
    assert "FAIL" not in res.stdout
    assert cli("check", "--out", run_dir).returncode == 0


def test_check_fails_on_tampered_diagnostics(run_dir, tmp_path):
    import shutil
    copy = tmp_path / "tampered"
    shutil.copytree(run_dir, copy)
    csv = copy / "diagnostics.csv"
    lines = csv.read_text().splitlines()
    cells = lines[3].split(",")
    cells[1] = repr(float(cells[1]) + 1e-3)
    lines[3] = ",".join(cells)
    csv.write_text("\n".join(lines) + "\n")
    res = cli("check", copy)
    assert res.returncode == 1
    assert "FAIL" in res.stdout


def test_check_missing_artifact(run_dir, tmp_path):
    import shutil
    copy = tmp_path / "broken"
    shutil.copytree(run_dir, copy)
    (copy / "snapshots" / "0003.f64").unlink()
    res = cli("check", copy)
    assert res.returncode == 1
    assert "missing artifact" in res.stderr


def test_existing_output_is_not_overwritten(run_dir, tmp_path):
    cfg = write(tmp_path / "run.json", RUN)
    res = cli("run", "--config", cfg, "--out", run_dir)
    assert res.returncode == 1
    assert "exists" in res.stderr


@pytest.mark.parametrize("text, needle", [
    ('{"schema_version": 1,\n "solver": "dispersive",\n "epsilon": 0.1,\n "beta": 0.01,\n}', ":5:1:"),
    ('{"schema_version": 1,\n "solver": "dispersive",\n "epsilon": 2.0,\n "beta": 0.01}', ":3:13: epsilon:"),
    ('{"schema_version": 1,\n "solver": "dispersive",\n "beta": 0.01}', ":1:1: <root>:"),
    ('{"schema_version": 1,\n "solver": "fv",\n "grid": {"n_points": 64},\n "ic": {"width": 0.5}}',
     ":4:8: ic:"),
    ('{"schema_version": 1,\n "solver": "fv",\n "colour": 1}', ":1:1: <root>: Additional"),
])
def test_malformed_run_config(tmp_path, text, needle):
    cfg = write(tmp_path / "bad.json", text)
    out = tmp_path / "out"
    res = cli("run", "--config", cfg, "--out", out)
    assert res.returncode == 2
    assert needle in res.stderr, res.stderr
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["bad.json"]


def test_sweep_with_two_epsilons_is_config_error(tmp_path):
    cfg = write(tmp_path / "sweep.json", {**SWEEP, "epsilons": [0.1, 0.05]})
    res = cli("sweep", "--config", cfg, "--out", tmp_path / "sw")
    assert res.returncode == 2
    assert "epsilons" in res.stderr and "too short" in res.stderr
    assert not (tmp_path / "sw").exists()


def test_sweep_increasing_epsilons_is_config_error(tmp_path):
    cfg = write(tmp_path / "sweep.json", {**SWEEP, "epsilons": [0.1, 0.05, 0.07]})
    res = cli("sweep", "--config", cfg, "--out", tmp_path / "sw")
    assert res.returncode == 2
    assert "epsilons[2]" in res.stderr


def test_sweep_then_check(tmp_path):
    cfg = write(tmp_path / "sweep.json", SWEEP)
    out = tmp_path / "sw"
    res = cli("sweep", "--config", cfg, "--out", out, "--jobs", 2, "--seedless")
    assert res.returncode == 0, res.stderr
    report = io.read_json(out / "report.json")
    assert report["schema_version"] == 1 and report["seedless"] is True
    assert len(list((out / "runs").iterdir())) == 3
    assert (out / "scaling.json").exists() and (out / "entropy.json").exists()
    assert (out / "series" / "distance_t0.2_x-10_10_p1.dat").exists()
    res = cli("check", out)
    assert res.returncode == 0, res.stdout
    assert "report.json recomputable" in res.stdout


def test_compare_between_stored_runs(run_dir, tmp_path):
    fv_cfg = write(tmp_path / "fv.json", FV)
    assert cli("run", "--config", fv_cfg, "--out", tmp_path / "fv").returncode == 0
    cfg = write(tmp_path / "cmp.json", {"schema_version": 1, "run_a": str(run_dir), "run_b": "fv",
                                        "times": [0.0, 0.2], "p_norms": [1]})
    res = cli("compare", "--config", cfg, "--out", tmp_path / "cmp")
    assert res.returncode == 0, res.stderr
    rows = json.loads((tmp_path / "cmp" / "compare.json").read_text())["distances"]
    assert rows[0]["distance"] == 0.0
    assert rows[1]["distance"] > rows[0]["distance"]


def test_compare_missing_run(tmp_path):
    cfg = write(tmp_path / "cmp.json", {"schema_version": 1, "run_a": "nope", "run_b": "nope",
                                        "times": [0.0]})
    res = cli("compare", "--config", cfg, "--out", tmp_path / "cmp")
    assert res.returncode == 1
    assert "missing artifact" in res.stderr
    assert not (tmp_path / "cmp").exists()


def test_mms_small(tmp_path):
    cfg = write(tmp_path / "mms.json", {"schema_version": 1, "t_final": 0.1,
                                        "dts": [1e-2, 5e-3], "spatial_n_points": [64]})
    res = cli("mms", "--config", cfg, "--out", tmp_path / "mms", "--seedless")
    assert res.returncode == 0, res.stderr
    data = json.loads((tmp_path / "mms" / "mms.json").read_text())
    assert data["temporal"]["observed_order"] > 3
    assert (tmp_path / "mms" / "temporal_error.dat").exists()


def test_seedless_trips_on_rng(tmp_path):
    code = ("import sys; from shortpulse import cli; cli.forbid_rng();\n"
            "import numpy as np\n"
            "try:\n    np.random.default_rng(1)\nexcept cli.RngUsed:\n    sys.exit(7)\n")
    res = subprocess.run([sys.executable, "-c", code])
    assert res.returncode == 7


def test_missing_required_flags():
    assert cli("run").returncode == 2
    assert cli("sweep", "--out", "x").returncode == 2
