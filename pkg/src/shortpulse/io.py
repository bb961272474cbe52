"""On-disk layouts for trajectories and reports.

A trajectory directory holds

    params.json          solver, parameters, grid, status
    diagnostics.csv      one row per diagnostics time, versioned columns
    snapshots/NNNN.f64   little-endian float64 u values, plus NNNN.json sidecar
    last_valid.f64/json  final accepted state (differs from the last snapshot
                         only for aborted runs)
    series/<name>.dat    two-column (t, value) file per diagnostics column
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import grid as g
from .diagnostics import CSV_SCHEMA_VERSION, DiagnosticsRecord
from .dispersive import DispersiveParams, Trajectory
from .finite_volume import FVParams, _p_of
from .grid import Field
from .nonlocal_terms import solve_p_values

TRAJECTORY_SCHEMA_VERSION = 1
CSV_HEADER = f"# shortpulse diagnostics.csv schema_version={CSV_SCHEMA_VERSION}"


class MissingArtifact(FileNotFoundError):
    """A stored trajectory or report lacks an expected file."""


def _fmt(v: float) -> str:
    return repr(float(v))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    # JSON has no NaN/inf; store them as strings so the files stay standard.
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_plain(obj):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats as strings."""
    return _clean(json.loads(json.dumps(obj, default=_json_default)))


def write_json(path, obj) -> None:
    text = json.dumps(to_plain(obj), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n")


def _restore(obj):
    if isinstance(obj, str) and obj in ("nan", "inf", "-inf"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    return obj


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact: {path}")
    return _restore(json.loads(path.read_text()))


# ---------------------------------------------------------------- diagnostics

def write_diagnostics_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DiagnosticsRecord.columns())
        for r in records:
            w.writerow([_fmt(v) for v in r.as_row()])


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact: {path}")
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != CSV_HEADER:
            raise ValueError(f"{path}: unsupported header {first!r}")
        rows = list(csv.reader(fh))
    if rows[0] != DiagnosticsRecord.columns():
        raise ValueError(f"{path}: column mismatch")
    return [DiagnosticsRecord(*(float(v) for v in row)) for row in rows[1:]]


def write_series(directory, records) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cols = DiagnosticsRecord.columns()
    table = np.array([r.as_row() for r in records], dtype=float).reshape(-1, len(cols))
    for j, name in enumerate(cols[1:], start=1):
        write_dat(directory / f"{name}.dat", table[:, 0], table[:, j], ("t", name))


def write_dat(path, x, y, labels=("x", "y")) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {labels[0]} {labels[1]}\n")
        for a, b in zip(x, y):
            fh.write(f"{_fmt(a)} {_fmt(b)}\n")


# ---------------------------------------------------------------- trajectories

def _solver_of(params) -> str:
    return "dispersive" if isinstance(params, DispersiveParams) else "fv"


def save_trajectory(traj: Trajectory, directory) -> Path:
    directory = Path(directory)
    (directory / "snapshots").mkdir(parents=True, exist_ok=True)
    grid = traj.grid
    params = traj.params.to_dict()
    params.pop("solver")
    last_t, last_u = traj.last_valid if traj.last_valid else (traj.times[-1], traj.snapshots[-1])
    write_json(directory / "params.json", {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "solver": _solver_of(traj.params),
        "params": params,
        "grid": {"n_points": grid.n_points, "length": grid.length, "x_left": grid.x_left},
        "status": traj.status,
        "message": traj.message,
        "n_snapshots": len(traj.snapshots),
        "last_valid_time": float(last_t),
    })
    for i, (t, u) in enumerate(zip(traj.times, traj.snapshots)):
        g.write_snapshot(directory / "snapshots" / f"{i:04d}", u, t)
    g.write_snapshot(directory / "last_valid", last_u, last_t)
    write_diagnostics_csv(directory / "diagnostics.csv", traj.diagnostics)
    write_series(directory / "series", traj.diagnostics)
    return directory


def params_from_dict(solver: str, params: dict):
    if solver == "dispersive":
        return DispersiveParams(**params)
    if solver == "fv":
        return FVParams(**params)
    raise ValueError(f"unknown solver {solver!r}")


def p_from_u(u: Field, params) -> Field:
    """P exactly as the solver that produced u computes it."""
    if isinstance(params, DispersiveParams):
        return Field(u.grid, solve_p_values(u.values, u.grid, params.epsilon))
    return Field(u.grid, _p_of(u.values, u.grid.spacing))


def load_trajectory(directory) -> Trajectory:
    directory = Path(directory)
    meta = read_json(directory / "params.json")
    params = params_from_dict(meta["solver"], meta["params"])
    grid = g.Grid1D(int(meta["grid"]["n_points"]), float(meta["grid"]["length"]),
                    float(meta["grid"]["x_left"]))
    traj = Trajectory(params=params, grid=grid, status=meta["status"], message=meta["message"])
    for i in range(int(meta["n_snapshots"])):
        path = directory / "snapshots" / f"{i:04d}"
        if not path.with_suffix(".f64").exists():
            raise MissingArtifact(f"missing artifact: {path.with_suffix('.f64')}")
        u, t = g.read_snapshot(path)
        traj.times.append(t)
        traj.snapshots.append(u)
        traj.p_snapshots.append(p_from_u(u, params))
    if (directory / "last_valid.f64").exists():
        u, t = g.read_snapshot(directory / "last_valid")
        traj.last_valid = (t, u)
    traj.diagnostics = read_diagnostics_csv(directory / "diagnostics.csv")
    return traj
