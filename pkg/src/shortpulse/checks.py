"""Invariant suite over stored artifacts, and report recomputation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .diagnostics import EnergyBudget, record
from .dispersive import DispersiveParams, Trajectory
from .harness import SweepConfig, run_sweep

MEAN_U_TOL = 1e-10
MEAN_P_TOL = 1e-12
IDENTITY_TOL = 1e-10
ENERGY_TOL = 1e-6
F_EDGE_TOL = 1e-8
REPORT_RTOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def _worst(values) -> float:
    values = [v for v in values]
    return max(values) if values else 0.0


def check_trajectory(traj: Trajectory, label: str = "trajectory") -> list[CheckResult]:
    out = []
    times = np.asarray(traj.times)
    out.append(CheckResult(f"{label}: completed", not traj.failed, traj.message))
    ok_times = times.size > 0 and times[0] == 0 and bool(np.all(np.diff(times) > 0))
    out.append(CheckResult(f"{label}: times start at 0 and increase", ok_times))

    mean_u = _worst(abs(float(np.mean(u.values))) for u in traj.snapshots)
    out.append(CheckResult(f"{label}: |mean u| <= {MEAN_U_TOL:g}", mean_u <= MEAN_U_TOL,
                           f"max {mean_u:.3e}"))
    rel_p = _worst(abs(float(np.mean(p.values))) / max(float(np.max(np.abs(p.values))), 1e-300)
                   for p in traj.p_snapshots)
    out.append(CheckResult(f"{label}: |mean P| <= {MEAN_P_TOL:g} ||P||_inf", rel_p <= MEAN_P_TOL,
                           f"max {rel_p:.3e}"))

    # Recompute records from snapshots; the energy budget needs them at every diagnostics time.
    snap_t = [float(t) for t in traj.times]
    diag_t = [r.t for r in traj.diagnostics]
    budget_ok = snap_t == diag_t
    budget = EnergyBudget(float(getattr(traj.params, "epsilon", 0.0)), traj.params.gamma)
    recomputed = []
    for t, u, p in zip(traj.times, traj.snapshots, traj.p_snapshots):
        if budget_ok:
            budget.update(t, u)
        recomputed.append(record(u, p, traj.params, t, budget if budget_ok else None))

    if isinstance(traj.params, DispersiveParams):
        pid = _worst(r.p_identity_residual for r in recomputed)
        upid = _worst(r.up_identity_residual for r in recomputed)
        out.append(CheckResult(f"{label}: P identity residual <= {IDENTITY_TOL:g}", pid <= IDENTITY_TOL,
                               f"max {pid:.3e}"))
        out.append(CheckResult(f"{label}: int uP identity residual <= {IDENTITY_TOL:g}",
                               upid <= IDENTITY_TOL, f"max {upid:.3e}"))
        u0_sq = traj.diagnostics[0].l2_u ** 2 if traj.diagnostics else 0.0
        worst = min((r.energy_margin / (math.exp(2 * traj.params.gamma * r.t) * u0_sq)
                     for r in traj.diagnostics if u0_sq > 0 and r.t > 0), default=0.0)
        out.append(CheckResult(f"{label}: energy margin >= -{ENERGY_TOL:g} e^(2 gamma t)||u0||^2",
                               worst >= -ENERGY_TOL, f"min relative margin {worst:.3e}"))

    fe = _worst(abs(r.F_right_edge) / (traj.grid.length * r.linf_P) if r.linf_P > 0 else 0.0
                for r in recomputed)
    out.append(CheckResult(f"{label}: |F(right edge)| <= {F_EDGE_TOL:g} L ||P||_inf", fe <= F_EDGE_TOL,
                           f"max {fe:.3e}"))

    stored = {r.t: r for r in traj.diagnostics}
    mismatches = 0
    compared = 0
    for r in recomputed:
        s = stored.get(r.t)
        if s is None:
            continue
        compared += 1
        for name in r.columns():
            if name == "energy_margin" and not budget_ok:
                continue
            if not _close(getattr(r, name), getattr(s, name)):
                mismatches += 1
    out.append(CheckResult(f"{label}: diagnostics.csv recomputable from snapshots", mismatches == 0,
                           f"{compared} rows compared, {mismatches} mismatching values"))
    return out


def _close(a, b, rtol: float = REPORT_RTOL) -> bool:
    if isinstance(a, bool) or isinstance(b, bool) or isinstance(a, str) or isinstance(b, str):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        a, b = float(a), float(b)
        if math.isnan(a) or math.isnan(b):
            return math.isnan(a) and math.isnan(b)
        return abs(a - b) <= rtol * max(abs(a), abs(b)) or a == b
    if a is None or b is None:
        return a is b
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], rtol) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_close(x, y, rtol) for x, y in zip(a, b))
    return a == b


def _differences(a, b, path="") -> list[str]:
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{path}.{k}: present on one side only")
            else:
                out += _differences(a[k], b[k], f"{path}.{k}")
        return out
    if isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        out = []
        for i, (x, y) in enumerate(zip(a, b)):
            out += _differences(x, y, f"{path}[{i}]")
        return out
    return [] if _close(a, b) else [f"{path}: stored {a!r}, recomputed {b!r}"]


def run_dirs(directory) -> list[Path]:
    return sorted(p for p in (Path(directory) / "runs").iterdir() if p.is_dir())


def check_sweep(directory) -> list[CheckResult]:
    directory = Path(directory)
    stored = io.read_json(directory / "report.json")
    config = SweepConfig(**stored["config"])
    reference = io.load_trajectory(directory / "reference")
    runs = []
    results = check_trajectory(reference, "reference")
    for d in run_dirs(directory):
        traj = io.load_trajectory(d)
        runs.append((traj.params, traj))
        results += check_trajectory(traj, d.name)
    report, _, _ = run_sweep(config, reference=reference, runs=runs)
    fresh = io._restore(io.to_plain(report.to_dict()))
    stored_cmp = {k: v for k, v in stored.items() if k in fresh}
    diffs = _differences(stored_cmp, fresh)
    detail = "all values reproduced" if not diffs else "; ".join(diffs[:5])
    results.append(CheckResult("report.json recomputable from stored snapshots", not diffs, detail))
    return results


def check_path(directory) -> list[CheckResult]:
    """Dispatch on layout: a sweep directory has report.json, a run has params.json."""
    directory = Path(directory)
    if (directory / "report.json").exists():
        return check_sweep(directory)
    if (directory / "params.json").exists():
        return check_trajectory(io.load_trajectory(directory), directory.name or "run")
    raise io.MissingArtifact(f"{directory}: neither report.json nor params.json found")
