"""First-order monotone finite-volume solver for the limit equation

    u_t + f(u)_x = gamma P,   P_x = u,   f(u) = -u^3 / 6.

Cells are centered on the grid nodes; interfaces are periodic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dispersive import Trajectory
from .grid import Field
from .nonlocal_terms import _check_mean, primitive, primitive_values


@dataclass(frozen=True)
class FVParams:
    gamma: float
    t_final: float
    cfl: float = 0.45
    flux_kind: str = "godunov"
    snapshot_interval: float = 0.1
    diagnostics_interval: float = 0.1

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final}")
        if self.flux_kind not in NUMERICAL_FLUXES:
            raise ValueError(f"flux_kind must be one of {sorted(NUMERICAL_FLUXES)}")
        if not (self.snapshot_interval > 0 and self.diagnostics_interval > 0):
            raise ValueError("snapshot and diagnostics intervals must be positive")

    def to_dict(self) -> dict:
        return {"solver": "fv", **asdict(self)}


def flux(u):
    return -(np.asarray(u, dtype=float) ** 3) / 6.0


def godunov_flux(ul, ur):
    # f is non-increasing, so the interval extremum is always attained at ur.
    return flux(ur)


def rusanov_flux(ul, ur):
    ul = np.asarray(ul, dtype=float)
    ur = np.asarray(ur, dtype=float)
    alpha = np.maximum(ul**2, ur**2) / 2.0
    return 0.5 * (flux(ul) + flux(ur)) - 0.5 * alpha * (ur - ul)


NUMERICAL_FLUXES = {"godunov": godunov_flux, "rusanov": rusanov_flux}


def stable_dt(u: np.ndarray, spacing: float, cfl: float) -> float:
    speed = float(np.max(u**2)) / 2.0
    return np.inf if speed == 0 else cfl * spacing / speed


def fv_update(u: np.ndarray, p: np.ndarray, dt: float, spacing: float, gamma: float,
              numerical_flux=godunov_flux) -> np.ndarray:
    """u_j - dt/h (F_{j+1/2} - F_{j-1/2}) + dt gamma P_j on raw arrays."""
    right = numerical_flux(u, np.roll(u, -1))  # F_{j+1/2}
    return u - (dt / spacing) * (right - np.roll(right, 1)) + dt * gamma * p


def fv_step(u: Field, P: Field | None, dt: float, gamma: float, flux_kind: str = "godunov",
            *, source: bool = True) -> Field:
    """One forward-Euler monotone step; P defaults to primitive(u). ``source`` is a test hook."""
    if P is None:
        P = primitive(u).p
    values = fv_update(u.values, P.values, dt, u.grid.spacing, gamma if source else 0.0,
                       NUMERICAL_FLUXES[flux_kind])
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite state in finite-volume step")
    return Field(u.grid, values)


def _p_of(values: np.ndarray, spacing: float) -> np.ndarray:
    raw = primitive_values(values, spacing)
    return raw - np.mean(raw)


def fv_integrate(u0: Field, params: FVParams, *, record_diagnostics: bool = True,
                 source: bool = True, max_dt: float | None = None) -> Trajectory:
    """Integrate to t_final with a CFL step recomputed every step.

    Steps are shortened to land exactly on snapshot and diagnostics times.
    """
    from .diagnostics import EnergyBudget, record

    _check_mean(u0.values)
    grid = u0.grid
    h = grid.spacing
    nflux = NUMERICAL_FLUXES[params.flux_kind]
    gamma = params.gamma if source else 0.0
    traj = Trajectory(params=params, grid=grid)
    budget = EnergyBudget(0.0, params.gamma) if record_diagnostics else None

    def keep(t, values, snap, diag):
        u = Field(grid, values)
        p = Field(grid, _p_of(values, h))
        if snap:
            traj.times.append(t)
            traj.snapshots.append(u)
            traj.p_snapshots.append(p)
        if diag and budget is not None:
            budget.update(t, u)
            traj.diagnostics.append(record(u, p, params, t, budget))

    u = np.array(u0.values)
    keep(0.0, u, True, True)
    traj.last_valid = (0.0, u)
    n_snap = n_diag = 1
    t = 0.0
    tol = 1e-12 * max(1.0, params.t_final)
    while t < params.t_final - tol:
        next_snap = min(n_snap * params.snapshot_interval, params.t_final)
        next_diag = min(n_diag * params.diagnostics_interval, params.t_final)
        target = min(next_snap, next_diag)
        dt = min(stable_dt(u, h, params.cfl), target - t)
        if max_dt is not None:
            dt = min(dt, max_dt)
        p = _p_of(u, h)
        u = fv_update(u, p, dt, h, gamma, nflux)
        if not np.all(np.isfinite(u)):
            traj.status = "aborted"
            traj.message = f"t = {t:g}: non-finite state"
            traj.last_valid = (traj.last_valid[0], Field(grid, traj.last_valid[1]))
            return traj
        t_new = t + dt
        hit_snap = abs(t_new - next_snap) <= tol
        hit_diag = abs(t_new - next_diag) <= tol
        if hit_snap:
            t_new = next_snap
            n_snap += 1
        if hit_diag:
            t_new = next_diag
            n_diag += 1
        t = t_new
        done = t >= params.t_final - tol
        if hit_snap or hit_diag or done:
            keep(t, u, hit_snap or done, hit_diag or done)
        traj.last_valid = (t, u)
    traj.last_valid = (traj.last_valid[0], Field(grid, traj.last_valid[1]))
    return traj


def total_variation(values: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(np.append(values, values[0])))))
