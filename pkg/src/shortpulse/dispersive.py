"""Pseudospectral integrator for the regularized short pulse system

    u_t = (1/6) (u^3)_x + beta u_xxx + eps u_xx + gamma P,
    -eps P_xx + P_x = u,

on a periodic grid. The stiff linear part eps u_xx + beta u_xxx is advanced
exactly per Fourier mode (integrating factor); the cubic flux and the
nonlocal source go through classical RK4 in the transformed variable.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import grid as g
from .grid import Field, Grid1D
from .nonlocal_terms import _check_mean, regularized_symbol, solve_p_values

CFL_SAFETY = 0.5


class StepRejected(RuntimeError):
    """Raised when a step fails the advective guard or produces non-finite values."""


@dataclass(frozen=True)
class DispersiveParams:
    epsilon: float
    beta: float
    gamma: float
    dt: float
    t_final: float
    snapshot_interval: float = 0.1
    diagnostics_interval: float = 0.1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final}")
        if not (self.snapshot_interval > 0 and self.diagnostics_interval > 0):
            raise ValueError("snapshot and diagnostics intervals must be positive")

    def to_dict(self) -> dict:
        return {"solver": "dispersive", **asdict(self)}


@dataclass
class Trajectory:
    """Snapshots of u (and the matching P) plus diagnostics records.

    ``status`` is ``"completed"`` or ``"aborted"``; an aborted run keeps every
    state recorded before the failure, and ``last_valid`` holds the final
    accepted (time, u).
    """

    params: object
    grid: Grid1D
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    p_snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    status: str = "completed"
    message: str = ""
    last_valid: tuple | None = None

    @property
    def failed(self) -> bool:
        return self.status != "completed"

    @property
    def u_array(self) -> np.ndarray:
        return np.array([s.values for s in self.snapshots])

    @property
    def p_array(self) -> np.ndarray:
        return np.array([s.values for s in self.p_snapshots])

    def snapshot_at(self, t: float, tol: float = 1e-9) -> int:
        times = np.asarray(self.times)
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > tol:
            raise ValueError(f"no snapshot within {tol:g} of t = {t} (nearest {times[i]})")
        return i


def linear_symbol(k, epsilon: float, beta: float):
    """Fourier symbol of eps d_xx + beta d_xxx."""
    k = np.asarray(k, dtype=float)
    return -epsilon * k**2 - 1j * beta * k**3


def _advective_limit(u: np.ndarray, spacing: float) -> float:
    return CFL_SAFETY * spacing / max(1.0, float(np.max(u**2)) / 2.0)


class _Operators:
    """Per-grid spectral factors, cached for one (grid, eps, beta)."""

    def __init__(self, grid: Grid1D, epsilon: float, beta: float):
        self.grid = grid
        self.n = grid.n_points
        k = grid.rwavenumbers
        self.ik = 1j * k
        if self.n % 2 == 0:
            self.ik[-1] = 0.0
        self.lam = linear_symbol(k, epsilon, beta)
        self.p_symbol = regularized_symbol(grid, epsilon)
        self._exp = {}

    def exponentials(self, dt: float):
        if dt not in self._exp:
            half = np.exp(0.5 * dt * self.lam)
            self._exp[dt] = (half, half * half)
        return self._exp[dt]


def _nonlinear_hat(u_hat, ops: _Operators, gamma: float, nonlinear=True, source=True):
    """Transform of (1/6)(u^3)_x + gamma P, with P solved from the current u."""
    out = np.zeros_like(u_hat)
    if nonlinear:
        u = np.fft.irfft(u_hat, n=ops.n)
        out += ops.ik / 6.0 * np.fft.rfft(g.cubic_values(u))
    if source:
        out += gamma * ops.p_symbol * u_hat
    return out


def nonlinear_rhs(u: Field, params: DispersiveParams) -> Field:
    _check_mean(u.values)
    ops = _Operators(u.grid, params.epsilon, params.beta)
    rhs_hat = _nonlinear_hat(np.fft.rfft(u.values), ops, params.gamma)
    return Field(u.grid, np.fft.irfft(rhs_hat, n=u.grid.n_points))


def _ifrk4(u_hat, dt, t, ops, gamma, forcing=None, nonlinear=True, source=True):
    half, full = ops.exponentials(dt)

    def rhs(v, time):
        out = _nonlinear_hat(v, ops, gamma, nonlinear, source)
        if forcing is not None:
            out = out + forcing(time)
        return out

    k1 = rhs(u_hat, t)
    k2 = rhs(half * (u_hat + 0.5 * dt * k1), t + 0.5 * dt)
    k3 = rhs(half * u_hat + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(full * u_hat + dt * half * k3, t + dt)
    new = full * u_hat + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)
    new[0] = 0.0
    return new


def step(u: Field, params: DispersiveParams, dt: float | None = None, *,
         nonlinear: bool = True, source: bool = True, _ops=None) -> Field:
    """One integrating-factor RK4 step. ``nonlinear``/``source`` are test hooks."""
    dt = params.dt if dt is None else dt
    limit = _advective_limit(u.values, u.grid.spacing)
    if dt > limit * (1 + 1e-12):
        raise StepRejected(f"dt = {dt:g} exceeds advective limit {limit:g}")
    ops = _ops or _Operators(u.grid, params.epsilon, params.beta)
    new_hat = _ifrk4(np.fft.rfft(u.values), dt, 0.0, ops, params.gamma,
                     nonlinear=nonlinear, source=source)
    values = np.fft.irfft(new_hat, n=u.grid.n_points)
    if not np.all(np.isfinite(values)):
        raise StepRejected("non-finite values after step")
    return Field(u.grid, values)


def default_time_step(u0: Field, interval: float) -> float:
    """Largest dt dividing ``interval`` that sits at half the advective guard of u0."""
    guard = _advective_limit(u0.values, u0.grid.spacing)
    return interval / math.ceil(interval / (0.5 * guard))


def _cadence(interval: float, dt: float) -> int:
    return max(1, int(round(interval / dt)))


def integrate(u0: Field, params: DispersiveParams, *, record_diagnostics: bool = True,
              forcing: Callable | None = None, nonlinear: bool = True,
              source: bool = True) -> Trajectory:
    """Integrate to params.t_final.

    ``forcing(t)`` may return an extra right-hand side in rfft space (used for
    manufactured solutions). On StepRejected the partial trajectory is
    returned with ``status == "aborted"``.
    """
    from .diagnostics import EnergyBudget, record

    _check_mean(u0.values)
    grid = u0.grid
    ops = _Operators(grid, params.epsilon, params.beta)
    traj = Trajectory(params=params, grid=grid)
    budget = EnergyBudget(params.epsilon, params.gamma) if record_diagnostics else None

    n_steps = int(math.floor(params.t_final / params.dt + 1e-9))
    t_grid = params.dt * n_steps
    tail = params.t_final - t_grid
    if tail <= 1e-12 * max(1.0, params.t_final):
        tail = 0.0
    snap_every = _cadence(params.snapshot_interval, params.dt)
    diag_every = _cadence(params.diagnostics_interval, params.dt)

    def p_of(values):
        return Field(grid, np.fft.irfft(ops.p_symbol * np.fft.rfft(values), n=grid.n_points))

    def keep(t, u, snap, diag):
        p = p_of(u.values)
        if snap:
            traj.times.append(t)
            traj.snapshots.append(u)
            traj.p_snapshots.append(p)
        if diag and budget is not None:
            budget.update(t, u)
            traj.diagnostics.append(record(u, p, params, t, budget))

    u = u0
    keep(0.0, u, True, True)
    traj.last_valid = (0.0, u)
    u_hat = np.fft.rfft(u.values)
    total = n_steps + (1 if tail > 0 else 0)
    for n in range(1, total + 1):
        t_prev = params.dt * (n - 1)
        dt = params.dt if n <= n_steps else tail
        try:
            limit = _advective_limit(u.values, grid.spacing)
            if dt > limit * (1 + 1e-12):
                raise StepRejected(f"t = {t_prev:g}: dt = {dt:g} exceeds advective limit {limit:g}")
            u_hat = _ifrk4(u_hat, dt, t_prev, ops, params.gamma, forcing, nonlinear, source)
            values = np.fft.irfft(u_hat, n=grid.n_points)
            if not np.all(np.isfinite(values)):
                raise StepRejected(f"t = {t_prev:g}: non-finite values")
        except StepRejected as exc:
            traj.status = "aborted"
            traj.message = str(exc)
            return traj
        u = Field(grid, values)
        t = params.dt * n if n <= n_steps else params.t_final
        last = n == total
        keep(t, u, n % snap_every == 0 or last, n % diag_every == 0 or last)
        traj.last_valid = (t, u)
    return traj


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact space-time solution and the x/t derivatives the forcing needs."""

    u: Callable
    u_t: Callable
    u_x: Callable
    u_xx: Callable
    u_xxx: Callable


def cos_ricker(amplitude: float = 1.0, center: float = 0.0, width: float = 1.0) -> ManufacturedSolution:
    """u*(t, x) = cos(t) * A * G''(x), G the Gaussian of the given width."""

    def gd(order):
        return lambda x: amplitude * g.gaussian_derivative(x, order, center, width)

    r, r1, r2, r3 = gd(2), gd(3), gd(4), gd(5)
    return ManufacturedSolution(
        u=lambda t, x: math.cos(t) * r(x),
        u_t=lambda t, x: -math.sin(t) * r(x),
        u_x=lambda t, x: math.cos(t) * r1(x),
        u_xx=lambda t, x: math.cos(t) * r2(x),
        u_xxx=lambda t, x: math.cos(t) * r3(x),
    )


def zero_solution() -> ManufacturedSolution:
    z = lambda t, x: np.zeros_like(np.asarray(x, dtype=float))
    return ManufacturedSolution(z, z, z, z, z)


def manufactured_forcing(exact: ManufacturedSolution, grid: Grid1D, params: DispersiveParams):
    """f = u*_t - (1/6)(u*^3)_x - beta u*_xxx - eps u*_xx - gamma P[u*], in rfft space."""
    x = grid.x

    def forcing(t):
        u = exact.u(t, x)
        f = (exact.u_t(t, x) - 0.5 * u**2 * exact.u_x(t, x)
             - params.beta * exact.u_xxx(t, x) - params.epsilon * exact.u_xx(t, x)
             - params.gamma * solve_p_values(u, grid, params.epsilon))
        return np.fft.rfft(f - np.mean(f))

    return forcing


def integrate_manufactured(params: DispersiveParams, grid: Grid1D,
                           exact: ManufacturedSolution | None = None):
    """Run with manufactured forcing; returns (trajectory, error table)."""
    exact = cos_ricker() if exact is None else exact
    u0 = Field(grid, exact.u(0.0, grid.x))
    traj = integrate(u0, params, record_diagnostics=False,
                     forcing=manufactured_forcing(exact, grid, params))
    errors = [float(np.max(np.abs(s.values - exact.u(t, grid.x))))
              for t, s in zip(traj.times, traj.snapshots)]
    table = {
        "times": list(traj.times),
        "sup_errors": errors,
        "final_sup_error": errors[-1],
        "max_sup_error": max(errors),
    }
    return traj, table


def observed_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step size)."""
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
