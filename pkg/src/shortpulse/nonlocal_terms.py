"""The nonlocal field P: regularized elliptic solve and plain primitives.

Both solvers normalize P to zero mean. On the whole line P(t, 0) = 0 and
int P dx = 0 hold together; on a truncated domain they differ by a
constant, so the value at x = 0 is kept as a diagnostic instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import Field, Grid1D

MEAN_TOL = 1e-10


class NonZeroMean(ValueError):
    """Input violates the zero-mean admissibility condition."""


@dataclass(frozen=True)
class NonlocalSolution:
    p: Field
    boundary_value: float
    mean_p: float
    value_at_origin: float = float("nan")


def _check_mean(values: np.ndarray, what: str = "u") -> None:
    scale = np.max(np.abs(values)) if values.size else 0.0
    m = np.mean(values)
    if abs(m) > MEAN_TOL * scale:
        raise NonZeroMean(f"mean({what}) = {m:.3e} exceeds {MEAN_TOL:g} * max|{what}| = {MEAN_TOL * scale:.3e}")


def _origin_index(grid: Grid1D) -> int | None:
    if not grid.x_left <= 0.0 < grid.x_right:
        return None
    return int(round(-grid.x_left / grid.spacing)) % grid.n_points


def regularized_symbol(grid: Grid1D, epsilon: float) -> np.ndarray:
    """1 / (i k + eps k^2) on the rfft modes, with the zero and Nyquist modes set to 0."""
    k = grid.rwavenumbers
    denom = 1j * k + epsilon * k**2
    inv = np.zeros_like(denom)
    inv[1:] = 1.0 / denom[1:]
    if grid.n_points % 2 == 0:
        inv[-1] = 0.0
    return inv


def solve_p_values(u: np.ndarray, grid: Grid1D, epsilon: float) -> np.ndarray:
    return np.fft.irfft(regularized_symbol(grid, epsilon) * np.fft.rfft(u), n=grid.n_points)


def solve_p_regularized(u: Field, epsilon: float) -> NonlocalSolution:
    """Solve -eps P'' + P' = u spectrally, mean-zero normalization."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    _check_mean(u.values)
    p = solve_p_values(u.values, u.grid, epsilon)
    return _package(u.grid, p, p[0])


def _package(grid: Grid1D, p: np.ndarray, boundary_value: float, at_origin=None) -> NonlocalSolution:
    i0 = _origin_index(grid)
    if at_origin is None:
        at_origin = p[i0] if i0 is not None else float("nan")
    return NonlocalSolution(Field(grid, p), float(boundary_value), float(np.mean(p)), float(at_origin))


def primitive_values(u: np.ndarray, spacing: float) -> np.ndarray:
    """Trapezoidal running integral anchored at the left edge (stands in for -inf)."""
    return cumulative_trapezoid(u, dx=spacing, initial=0.0)


def primitive(u: Field, anchor: str = "left_edge") -> NonlocalSolution:
    """P = int_{-inf}^x u dy, then shifted to zero mean."""
    if anchor != "left_edge":
        raise ValueError(f"unsupported anchor {anchor!r}")
    _check_mean(u.values)
    raw = primitive_values(u.values, u.grid.spacing)
    i0 = _origin_index(u.grid)
    at_origin = raw[i0] if i0 is not None else float("nan")
    p = raw - np.mean(raw)
    return _package(u.grid, p, p[0], at_origin)


def second_primitive(p: Field) -> Field:
    """F = int_{-inf}^x P dy; F at the right edge approximates int P dx."""
    _check_mean(p.values, "P")
    return Field(p.grid, primitive_values(p.values, p.grid.spacing))


def second_primitive_right_edge(p: Field) -> float:
    """F at x_left + length: the last node plus the periodic closing cell.

    For a mean-zero P this equals int P dx and vanishes to rounding.
    """
    f = second_primitive(p).values
    return float(f[-1] + 0.5 * p.grid.spacing * (p.values[-1] + p.values[0]))
