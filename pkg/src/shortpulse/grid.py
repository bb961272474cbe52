"""Uniform periodic grid, spectral transforms and quadrature on it."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    length: float
    x_left: float = 0.0

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.spacing * np.arange(self.n_points)

    @property
    def x_right(self) -> float:
        return self.x_left + self.length

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @property
    def rwavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.rfftfreq(self.n_points, d=self.spacing)

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.n_points * factor, self.length, self.x_left)


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has shape {values.shape}, grid expects ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + _values(other))

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - _values(other))

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f)


@dataclass(frozen=True)
class SpectralCoeffs:
    """Forward-normalized Fourier coefficients: a constant c maps to modes[0] == c."""

    grid: Grid1D
    modes: np.ndarray

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.grid.wavenumbers


def make_grid(n_points: int, length: float, x_left: float = 0.0) -> Grid1D:
    if int(n_points) != n_points or n_points < 8:
        raise ValueError(f"n_points must be an integer >= 8, got {n_points}")
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")
    return Grid1D(int(n_points), float(length), float(x_left))


def field_from_function(grid: Grid1D, fn) -> Field:
    return Field(grid, fn(grid.x))


def zeros(grid: Grid1D) -> Field:
    return Field(grid, np.zeros(grid.n_points))


def to_spectral(f: Field) -> SpectralCoeffs:
    return SpectralCoeffs(f.grid, np.fft.fft(f.values, norm="forward"))


def from_spectral(c: SpectralCoeffs, grid: Grid1D | None = None) -> Field:
    grid = c.grid if grid is None else grid
    return Field(grid, np.fft.ifft(c.modes, norm="forward").real)


def derivative_values(values: np.ndarray, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Spectral derivative on raw arrays; odd orders drop the Nyquist mode."""
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    if order == 0:
        return np.array(values, dtype=float)
    k = grid.rwavenumbers
    symbol = (1j * k) ** order
    if order % 2 == 1 and grid.n_points % 2 == 0:
        symbol[-1] = 0.0
    return np.fft.irfft(symbol * np.fft.rfft(values), n=grid.n_points)


def derivative(f: Field, order: int = 1) -> Field:
    return Field(f.grid, derivative_values(f.values, f.grid, order))


def cubic_values(values: np.ndarray) -> np.ndarray:
    """u**3 with 2x zero-padding, which removes all aliasing of a cubic product."""
    n = values.size
    coeffs = np.fft.rfft(values, norm="forward")
    if n % 2 == 0:
        coeffs[-1] = 0.0
    padded = np.zeros(n + 1, dtype=complex)
    padded[: coeffs.size] = coeffs
    fine = np.fft.irfft(padded, n=2 * n, norm="forward")
    cube = np.fft.rfft(fine**3, norm="forward")[: n // 2 + 1]
    if n % 2 == 0:
        cube[-1] = 0.0
    return np.fft.irfft(cube, n=n, norm="forward")


def cubic(f: Field) -> Field:
    return Field(f.grid, cubic_values(f.values))


def lp_norm_values(values: np.ndarray, spacing: float, p: float) -> float:
    a = np.abs(values)
    if a.size == 0:
        raise ValueError("empty window")
    if np.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    return float((spacing * np.sum(a**p)) ** (1.0 / p))


def lp_norm(f: Field, p: float = 2) -> float:
    return lp_norm_values(f.values, f.grid.spacing, p)


def window_mask(grid: Grid1D, window) -> np.ndarray:
    a, b = window
    if a < grid.x_left - 1e-12 or b > grid.x_right + 1e-12 or b <= a:
        raise ValueError(f"window {window} not inside grid span [{grid.x_left}, {grid.x_right})")
    x = grid.x
    mask = (x >= a) & (x <= b)
    if not mask.any():
        raise ValueError(f"window {window} contains no grid nodes")
    return mask


def lp_norm_local(f: Field, p: float, window) -> float:
    return lp_norm_values(f.values[window_mask(f.grid, window)], f.grid.spacing, p)


def integrate(values: np.ndarray, spacing: float) -> float:
    """Rectangle rule, spectrally accurate for smooth periodic integrands."""
    return float(spacing * np.sum(values))


def mean(f: Field) -> float:
    return float(np.mean(f.values))


def project_zero_mean(f: Field) -> Field:
    return Field(f.grid, f.values - np.mean(f.values))


def gaussian_derivative(x, order: int, center: float = 0.0, width: float = 1.0) -> np.ndarray:
    """order-th x-derivative of exp(-((x - center)/width)**2)."""
    s = (np.asarray(x, dtype=float) - center) / width
    coef = np.zeros(order + 1)
    coef[order] = 1.0
    herm = np.polynomial.hermite.hermval(s, coef)
    return (-1.0) ** order * herm * np.exp(-(s**2)) / width**order


def ricker_ic(amplitude: float, center: float, width: float, grid: Grid1D) -> Field:
    """Second derivative of a Gaussian: zero mean and zero-mean primitive by construction."""
    if width < 4 * grid.spacing:
        raise ValueError(f"width {width} under-resolved: need >= 4 * spacing = {4 * grid.spacing}")
    edge_distance = min(center - grid.x_left, grid.x_right - center)
    if edge_distance < 8 * width:
        raise ValueError(
            f"datum too close to the domain edge: distance {edge_distance} < 8 * width"
        )
    return Field(grid, amplitude * gaussian_derivative(grid.x, 2, center, width))


def write_snapshot(path, f: Field, time: float) -> None:
    path = Path(path)
    f.values.astype("<f8").tofile(path.with_suffix(".f64"))
    sidecar = {
        "n_points": f.grid.n_points,
        "length": f.grid.length,
        "x_left": f.grid.x_left,
        "time": time,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=1))


def read_snapshot(path) -> tuple[Field, float]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = Grid1D(int(meta["n_points"]), float(meta["length"]), float(meta["x_left"]))
    values = np.fromfile(path.with_suffix(".f64"), dtype="<f8")
    if values.size != grid.n_points:
        raise ValueError(f"{path}: {values.size} values, sidecar says {grid.n_points}")
    return Field(grid, values), float(meta["time"])
