"""Shared test fixtures: random admissible fields and small grids."""

import numpy as np

from shortpulse import grid as g


def smooth_field(seed: int, grid, n_modes: int = 12, amplitude: float = 1.0):
    """Zero-mean band-limited field with random coefficients on the lowest modes."""
    rng = np.random.default_rng(seed)
    x = grid.x - grid.x_left
    out = np.zeros(grid.n_points)
    for m in range(1, n_modes + 1):
        k = 2 * np.pi * m / grid.length
        a, b = rng.normal(size=2) / m
        out += a * np.cos(k * x) + b * np.sin(k * x)
    out *= amplitude / max(np.max(np.abs(out)), 1e-300)
    return g.Field(grid, out - np.mean(out))


def localized_field(seed: int, grid, width: float = 1.0):
    """Random combination of Gaussian derivatives of order >= 1 (zero mean on the line)."""
    rng = np.random.default_rng(seed)
    vals = np.zeros(grid.n_points)
    half = 0.5 * grid.length - 8 * width
    center0 = grid.x_left + 0.5 * grid.length
    for order in (1, 2, 3):
        c = center0 + rng.uniform(-0.3, 0.3) * half
        vals += rng.normal() * g.gaussian_derivative(grid.x, order, c, width)
    return g.Field(grid, vals - np.mean(vals))
