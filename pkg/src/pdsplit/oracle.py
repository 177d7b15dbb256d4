"""Slow, independent reference computations for tests.

Nothing here shares code with :mod:`pdsplit.prox` or :mod:`pdsplit.splitting`.
Objectives are vectorized: they receive an ``(N, d)`` array of points and
return ``N`` values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GridSpec", "grid_points", "grid_prox_oracle", "grid_min", "subgradient_reference"]

MAX_GRID_POINTS = 10_000_000


@dataclass(frozen=True, eq=False)
class GridSpec:
    lower: np.ndarray
    upper: np.ndarray
    points_per_axis: int

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1 or not 1 <= lo.size <= 2:
            raise ValueError("grids must be 1-D or 2-D")
        if np.any(lo >= hi):
            raise ValueError("lower must be < upper componentwise")
        if self.points_per_axis < 2:
            raise ValueError("need at least two points per axis")
        if self.points_per_axis ** lo.size > MAX_GRID_POINTS:
            raise ValueError("grid too large")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    @property
    def step(self):
        """Grid spacing per axis."""
        return (self.upper - self.lower) / (self.points_per_axis - 1)


def grid_points(grid):
    """All grid points as an ``(N, d)`` array in row-major order."""
    axes = [np.linspace(l, u, grid.points_per_axis) for l, u in zip(grid.lower, grid.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_min(objective, grid):
    """Exhaustive minimum over the grid; ties go to the first point."""
    pts = grid_points(grid)
    vals = np.asarray(objective(pts), dtype=np.float64)
    i = int(np.argmin(vals))
    return pts[i].copy(), float(vals[i])


def grid_prox_oracle(objective, gamma, z, grid):
    """Grid argmin of ``f(y) + ||y - z||^2 / (2 gamma)``."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if z.size != grid.dim:
        raise ValueError("z and grid dimensions differ")

    def penalized(pts):
        return objective(pts) + np.sum((pts - z) ** 2, axis=1) / (2.0 * gamma)

    return grid_min(penalized, grid)[0]


def subgradient_reference(objective, subgradient, x0, steps, step_scale=1.0):
    """Normalized subgradient descent with step ``step_scale / sqrt(n + 1)``.

    ``objective`` and ``subgradient`` take a single point here. Returns the
    best iterate seen.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    best, best_val = x.copy(), float(objective(x))
    for n in range(steps):
        g = np.asarray(subgradient(x), dtype=np.float64)
        gn = np.linalg.norm(g)
        if gn == 0.0:
            return x
        x = x - (step_scale / np.sqrt(n + 1.0)) * g / gn
        val = float(objective(x))
        if val < best_val:
            best, best_val = x.copy(), val
    return best
