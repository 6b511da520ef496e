"""Uniform grid on [-1, 1] with n+1 cells of width h = 2/(n+1).

Every x in [-1, 1] has a grid number iota(x) in 1..n+1 and an intra-cell
position lambda(x) in [0, 1), with the single exception x = 1 which sits at
(n+1, 1). For a fixed lambda the points (lambda + j - 1) h - 1, j = 1..n+1,
form one "fiber"; the interpolated generators act fiber by fiber.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

__all__ = ["Grid", "GridDomainError", "grid_index", "project", "embed", "fiber_points"]

SNAP = 1e-12


class GridDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise GridDomainError("n must be an integer >= 3")

    @property
    def h(self) -> float:
        return 2.0 / (self.n + 1)

    @property
    def size(self) -> int:
        return self.n + 1

    def index(self, x):
        return grid_index(self, x)

    def points(self, lam: float = 0.0) -> np.ndarray:
        return fiber_points(self, lam)


def grid_index(grid: Grid, x) -> Tuple[np.ndarray, np.ndarray]:
    """(iota, lambda) for scalar or array x in [-1, 1].

    Points within SNAP*h of a cell boundary are moved onto that boundary,
    i.e. into the cell on its right with lambda = 0. x = 1 maps to (n+1, 1).
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < -1.0 - SNAP * grid.h) or np.any(xa > 1.0 + SNAP * grid.h):
        raise GridDomainError("x must lie in [-1, 1]")
    u = (xa + 1.0) / grid.h
    r = np.rint(u)
    u = np.where(np.abs(u - r) <= SNAP, r, u)
    iota = np.floor(u).astype(int) + 1
    lam = u - (iota - 1)
    top = iota >= grid.n + 2
    iota = np.where(top, grid.n + 1, iota)
    lam = np.where(top, 1.0, lam)
    lam = np.clip(lam, 0.0, 1.0)
    if xa.ndim == 0:
        return int(iota), float(lam)
    return iota, lam


def fiber_points(grid: Grid, lam: float) -> np.ndarray:
    j = np.arange(1, grid.n + 2)
    return (lam + j - 1) * grid.h - 1.0


def project(grid: Grid, f: Callable, lam: float) -> np.ndarray:
    """Pi_{n+1} f at intra-cell position lam: f((lam + j - 1)h - 1), j = 1..n+1.

    ``f`` must accept numpy arrays; values outside [-1, 1] are zero.
    """
    x = fiber_points(grid, lam)
    vals = np.asarray(f(np.clip(x, -1.0, 1.0)), dtype=float) * np.ones_like(x)
    vals = np.where((x < -1.0 - 1e-15) | (x > 1.0 + 1e-15), 0.0, vals)
    return vals


def embed(grid: Grid, v: np.ndarray, x) -> float:
    """Cell value of v at the grid number of x."""
    v = np.asarray(v)
    if v.shape[0] != grid.size:
        raise GridDomainError(f"vector length {v.shape[0]} != n+1 = {grid.size}")
    iota, _ = grid_index(grid, x)
    return v[np.asarray(iota) - 1]
