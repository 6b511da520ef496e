"""Time evolution and resolvents of the interpolated discrete generators.

The interpolated operator maps each lambda-fiber of the grid into itself, so
exp(t G_h) acts fiber by fiber: for a query point x we take the fiber
lambda(x), exponentiate the (n+1)x(n+1) rate matrix M(lambda) (or its
transpose for densities) and read off component iota(x).

Exponentials are computed by uniformization: with q >= max |M_ii| the matrix
P = I + M/q is (sub)stochastic and

    exp(tM) v = sum_k Poisson(qt; k) P^k v,

a sum of non-negative terms for non-negative v.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .coeffs import CoefficientTable, build_table
from .generator import BoundaryCase, interpolation_matrix
from .grid import Grid, fiber_points, grid_index, project

__all__ = [
    "GridFunction",
    "EvolutionRequest",
    "DivergenceGuard",
    "expm_uniformized",
    "evolve",
    "evolve_fiber",
    "resolvent_solve",
    "duality_check",
    "fiber_matrix",
    "laplace_evolve",
]

POISSON_TAIL = 1e-14
MAX_QT = 1e7


class DivergenceGuard(RuntimeError):
    """q t is too large for a single uniformization sweep."""


@dataclass
class GridFunction:
    grid: Grid
    lam: float
    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return fiber_points(self.grid, self.lam)

    def mass(self) -> float:
        return float(self.grid.h * np.sum(self.values))

    def to_csv(self) -> str:
        lines = ["x,value"]
        lines += [f"{xi!r},{vi!r}" for xi, vi in zip(self.x.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"


def _table_for(grid: Grid, table: Optional[CoefficientTable], sym=None) -> CoefficientTable:
    if table is not None:
        if abs(table.h - grid.h) > 1e-14 * grid.h:
            raise ValueError("coefficient table step does not match the grid")
        return table
    if sym is None:
        raise ValueError("need a coefficient table or a symbol")
    return build_table(sym, grid.h, grid.n + 2)


def fiber_matrix(case, table: CoefficientTable, grid: Grid, lam: float, direction: str = "backward",
                 check: bool = True) -> np.ndarray:
    M = interpolation_matrix(case, table, grid.n, lam, check=check)
    if direction == "forward":
        return M.T
    if direction != "backward":
        raise ValueError("direction must be 'backward' or 'forward'")
    return M


def expm_uniformized(M: np.ndarray, t: float, V: np.ndarray, tail: float = POISSON_TAIL) -> np.ndarray:
    """exp(tM) V for a rate matrix (or its transpose) M and vector(s) V."""
    V = np.asarray(V, dtype=float)
    if t == 0:
        return V.copy()
    if t < 0:
        raise ValueError("t must be >= 0")
    q = float(np.max(np.abs(np.diag(M))))
    if q == 0.0:
        return V.copy()
    qt = q * t
    if qt > MAX_QT:
        raise DivergenceGuard(f"q*t = {qt:.3g} exceeds {MAX_QT:g}; split the time interval")
    P = np.eye(M.shape[0]) + M / q
    kmax = int(stats.poisson.isf(tail, qt)) + 2
    kmin = int(stats.poisson.ppf(tail, qt))
    weights = stats.poisson.pmf(np.arange(kmax + 1), qt)
    out = np.zeros_like(V)
    cur = V.copy()
    for k in range(kmax + 1):
        if k >= kmin:
            out += weights[k] * cur
        cur = P @ cur
    return out


def laplace_evolve(M: np.ndarray, v: np.ndarray, beta: float, nodes: int = 20,
                   step: float = 0.28) -> np.ndarray:
    """int_0^inf exp(-beta t) exp(tM) v dt by an exp-sinh trapezoid rule.

    Nodes t_k = exp(pi/2 sinh(s_k)) cluster both near 0 (stiff modes) and
    toward large t, which plain Gauss-Laguerre does not resolve.
    """
    s = (np.arange(nodes) - (nodes - 1) / 2.0) * step
    t = np.exp(0.5 * np.pi * np.sinh(s))
    w = step * t * 0.5 * np.pi * np.cosh(s) * np.exp(-beta * t)
    out = np.zeros_like(np.asarray(v, dtype=float))
    for tk, wk in zip(t, w):
        if wk > 1e-18:
            out += wk * expm_uniformized(M, tk, v)
    return out


def evolve_fiber(case, table, grid, lam, v0, t, direction="backward") -> np.ndarray:
    M = fiber_matrix(case, table, grid, lam, direction)
    return expm_uniformized(M, t, v0)


@dataclass
class EvolutionRequest:
    case: Union[str, BoundaryCase]
    direction: str
    grid: Grid
    init: Union[Callable, GridFunction]
    t: float
    query: Optional[Sequence[float]] = None
    table: Optional[CoefficientTable] = None
    symbol: object = None

    def __post_init__(self):
        self.case = BoundaryCase.parse(self.case)
        if self.direction not in ("backward", "forward"):
            raise ValueError("direction must be backward or forward")
        if not (np.isfinite(self.t) and self.t >= 0):
            raise ValueError("t must be finite and >= 0")
        if self.query is not None:
            q = np.asarray(self.query, dtype=float)
            if np.any(q < -1) or np.any(q > 1):
                raise ValueError("query points must lie in [-1, 1]")


def evolve(req: EvolutionRequest) -> np.ndarray:
    """Values of exp(t G_h) applied to the initial data at the query points.

    If the initial data is a GridFunction the query defaults to its fiber.
    """
    table = _table_for(req.grid, req.table, req.symbol)
    if isinstance(req.init, GridFunction):
        gf = req.init
        out = evolve_fiber(req.case, table, req.grid, gf.lam, gf.values, req.t, req.direction)
        if req.query is None:
            return out
        iota, lam = grid_index(req.grid, np.asarray(req.query, dtype=float))
        if np.any(np.abs(np.atleast_1d(lam) - gf.lam) > 1e-12):
            raise ValueError("query points must lie on the initial data's fiber")
        return out[np.atleast_1d(iota) - 1]

    query = fiber_points(req.grid, 0.0) if req.query is None else np.asarray(req.query, dtype=float)
    iota, lam = grid_index(req.grid, query)
    iota = np.atleast_1d(iota)
    lam = np.atleast_1d(lam)
    out = np.empty(iota.shape)
    for ul in np.unique(lam):
        v0 = project(req.grid, req.init, float(ul))
        vt = evolve_fiber(req.case, table, req.grid, float(ul), v0, req.t, req.direction)
        sel = lam == ul
        out[sel] = vt[iota[sel] - 1]
    return out


def resolvent_solve(case, direction: str, grid: Grid, g, beta: float,
                    table: Optional[CoefficientTable] = None, symbol=None, lam: float = 0.0) -> GridFunction:
    """Solve (beta I - M(lam)) u = Pi g(lam) on one fiber (lam = 0 by default)."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    table = _table_for(grid, table, symbol)
    M = fiber_matrix(case, table, grid, lam, direction)
    rhs = g.values if isinstance(g, GridFunction) else project(grid, g, lam)
    A = beta * np.eye(grid.size) - M
    u = np.linalg.solve(A, rhs)
    if not np.all(np.isfinite(u)):
        raise np.linalg.LinAlgError("singular resolvent system")
    return GridFunction(grid, lam, u)


def duality_check(case, grid: Grid, f, g, t: float, table: Optional[CoefficientTable] = None,
                  symbol=None) -> float:
    """|<exp(tM) f, g> - <f, exp(tM^T) g>| on the lambda = 0 fiber."""
    table = _table_for(grid, table, symbol)
    fv = f.values if isinstance(f, GridFunction) else (project(grid, f, 0.0) if callable(f) else np.asarray(f, float))
    gv = g.values if isinstance(g, GridFunction) else (project(grid, g, 0.0) if callable(g) else np.asarray(g, float))
    M = fiber_matrix(case, table, grid, 0.0, "backward")
    left = np.dot(expm_uniformized(M, t, fv), gv)
    right = np.dot(fv, expm_uniformized(M.T, t, gv))
    return float(abs(left - right))
