"""Boundary weights, interpolation rate matrices and the discrete generators.

The free scheme is the Toeplitz stencil sum_j G^psi_j f(x + (j-1)h). Near
each wall the stencil is replaced by boundary weights b^l / b^r, and the
intra-cell position lambda blends two neighbouring discrete generators so
that x -> G_h f(x) stays continuous (or integrable). Six wall combinations
are supported:

    DD, DN, ND, NN, N*D, N*N

where the left letter is D (kill), N (fast-forward) or N* (reflect) and the
right letter is D (kill) or N (fast-forward).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .coeffs import CoefficientTable
from .grid import Grid, grid_index, project

__all__ = [
    "BoundaryCase",
    "CASES",
    "BoundaryWeights",
    "RateMatrixViolation",
    "TableTooShort",
    "boundary_weights",
    "generic_matrix",
    "interpolation_matrix",
    "check_rate_matrix",
    "apply_backward",
    "apply_forward",
    "apply_generator",
]


class RateMatrixViolation(RuntimeError):
    def __init__(self, msg, entry=None):
        super().__init__(msg)
        self.entry = entry


class TableTooShort(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryCase:
    left: str  # "D", "N" or "N*"
    right: str  # "D" or "N"

    def __post_init__(self):
        if self.left not in ("D", "N", "N*"):
            raise ValueError(f"left wall must be D, N or N*, got {self.left!r}")
        if self.right not in ("D", "N"):
            raise ValueError(f"right wall must be D or N, got {self.right!r}")

    @property
    def name(self) -> str:
        return self.left + self.right

    @property
    def conservative(self) -> bool:
        return self.left != "D" and self.right == "N"

    @classmethod
    def parse(cls, s: "str | BoundaryCase") -> "BoundaryCase":
        if isinstance(s, BoundaryCase):
            return s
        t = s.strip().upper().replace("STAR", "*").replace("NS", "N*")
        if t not in ("DD", "DN", "ND", "NN", "N*D", "N*N"):
            raise ValueError(f"unknown boundary case {s!r}")
        return cls(t[:-1], t[-1])

    def __str__(self):
        return self.name


CASES = tuple(BoundaryCase.parse(c) for c in ("DD", "DN", "ND", "NN", "N*D", "N*N"))


@dataclass(frozen=True)
class BoundaryWeights:
    """b^l_0..b^l_n, b^r_0..b^r_n (index 0 unused on the right), b_n, and
    the lambda-dependent factors D^l, N^l, D^r, N^r."""

    case: BoundaryCase
    n: int
    bl: np.ndarray
    br: np.ndarray
    bn: float
    c_interp: float  # G^psi_0 * G^{k0}_1, the constant inside D^l and D^r

    def Dl(self, lam: float) -> float:
        if self.case.left != "D":
            return 1.0
        c = self.c_interp
        return lam * c / (lam * c + (1.0 - lam))

    def Nl(self, lam: float) -> float:
        return 1.0 if self.case.left == "D" else lam

    def Dr(self, lam: float) -> float:
        if self.case.right != "D":
            return 1.0
        c = self.c_interp
        lb = 1.0 - lam
        den = lb * c + lam
        return lb * c / den

    def Nr(self, lam: float) -> float:
        return 1.0 if self.case.right == "D" else 1.0 - lam


def boundary_weights(case, table: CoefficientTable, n: int) -> BoundaryWeights:
    """Boundary weights for the wall pair ``case`` on a grid with n+1 cells."""
    case = BoundaryCase.parse(case)
    if table.N < n + 1:
        raise TableTooShort(f"table has N={table.N}, need at least n+1={n + 1}")
    g = table.gpsi[: n + 1]
    S = np.cumsum(g)  # S_k = sum_{j<=k} G^psi_j
    bl = np.zeros(n + 1)
    if case.left == "D":
        bl[:] = g
    elif case.left == "N":
        bl[1:] = -S[:n]
    else:  # reflecting
        bl[1:] = g[1:]
        bl[1] = g[0] + g[1]
    # b^l_0 enters only through the right fast-forward weight b_n
    bl0 = g[0] if case.left == "D" else 0.0
    bl[0] = bl0

    br = np.zeros(n + 1)
    if case.right == "D":
        br[1:] = g[1:]
        bn = bl[n]
    else:
        br[1:] = -S[:n]
        bn = -np.sum(bl[:n])
    c_interp = table.gpsi[0] * table.gk[0][1]
    return BoundaryWeights(case=case, n=n, bl=bl, br=br, bn=float(bn), c_interp=float(c_interp))


def generic_matrix(w: BoundaryWeights, table: CoefficientTable) -> np.ndarray:
    """The n x n matrix G^{LR}_n built from the weights (no lambda)."""
    n = w.n
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    idx = c - r + 1
    g = table.gpsi
    G = np.where(idx >= 0, g[np.clip(idx, 0, n)], 0.0)
    G[0, : n - 1] = w.bl[1:n]
    G[0, n - 1] = w.bn
    # last column, rows 2..n (1-based): b^r_{n-r+1}
    rows = np.arange(1, n)
    G[rows, n - 1] = w.br[n - rows]
    return G


def interpolation_matrix(case, table: CoefficientTable, n: int, lam: float,
                         weights: BoundaryWeights = None, check: bool = False,
                         tol: float = 1e-12) -> np.ndarray:
    """(n+1) x (n+1) rate matrix G^{LR}_{n+1}(lam)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    w = boundary_weights(case, table, n) if weights is None else weights
    G = generic_matrix(w, table)
    lb = 1.0 - lam
    M = np.zeros((n + 1, n + 1))
    M[0, 0] = w.bl[1]
    M[0, 1:n] = w.Dl(lam) * G[0, 1:n]
    M[1:n, 0] = w.Nl(lam) * G[1:n, 0]
    M[1:n, 1:n] = lam * G[1:n, 1:n] + lb * G[0 : n - 1, 0 : n - 1]
    M[1:n, n] = w.Nr(lam) * G[0 : n - 1, n - 1]
    M[n, n - 1] = w.Dr(lam) * table.gpsi[0]
    M[n, n] = w.br[1]
    if check:
        check_rate_matrix(M, table.h, tol=tol, conservative=w.case.conservative)
    return M


def check_rate_matrix(M: np.ndarray, h: float, tol: float = 1e-12, conservative: bool = False,
                      tol_conservative: float = 1e-10) -> None:
    """Raise RateMatrixViolation unless M is a (sub-)generator of a Markov chain."""
    off = M - np.diag(np.diag(M))
    i, j = np.unravel_index(np.argmin(off), off.shape)
    if off[i, j] < -tol / h:
        raise RateMatrixViolation(f"negative off-diagonal entry M[{i},{j}]={off[i, j]:.3e}", (i, j))
    rs = M.sum(axis=1)
    k = int(np.argmax(rs))
    if rs[k] > tol / h:
        raise RateMatrixViolation(f"positive row sum in row {k}: {rs[k]:.3e}", (k, None))
    if conservative:
        k = int(np.argmax(np.abs(rs)))
        if abs(rs[k]) > tol_conservative / h:
            raise RateMatrixViolation(f"row {k} of a conservative case sums to {rs[k]:.3e}", (k, None))


def _fibers(grid: Grid, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    iota, lam = grid_index(grid, x)
    iota = np.atleast_1d(iota)
    lam = np.atleast_1d(lam)
    ulam, inv = np.unique(lam, return_inverse=True)
    return x, iota, ulam, inv


def apply_generator(case, table: CoefficientTable, grid: Grid, f: Callable, x,
                    transpose: bool = False, matrix_cache: Dict = None) -> np.ndarray:
    """[M(lambda(x)) Pi f(lambda(x))]_{iota(x)} (or with M transposed)."""
    case = BoundaryCase.parse(case)
    xs, iota, ulam, inv = _fibers(grid, x)
    w = boundary_weights(case, table, grid.n)
    out = np.empty(xs.shape)
    for k, lam in enumerate(ulam):
        key = (case.name, grid.n, float(lam))
        M = None if matrix_cache is None else matrix_cache.get(key)
        if M is None:
            M = interpolation_matrix(case, table, grid.n, float(lam), weights=w)
            if matrix_cache is not None:
                matrix_cache[key] = M
        v = project(grid, f, float(lam))
        y = (M.T @ v) if transpose else (M @ v)
        sel = inv == k
        out[sel] = y[iota[sel] - 1]
    return out if np.ndim(x) else float(out[0])


def apply_backward(case, table, grid, f, x, **kw):
    """Backward (continuous-function) discrete generator G^{LR}_{-h} f(x)."""
    return apply_generator(case, table, grid, f, x, transpose=False, **kw)


def apply_forward(case, table, grid, f, x, **kw):
    """Forward (density) discrete generator G^{LR}_{+h} f(x)."""
    return apply_generator(case, table, grid, f, x, transpose=True, **kw)
