"""Approximating functions, test functions and generator-convergence studies.

For each wall pair and direction the study builds a family f_h that is
adapted to the discrete generator, and measures ||G_h f_h - G f|| along an
n-ladder. The approximating functions vartheta^{k_i} interpolate the
Post-Widder coefficients G^{k_i}_j / h between grid points with a weight
theta(lambda) and an index shift tau:

    vartheta^{k_i}(y) = ((1 - theta) G^{k_i}_{iota-2-tau} + theta G^{k_i}_{iota-1-tau}) / h

for iota(y) != 1, with special first-cell values. The backward versions are
read off at -x (sup-norm setting), the forward ones at x (1-norm setting).
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .coeffs import CoefficientTable, build_table
from .generator import BoundaryCase, apply_backward, apply_forward
from .grid import SNAP, Grid
from .operators import (
    PiecewiseFunction,
    SampledFunction,
    ScaleFunction,
    I_psi_derivative_at_minus1,
    first_order_correction,
    nonlocal_integral,
)
from .semigroup import GridFunction
from .symbol import LevySymbol, Stable

__all__ = [
    "ThetaFunction",
    "vartheta",
    "vartheta_zero",
    "BumpFunction",
    "SupportError",
    "FunctionClassError",
    "bump_g",
    "GReference",
    "FhConstruction",
    "build_fh",
    "ConvergenceStudy",
    "StudyRow",
    "StudyResult",
    "convergence_study",
    "predicted_slope",
    "RATE_TABLE",
    "boundary_functional",
    "thread_count",
]


def thread_count() -> int:
    """Worker cap from GRUNWALD_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("GRUNWALD_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# approximating functions


def _coef(table: CoefficientTable, i: int, j):
    """G^{k_i}_j with zero for negative j."""
    c = table.gk[i]
    j = np.asarray(j)
    if np.any(j > c.size - 1):
        raise IndexError(f"coefficient table too short for index {int(np.max(j))}")
    return np.where(j >= 0, c[np.clip(j, 0, c.size - 1)], 0.0)


def _cell_coords(grid: Grid, y, canonical: bool):
    """(iota, lambda, valid) with the top-endpoint convention iota(1) = n+1,
    lambda = 1, extended to (1, 1 + h] when ``canonical``."""
    y = np.asarray(y, dtype=float)
    h, n = grid.h, grid.n
    u = (y + 1.0) / h
    r = np.rint(u)
    u = np.where(np.abs(u - r) <= SNAP, r, u)
    iota = np.floor(u).astype(int) + 1
    lam = u - (iota - 1)
    top = n + 1 if not canonical else n + 2
    at_top = (iota == top + 1) & (lam == 0.0)
    iota = np.where(at_top, top, iota)
    lam = np.where(at_top, 1.0, lam)
    valid = (u >= 0.0) & (iota <= top)
    return iota, lam, valid


@dataclass(frozen=True)
class ThetaFunction:
    """vartheta^{k_i}_{+h} (side '+', 1-norm column) or vartheta^{k_i}_{-h}
    (side '-', sup-norm column)."""

    i: int
    side: str
    grid: Grid
    table: CoefficientTable

    def __post_init__(self):
        if self.side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        allowed = (1, 0, -1) if self.side == "+" else (1, 0)
        if self.i not in allowed:
            raise ValueError(f"vartheta^{{k_{self.i}}} is not defined on side {self.side!r}")
        if abs(self.table.h - self.grid.h) > 1e-14:
            raise ValueError("table step does not match the grid")

    @property
    def tau(self) -> int:
        return 1 if self.i == 1 else 0

    def theta(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.i == 1:
            return np.ones_like(lam) if self.side == "+" else lam
        if self.i == 0:
            return lam
        c = self.grid.h * self.table.gpsi[0] * self.table.gk[-1][1]
        return lam / (lam + (1.0 - lam) * c)

    def first_cell(self, lam):
        lam = np.asarray(lam, dtype=float)
        h, t = self.grid.h, self.table
        lb = 1.0 - lam
        if self.i == 1:
            return -lb * t.gk[1][0] / h
        if self.i == 0:
            if self.side == "-":
                return lam * t.gk[0][0] / h
            return -t.gpsi[0] / (h * t.gpsi[1]) * (lb * t.gk[0][0] + lam * t.gk[0][1])
        return self.theta(lam) * t.gk[-1][0] / h

    def base(self, y, canonical: bool = False):
        """The un-reflected function vartheta^{k_i}_{. h}(y)."""
        y = np.asarray(y, dtype=float)
        iota, lam, valid = _cell_coords(self.grid, y, canonical)
        th = self.theta(lam)
        j = iota - 2 - self.tau
        inner = ((1.0 - th) * _coef(self.table, self.i, j) + th * _coef(self.table, self.i, j + 1)) / self.grid.h
        out = np.where(iota == 1, self.first_cell(lam), inner)
        return np.where(valid, out, 0.0)

    def __call__(self, x, canonical: bool = False):
        x = np.asarray(x, dtype=float)
        out = self.base(-x if self.side == "-" else x, canonical)
        return out if out.ndim else float(out)


def vartheta(i: int, side: str, grid: Grid, table: CoefficientTable, x, canonical: bool = False):
    """vartheta^{k_i}_{side h}(x); ``canonical`` extends past the far wall by one cell."""
    return ThetaFunction(i, side, grid, table)(x, canonical)


def vartheta_zero(grid: Grid, x):
    """vartheta^0_{+h}: 1 away from the first cell, lambda on it."""
    iota, lam, valid = _cell_coords(grid, x, False)
    out = np.where(iota == 1, lam, 1.0)
    out = np.where(valid, out, 0.0)
    return out if out.ndim else float(out)


def boundary_functional(u: GridFunction, table: CoefficientTable) -> float:
    """sum_{j=0}^{n} G^{psi-1}_j u(-1 + j h) on the lambda = 0 fiber."""
    if abs(u.lam) > 0:
        raise ValueError("the boundary functional reads the lambda = 0 fiber")
    v = np.asarray(u.values, dtype=float)
    return float(np.dot(table.gpsi_m1[: v.size], v))


# --------------------------------------------------------------------------
# test functions


class SupportError(ValueError):
    """Requested support leaves the region demanded by the function class."""


class FunctionClassError(ValueError):
    """Test function does not belong to the class a construction needs."""


def _bump(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    s = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, np.exp(-1.0 / s), 0.0)


def _dbump(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    s = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, np.exp(-1.0 / s) * (-2.0 * u / (s * s)), 0.0)


def _e(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, t, 1.0)), 0.0)


def _de(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    tt = np.where(pos, t, 1.0)
    return np.where(pos, np.exp(-1.0 / tt) / (tt * tt), 0.0)


def _step(t):
    """C-infinity step, 0 for t <= 0 and 1 for t >= 1."""
    a, b = _e(t), _e(1.0 - np.asarray(t, float))
    return a / (a + b)


def _dstep(t):
    t = np.asarray(t, float)
    a, b = _e(t), _e(1.0 - t)
    da, db = _de(t), -_de(1.0 - t)
    return (da * b - a * db) / (a + b) ** 2


@dataclass(frozen=True)
class BumpFunction(PiecewiseFunction):
    """Smooth test function with class metadata.

    ``support`` is the closed support of g - g(1).
    """

    kind: str = "interior_bump"
    support: Tuple[float, float] = (-1.0, 1.0)
    at_one: float = 0.0
    at_minus_one: float = 0.0
    params: Tuple[Tuple[str, float], ...] = ()

    @property
    def interior(self) -> bool:
        """g in C_c^inf(-1, 1)."""
        return self.support[0] > -1.0 and self.support[1] < 1.0 and self.at_one == 0.0

    @property
    def vanishes_near_right(self) -> bool:
        """g in C_c^inf[-1, 1)."""
        return self.support[1] < 1.0 and self.at_one == 0.0

    @property
    def plateau(self) -> bool:
        """g - g(1) in C_c[-1, 1)."""
        return self.support[1] < 1.0

    def describe(self) -> dict:
        return {"kind": self.kind, "support": list(self.support), "g(1)": self.at_one,
                "g(-1)": self.at_minus_one, **dict(self.params)}


def bump_g(kind: str = "interior_bump", **params) -> BumpFunction:
    """Test functions for the convergence studies.

    interior_bump  c exp(-1/(1 - ((x - m)/r)^2)) on |x - m| < r
    right_plateau  interior bump plus a smooth step from 0 to ``level`` on [a, a + w]
    full_smooth    c (1 + s (x + 1)) exp(-1/(1 - ((x + 1)/r)^2)), nonzero at -1
    """
    if kind == "interior_bump":
        m, r, c = params.get("m", 0.0), params.get("r", 0.5), params.get("c", 1.0)
        if not r > 0 or m - r <= -1.0 or m + r >= 1.0:
            raise SupportError("interior bump must have its support inside (-1, 1)")
        f = lambda x: c * _bump((x - m) / r)
        df = lambda x: c * _dbump((x - m) / r) / r
        return BumpFunction(f, (m - r, m + r), df, kind, (m - r, m + r), 0.0, 0.0,
                            (("m", m), ("r", r), ("c", c)))
    if kind == "right_plateau":
        m, r, c = params.get("m", -0.2), params.get("r", 0.4), params.get("c", 1.0)
        level, a, w = params.get("level", 0.5), params.get("a", 0.2), params.get("w", 0.5)
        if not (r > 0 and w > 0) or m + r >= 1.0 or a + w >= 1.0 or m - r < -1.0:
            raise SupportError("plateau part must settle strictly before x = 1")
        f = lambda x: c * _bump((x - m) / r) + level * _step((x - a) / w)
        df = lambda x: c * _dbump((x - m) / r) / r + level * _dstep((x - a) / w) / w
        hi = max(m + r, a + w)
        brk = tuple(sorted({m - r, m + r, a, a + w} - {-1.0}))
        return BumpFunction(f, brk, df, kind, (-1.0, hi), float(level), float(f(np.array(-1.0))),
                            (("m", m), ("r", r), ("c", c), ("level", level), ("a", a), ("w", w)))
    if kind == "full_smooth":
        r, c, s = params.get("r", 1.2), params.get("c", 1.0), params.get("s", 1.0)
        if not r > 0 or -1.0 + r >= 1.0:
            raise SupportError("support must end before x = 1")
        f = lambda x: c * (1.0 + s * (x + 1.0)) * _bump((x + 1.0) / r)
        df = lambda x: c * (s * _bump((x + 1.0) / r) + (1.0 + s * (x + 1.0)) * _dbump((x + 1.0) / r) / r)
        return BumpFunction(f, (-1.0 + r,), df, kind, (-1.0, -1.0 + r), 0.0, float(c * math.exp(-1.0)),
                            (("r", r), ("c", c), ("s", s)))
    raise ValueError(f"unknown test function kind {kind!r}")


# --------------------------------------------------------------------------
# continuous-side reference data


@dataclass
class GReference:
    """I^psi g and the boundary constants for one test function and symbol.

    Nonlocal integrals are sampled with step ``step`` by product integration;
    ``error_estimate`` compares against the same integral at twice the step.
    """

    g: BumpFunction
    sym: LevySymbol
    step: float
    side: str
    Ig: SampledFunction = None  # I^psi g
    Ig0: SampledFunction = None  # I^psi [g - g(1)]
    plain: float = 0.0  # int_{-1}^{1} g
    F_edge: float = 0.0  # F_-[g](-1) (depends on g' only)
    dI_edge: float = 0.0  # [I^psi_- g]'(-1)
    error_estimate: float = float("nan")

    @classmethod
    def build(cls, g: BumpFunction, sym: LevySymbol, step: float, side: str) -> "GReference":
        if side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        ref = cls(g, sym, step, side)
        s = g.sample(step)
        ref.Ig = nonlocal_integral(s, side, sym)
        g1 = g.at_one
        ref.Ig0 = nonlocal_integral(SampledFunction(s.values - g1), side, sym) if g1 else ref.Ig
        coarse = nonlocal_integral(g.sample(2 * step), side, sym)
        ref.error_estimate = float(np.max(np.abs(coarse.values - ref.Ig.values[::2])))
        pts = [p for p in g.breaks if -1 < p < 1]
        ref.plain = float(integrate.quad(lambda x: float(g(x)), -1.0, 1.0, points=pts or None, limit=400)[0])
        if side == "-":
            ref.F_edge = float(first_order_correction(g, sym, "-", -1.0, g.breaks))
            ref.dI_edge = float(I_psi_derivative_at_minus1(g, sym, g.breaks))
        return ref


# --------------------------------------------------------------------------
# the f_h constructions


@dataclass
class FhConstruction:
    """f_h, its limit f and the limit G f of G_h f_h for one grid."""

    case: BoundaryCase
    direction: str
    grid: Grid
    fh: Callable
    f: Callable
    Gf: Callable
    constants: Dict[str, float] = field(default_factory=dict)


# function class required of g for each (case, direction)
_G_CLASS = {
    ("DD", "backward"): "interior",
    ("DN", "backward"): "plateau",
    ("ND", "backward"): "vanishes_near_right",
    ("NN", "backward"): "plateau",
    ("N*D", "backward"): "vanishes_near_right",
    ("N*N", "backward"): "plateau",
}

# Broad, gentle profiles: the interior consistency error is O(h g'), so
# steep bumps hide the slower boundary-cell rate on desk-sized ladders.
_DEFAULT_G = {
    "interior": ("interior_bump", {"m": 0.0, "r": 0.9}),
    "plateau": ("right_plateau", {"c": 0.0, "level": 1.0, "a": -0.2, "w": 1.1}),
    "vanishes_near_right": ("full_smooth", {"r": 1.9, "s": 0.0}),
}


def _required_class(case: BoundaryCase, direction: str) -> str:
    return _G_CLASS.get((case.name, direction), "interior")


def default_g(case, direction: str) -> BumpFunction:
    kind, params = _DEFAULT_G[_required_class(BoundaryCase.parse(case), direction)]
    return bump_g(kind, **params)


def _edge_cell(grid: Grid, x, first: bool):
    """lambda(x) on the first (or last) cell, None elsewhere (as a mask)."""
    iota, lam, valid = _cell_coords(grid, x, False)
    cell = 1 if first else grid.n + 1
    return (iota == cell) & valid, lam


def build_fh(case, direction: str, g: BumpFunction, grid: Grid, table: CoefficientTable,
             sym: Optional[LevySymbol] = None, ref: Optional[GReference] = None,
             c: float = 0.0) -> FhConstruction:
    """Assemble f_h for the wall pair ``case`` and the limit it is built for.

    ``ref`` carries I^psi g and the boundary constants; it is computed here
    at step h/40 when not supplied.
    """
    case = BoundaryCase.parse(case)
    if direction not in ("backward", "forward"):
        raise ValueError("direction must be backward or forward")
    need = _required_class(case, direction)
    if not getattr(g, need, False):
        raise FunctionClassError(f"{case.name} {direction} needs a test function of class {need!r}")
    if sym is None:
        if ref is None:
            raise ValueError("need a symbol or a reference")
        sym = ref.sym
    if case.left == "N*" and not sym.h1:
        warnings.warn(f"{case.name} convergence is only established under the stronger regularity flag",
                      RuntimeWarning, stacklevel=2)
    side = "-" if direction == "backward" else "+"
    if ref is None:
        ref = GReference.build(g, sym, grid.h / 40.0, side)
    elif ref.side != side:
        raise ValueError("reference was computed for the other direction")
    h, n = grid.h, grid.n
    Ig, Ig0 = ref.Ig, ref.Ig0
    plain = ref.plain
    g1 = g.at_one
    name = case.name
    consts: Dict[str, float] = {"h": h, "n": n}

    if direction == "backward":
        th0 = ThetaFunction(0, "-", grid, table)
        th1 = ThetaFunction(1, "-", grid, table)
        k0m, k1m = ScaleFunction(sym, 0, "-"), ScaleFunction(sym, 1, "-")
        k0_2 = float(k0m(-1.0))
        Ig_edge = float(Ig(-1.0))
        consts["Ig(-1)"] = Ig_edge

        def e_left(x, d):
            on, lam = _edge_cell(grid, x, True)
            return np.where(on, -(1.0 - lam) * table.gk[0][0] * d, 0.0)

        if name == "DD":
            b = -Ig_edge / float(th0(-1.0))
            fh = lambda x: Ig(x) + b * th0(x)
            f = lambda x: Ig(x) - Ig_edge / k0_2 * k0m(x)
            Gf = g
        elif name == "DN":
            k1_2 = float(k1m(-1.0))
            b = g1 * k1_2 / float(th1(-1.0))
            fh = lambda x: Ig0(x) + b * th1(x) - Ig_edge
            f = lambda x: Ig(x) - Ig_edge
            Gf = g
        elif name == "ND":
            b = -plain - h * ref.F_edge
            d = g.at_minus_one
            fh = lambda x: Ig(x) + b * th0(x) + e_left(x, d)
            f = lambda x: Ig(x) - plain * k0m(x)
            Gf = g
            consts["d"] = d
        elif name == "NN":
            r = (n + 1) / n
            b = (g1 - plain / 2.0 - h / 2.0 * ref.F_edge) * r
            d = g.at_minus_one - plain / 2.0 * r
            fh = lambda x: Ig0(x) + b * th1(x) + e_left(x, d) + c
            f = lambda x: Ig(x) - plain / 2.0 * k1m(x) + c
            Gf = lambda x: g(x) - plain / 2.0
            consts["d"] = d
        elif name == "N*D":
            km1_2 = float(ScaleFunction(sym, -1, "-")(-1.0))
            b = ref.dI_edge / (table.gk[-1][n] / h)
            fh = lambda x: Ig(x) + b * th0(x)
            f = lambda x: Ig(x) + ref.dI_edge / km1_2 * k0m(x)
            Gf = g
        else:  # N*N
            b = g1 + ref.dI_edge / (table.gk[0][n - 1] / h)
            fh = lambda x: Ig0(x) + b * th1(x) + c
            f = lambda x: Ig(x) + ref.dI_edge / k0_2 * k1m(x) + c
            Gf = lambda x: g(x) + ref.dI_edge / k0_2
            consts["[Ig]'(-1)"] = ref.dI_edge
        consts["b"] = b
        return FhConstruction(case, direction, grid, fh, f, Gf, consts)

    # forward: g in C_c^inf(-1, 1)
    Ig_edge = float(Ig(1.0))
    consts["Ig(1)"] = Ig_edge
    consts["I g(1)"] = plain

    def e_right(x, core):
        on, lam = _edge_cell(grid, x, False)
        return np.where(on, -lam * core(x), 0.0)

    if name == "DD":
        th0 = ThetaFunction(0, "+", grid, table)
        b = -Ig_edge / float(th0(1.0))
        fh = lambda x: Ig(x) + b * th0(x)
        k0p = ScaleFunction(sym, 0, "+")
        f = lambda x: Ig(x) - Ig_edge / float(k0p(1.0)) * k0p(x)
        Gf = g
    elif name == "DN":
        th0 = ThetaFunction(0, "+", grid, table)
        b = -plain
        core = lambda x: Ig(x) + b * th0(x)
        fh = lambda x: core(x) + e_right(x, core)
        k0p = ScaleFunction(sym, 0, "+")
        f = lambda x: Ig(x) - plain * k0p(x)
        Gf = g
    elif name == "ND":
        b = -Ig_edge
        fh = lambda x: Ig(x) + b * vartheta_zero(grid, x)
        f = lambda x: (Ig(x) - Ig_edge) * ((np.asarray(x) >= -1) & (np.asarray(x) <= 1))
        Gf = g
    elif name == "NN":
        th1 = ThetaFunction(1, "+", grid, table)
        b = -plain / 2.0
        core = lambda x: Ig(x) + b * th1(x) + c
        fh = lambda x: Ig(x) + b * th1(x) + c * vartheta_zero(grid, x) + e_right(x, core)
        k1p = ScaleFunction(sym, 1, "+")
        f = lambda x: Ig(x) - plain / 2.0 * k1p(x) + c
        Gf = lambda x: g(x) - plain / 2.0
    elif name == "N*D":
        thm1 = ThetaFunction(-1, "+", grid, table)
        b = -Ig_edge / float(thm1(1.0))
        fh = lambda x: Ig(x) + b * thm1(x)
        km1p = ScaleFunction(sym, -1, "+")
        f = lambda x: Ig(x) - Ig_edge / float(km1p(1.0)) * km1p(x)
        Gf = g
    else:  # N*N
        th1 = ThetaFunction(1, "+", grid, table)
        thm1 = ThetaFunction(-1, "+", grid, table)
        b = -plain / 2.0
        core = lambda x: Ig(x) + b * th1(x) + c * thm1(x)
        fh = lambda x: core(x) + e_right(x, core)
        k1p, km1p = ScaleFunction(sym, 1, "+"), ScaleFunction(sym, -1, "+")
        f = lambda x: Ig(x) - plain / 2.0 * k1p(x) + c * km1p(x)
        Gf = lambda x: g(x) - plain / 2.0
    consts["b"] = b
    return FhConstruction(case, direction, grid, fh, f, Gf, consts)


# --------------------------------------------------------------------------
# rate studies

# (case, direction) -> rate w(h) for ||G_h f_h - G f||
RATE_TABLE = {
    ("DD", "backward"): "h2psi",
    ("DN", "backward"): "h2psi",
    ("ND", "backward"): "inv_hpsi",
    ("NN", "backward"): "inv_hpsi",
    ("N*D", "backward"): "h2psi",
    ("N*N", "backward"): "h2psi",
    ("DD", "forward"): "h2psi",
    ("DN", "forward"): "h",
    ("ND", "forward"): "h2psi",
    ("NN", "forward"): "h",
    ("N*D", "forward"): "h2psi",
    ("N*N", "forward"): "inv_hpsi",
}


def rate_function(kind: str, sym: LevySymbol) -> Callable[[np.ndarray], np.ndarray]:
    if kind == "h2psi":
        return lambda h: h * h * sym.psi(1.0 / h)
    if kind == "inv_hpsi":
        return lambda h: 1.0 / (h * sym.psi(1.0 / h))
    if kind == "h":
        return lambda h: np.asarray(h, float)
    raise ValueError(kind)


def predicted_slope(case, direction: str, sym: LevySymbol, ladder: Sequence[int]) -> float:
    """Least-squares slope of log w(h) against log h over the ladder."""
    kind = RATE_TABLE[(BoundaryCase.parse(case).name, direction)]
    h = 2.0 / (np.asarray(ladder, float) + 1.0)
    w = rate_function(kind, sym)(h)
    return float(np.polyfit(np.log(h), np.log(w), 1)[0])


@dataclass
class StudyRow:
    n: int
    h: float
    error: float
    fh_error: float


@dataclass
class StudyResult:
    case: str
    direction: str
    norm: str
    rows: List[StudyRow]
    slope: float
    predicted: float
    rate: str
    monotone: bool
    reference_error: float

    def to_csv(self) -> str:
        lines = ["case,direction,n,h,norm,error,predicted_rate,fitted_slope"]
        for r in self.rows:
            lines.append(f"{self.case},{self.direction},{r.n},{r.h!r},{self.norm},{r.error!r},"
                         f"{self.predicted!r},{self.slope!r}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {"case": self.case, "direction": self.direction, "norm": self.norm, "rate": self.rate,
                "predicted_slope": self.predicted, "fitted_slope": self.slope, "monotone": self.monotone,
                "reference_error": self.reference_error,
                "rows": [r.__dict__ for r in self.rows]}


@dataclass
class ConvergenceStudy:
    """One generator-convergence experiment; ``result`` is filled by the run."""

    case: str
    direction: str = "backward"
    symbol: LevySymbol = field(default_factory=lambda: Stable(1.5))
    g: Optional[BumpFunction] = None
    ladder: Tuple[int, ...] = (15, 31, 63, 127, 255)
    norm: Optional[str] = None
    oversample: int = 10
    c: float = 2.0  # free domain constant (c or c_-1), where the row has one
    result: Optional[StudyResult] = None

    def __post_init__(self):
        self.case = BoundaryCase.parse(self.case).name
        if self.direction not in ("backward", "forward"):
            raise ValueError("direction must be backward or forward")
        lad = tuple(int(v) for v in self.ladder)
        if len(lad) < 2 or any(b <= a for a, b in zip(lad, lad[1:])):
            raise ValueError("ladder must be strictly increasing")
        for a, b in zip(lad, lad[1:]):
            ratio = (b + 1) / (a + 1)
            if ratio != int(ratio) or int(ratio) & (int(ratio) - 1):
                raise ValueError("each ladder step must refine n + 1 by a power of two")
        self.ladder = lad
        if self.norm is None:
            self.norm = "sup" if self.direction == "backward" else "l1"
        if self.norm not in ("sup", "l1"):
            raise ValueError("norm must be sup or l1")
        if self.g is None:
            self.g = default_g(self.case, self.direction)
        if self.case == "N*D" and self.direction == "forward":
            K = getattr(self.symbol, "K", None)
            if K is not None and abs(float(K) - 2.0) <= 1e-9:
                raise ValueError("truncation at K = 2 leaves no density limits at 2")


def _eval_points(grid: Grid, norm: str, over: int):
    h = grid.h
    if norm == "sup":
        lams = np.arange(over) / over
        x = np.concatenate([(lam + np.arange(grid.n + 1)) * h - 1.0 for lam in lams] + [np.array([1.0])])
        return x, None
    lams = (np.arange(over) + 0.5) / over
    x = np.concatenate([(lam + np.arange(grid.n + 1)) * h - 1.0 for lam in lams])
    return x, h / over


def _norm(v, w):
    v = np.abs(np.asarray(v, float))
    return float(np.max(v)) if w is None else float(w * np.sum(v))


def _one_level(study: ConvergenceStudy, ref: GReference, n: int) -> StudyRow:
    grid = Grid(n)
    table = build_table(study.symbol, grid.h, n + 3)
    con = build_fh(study.case, study.direction, study.g, grid, table, ref=ref, c=study.c)
    x, w = _eval_points(grid, study.norm, study.oversample)
    apply = apply_backward if study.direction == "backward" else apply_forward
    Ghfh = apply(study.case, table, grid, con.fh, x, matrix_cache={})
    err = _norm(Ghfh - con.Gf(x), w)
    fh_err = _norm(con.fh(x) - con.f(x), w)
    return StudyRow(n=n, h=grid.h, error=err, fh_error=fh_err)


def reference_for(study: ConvergenceStudy) -> GReference:
    """Shared reference on a step that puts every evaluation point on a sample."""
    hmin = 2.0 / (study.ladder[-1] + 1)
    q = max(1, math.ceil(hmin / study.oversample / 2.5e-4))
    step = hmin / (study.oversample * q)
    side = "-" if study.direction == "backward" else "+"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return GReference.build(study.g, study.symbol, step, side)


def convergence_study(study: ConvergenceStudy, workers: Optional[int] = None) -> StudyResult:
    """Errors ||G_h f_h - G f|| along the ladder and their fitted log-log slope.

    A non-monotone error sequence is reported through ``monotone``.
    """
    ref = reference_for(study)
    workers = thread_count() if workers is None else workers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                rows = list(ex.map(lambda n: _one_level(study, ref, n), study.ladder))
        else:
            rows = [_one_level(study, ref, n) for n in study.ladder]
    h = np.array([r.h for r in rows])
    e = np.array([r.error for r in rows])
    slope = float(np.polyfit(np.log(h), np.log(e), 1)[0]) if np.all(e > 0) else float("nan")
    res = StudyResult(
        case=study.case,
        direction=study.direction,
        norm=study.norm,
        rows=rows,
        slope=slope,
        predicted=predicted_slope(study.case, study.direction, study.symbol, study.ladder),
        rate=RATE_TABLE[(study.case, study.direction)],
        monotone=bool(np.all(np.diff(e) < 0)),
        reference_error=ref.error_estimate,
    )
    study.result = res
    return res
