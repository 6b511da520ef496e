"""Grünwald-type coefficient families for a symbol and a step h.

Generating functions (all in the variable z, |z| < 1):

    psi((1 - z)/h)               = sum_j G^psi_j z^j
    h psi((1 - z)/h)/(1 - z)     = sum_j G^{psi-1}_j z^j
    1/psi((1 - z)/h)             = sum_j G^{k0}_j z^j

and G^{k1}, G^{k-1}, G^{k-2} follow by multiplying/dividing by (1 - z)/h.
The k-families are obtained from G^psi by power-series division, which is
exact in exact arithmetic and needs nothing but the psi coefficients.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import special

from .symbol import LevySymbol, SymbolDomainError

__all__ = [
    "CoefficientTable",
    "IdentityViolation",
    "IdentityReport",
    "grunwald_psi",
    "grunwald_psi_minus1",
    "grunwald_k",
    "build_table",
    "verify_identities",
    "reciprocal_series",
]


class IdentityViolation(RuntimeError):
    """A convolution identity or sign constraint failed beyond tolerance."""

    def __init__(self, report: "IdentityReport"):
        self.report = report
        bad = ", ".join(k for k, ok in report.passed.items() if not ok)
        super().__init__(f"identity check failed: {bad}")


def _alpha_of(sym: LevySymbol) -> Optional[float]:
    return getattr(sym, "alpha", None)


def grunwald_psi(sym: LevySymbol, h: float, N: int, route: str = "auto") -> np.ndarray:
    """Coefficients G^psi_j, j = 0..N.

    ``route="auto"`` uses the family's closed form when it has one;
    ``route="moments"`` always goes through psi, psi' and the tail moments
    M_j(1/h)/(j! h^j), evaluated in log space.
    """
    if not h > 0:
        raise SymbolDomainError("h must be > 0")
    if N < 2:
        raise ValueError("N must be >= 2")
    if route not in ("auto", "moments"):
        raise ValueError(f"unknown route {route!r}")
    if sym.max_order is not None and N > sym.max_order:
        raise SymbolDomainError(f"N={N} exceeds the symbol's declared moment order {sym.max_order}")

    if route == "auto":
        r = sym.binomial_factor(N, h)
        if r is not None:
            return h ** (-_alpha_of(sym)) * np.asarray(r, dtype=float)

    s = 1.0 / h
    out = np.empty(N + 1)
    out[0] = float(sym.psi(s))
    out[1] = -float(sym.psi_prime(s)) / h
    logh = math.log(h)
    for j in range(2, N + 1):
        lm = sym.log_tail_moment(j, s)
        out[j] = math.exp(lm - special.gammaln(j + 1.0) - j * logh) if np.isfinite(lm) else 0.0
    if not np.all(np.isfinite(out)):
        raise OverflowError("coefficient magnitudes left the double range")
    return out


def grunwald_psi_minus1(gpsi: np.ndarray, h: float) -> np.ndarray:
    """G^{psi-1}_j = h * sum_{m<=j} G^psi_m."""
    return h * np.cumsum(gpsi)


def reciprocal_series(a: np.ndarray, N: Optional[int] = None) -> np.ndarray:
    """Coefficients of 1/A(z) for A(z) = sum a_j z^j with a_0 != 0."""
    a = np.asarray(a, dtype=float)
    N = len(a) - 1 if N is None else N
    out = np.zeros(N + 1)
    out[0] = 1.0 / a[0]
    inv0 = out[0]
    for m in range(1, N + 1):
        top = min(m, len(a) - 1)
        # sum_{j=1}^{m} a_j out_{m-j}
        acc = np.dot(a[1 : top + 1], out[m - top : m][::-1])
        out[m] = -acc * inv0
    return out


def _backward_difference(c: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(c)
    out[0] = c[0] / h
    out[1:] = (c[1:] - c[:-1]) / h
    return out


def grunwald_k(gpsi: np.ndarray, h: float, i: int, N: Optional[int] = None,
               k0: Optional[np.ndarray] = None) -> np.ndarray:
    """G^{k_i}_j for i in {1, 0, -1, -2}, j = 0..N.

    k0 is the reciprocal series of G^psi; i = 1 follows by a prefix sum and
    i = -1 by a backward difference, each scaled by h. i = -2 is the
    reciprocal of the twice prefix-summed series h^2 (1-z)^{-2} G^psi(z):
    a second difference of k0 would cancel about j^2 worth of digits.
    """
    if not gpsi[0] > 0:
        raise SymbolDomainError("G^psi_0 must be positive")
    N = len(gpsi) - 1 if N is None else N
    if i not in (1, 0, -1, -2):
        raise ValueError("i must be one of 1, 0, -1, -2")
    if i == -2:
        return reciprocal_series(h * h * np.cumsum(np.cumsum(gpsi[: N + 1])), N)
    if k0 is None:
        k0 = reciprocal_series(gpsi, N)
    k0 = k0[: N + 1]
    if i == 0:
        return k0
    if i == 1:
        return h * np.cumsum(k0)
    return _backward_difference(k0, h)


@dataclass(frozen=True)
class CoefficientTable:
    """All coefficient families for one symbol and one step."""

    h: float
    N: int
    gpsi: np.ndarray
    gpsi_m1: np.ndarray
    gk: Dict[int, np.ndarray]
    symbol: dict = field(default_factory=dict)
    h1: bool = True
    negative: Dict[int, int] = field(default_factory=dict)

    @property
    def k2_reliable(self) -> bool:
        """G^{k-2} is only trusted when the symbol carries the H1 flag."""
        return self.h1

    @property
    def metadata(self) -> dict:
        return {"symbol": self.symbol, "h": self.h, "N": self.N}

    COLUMNS = ("j", "gpsi", "gpsi_m1", "gk1", "gk0", "gkm1", "gkm2")

    def rows(self):
        for j in range(self.N + 1):
            yield [j] + [float(v[j]) for v in (
                self.gpsi, self.gpsi_m1, self.gk[1], self.gk[0], self.gk[-1], self.gk[-2])]

    def to_csv(self, fh=None) -> str:
        """Single header line, one row per index j."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            w.writerow([row[0]] + [repr(v) for v in row[1:]])
        return buf.getvalue() if fh is None else ""


def build_table(sym: LevySymbol, h: float, N: int, route: str = "auto") -> CoefficientTable:
    """Assemble every family at step h up to order N."""
    gpsi = grunwald_psi(sym, h, N, route=route)
    gm1 = grunwald_psi_minus1(gpsi, h)
    k0 = reciprocal_series(gpsi, N)
    gk = {i: grunwald_k(gpsi, h, i, N, k0=k0) for i in (1, 0, -1, -2)}
    negative = {i: int(np.sum(gk[i] < 0)) for i in (1, 0, -1)}
    return CoefficientTable(h=h, N=N, gpsi=gpsi, gpsi_m1=gm1, gk=gk,
                            symbol=sym.describe(), h1=sym.h1, negative=negative)


@dataclass
class IdentityReport:
    residuals: Dict[str, float]
    signs: Dict[str, bool]
    tol: float
    scale: float

    @property
    def passed(self) -> Dict[str, bool]:
        out = {k: v <= self.tol * self.scale for k, v in self.residuals.items()}
        out.update(self.signs)
        return out

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def as_dict(self) -> dict:
        return {"tol": self.tol, "scale": self.scale, "residuals": self.residuals,
                "signs": self.signs, "ok": self.ok}


def _conv(a, b, M):
    return np.convolve(a[: M + 1], b[: M + 1])[: M + 1]


def verify_identities(table: CoefficientTable, tol: float = 1e-10, M: Optional[int] = None,
                      raise_on_fail: bool = True) -> IdentityReport:
    """Max residual of each discrete convolution identity for m <= M.

    Residuals are compared against ``tol / h``. Sign patterns are checked as
    booleans.
    """
    h = table.h
    M = table.N if M is None else min(M, table.N)
    m = np.arange(M + 1)
    gp, gm1, gk = table.gpsi, table.gpsi_m1, table.gk

    target_km1_psi = np.zeros(M + 1)
    target_km1_psi[0] = 1 / h
    if M >= 1:
        target_km1_psi[1] = -1 / h
    delta = (m == 0).astype(float)

    res = {
        "km1*psi": np.max(np.abs(_conv(gk[-1], gp, M) - target_km1_psi)),
        "k0*psi": np.max(np.abs(_conv(gk[0], gp, M) - delta)),
        "km1*psim1": np.max(np.abs(_conv(gk[-1], gm1, M) - delta)),
        "k1*psi": np.max(np.abs(_conv(gk[1], gp, M) - h)),
        "k0*psim1": np.max(np.abs(_conv(gk[0], gm1, M) - h)),
        "k1*psim1": np.max(np.abs(_conv(gk[1], gm1, M) - (m + 1) * h * h)),
    }
    # prefix sums of G^psi cancel down to rounding level once the tail is tiny
    # (tempered and truncated symbols), so "negative" means "not above rounding"
    eps_m1 = 64 * np.finfo(float).eps * h * np.sum(np.abs(gp[: M + 1]))
    signs = {
        "sign:psi": bool(gp[0] > 0 and gp[1] < 0 and np.all(gp[2 : M + 1] >= 0)),
        "sign:psim1": bool(gm1[0] > 0 and np.all(gm1[1 : M + 1] < eps_m1)),
        "sign:k": bool(all(np.all(gk[i][: M + 1] > 0) for i in (1, 0, -1))),
    }
    rep = IdentityReport(residuals={k: float(v) for k, v in res.items()}, signs=signs,
                         tol=tol, scale=1.0 / h)
    if raise_on_fail and not rep.ok:
        raise IdentityViolation(rep)
    return rep
