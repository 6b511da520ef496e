"""Continuous-side reference operators.

Scale functions k_i (Laplace transform xi^{-i-1} xi/psi(xi)), the beta-scale
functions W^(beta), Z^(beta), the nonlocal integrals I^psi_+/-, convolution
quadratures, the first-order correction F_+/- and resolvent references.

Side conventions on [-1, 1]:

    k_i^+(x) = k_i(x + 1),          k_i^-(x) = k_i(1 - x),
    I^psi_+ g(x) = int_0^{x+1} k_0(y) g(x - y) dy,
    I^psi_- g(x) = int_0^{1-x} k_0(y) g(x + y) dy.

For the stable and tempered families every kernel has a convergent series

    K(y) = exp(-b y) sum_q c_q y^(gamma_q - 1) / Gamma(gamma_q)

obtained by inverting a Laplace transform of the form sum_q c_q (xi + b)^(-gamma_q)
term by term (``KernelSeries``). Other symbols fall back to Post-Widder
tabulation from coefficient tables.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import signal, special

from .coeffs import build_table
from .symbol import LevySymbol, Stable, TemperedStable

__all__ = [
    "KernelSeries",
    "ScaleKernels",
    "ScaleFunction",
    "SampledFunction",
    "PiecewiseFunction",
    "ResolutionError",
    "NonConvergence",
    "scale_kernels",
    "post_widder_k",
    "kernel_convolve",
    "nonlocal_integral",
    "nonlocal_integral_at",
    "nonlocal_derivative",
    "conv_quadrature",
    "first_order_correction",
    "mittag_leffler_apply",
    "resolvent_reference",
    "I_psi_derivative_at_minus1",
]

YMAX = 2.0  # kernels are only ever needed on [0, 2]


class ResolutionError(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


# --------------------------------------------------------------------------
# kernel series


@dataclass(frozen=True)
class KernelSeries:
    """exp(-b y) * sum_q c_q y^(gamma_q - 1)/Gamma(gamma_q) for y > 0, 0 for y <= 0."""

    b: float
    gam: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.gam) <= 0):
            raise ValueError("exponents must be positive")

    @staticmethod
    def build(b, gam, c, tol=1e-20) -> "KernelSeries":
        gam = np.round(np.asarray(gam, dtype=float), 12)
        c = np.asarray(c, dtype=float)
        ug, inv = np.unique(gam, return_inverse=True)
        uc = np.zeros(ug.shape)
        np.add.at(uc, inv, c)
        size = np.abs(uc) * np.exp((ug - 1) * math.log(YMAX) - special.gammaln(ug))
        keep = size > tol * max(1.0, float(np.max(size, initial=0.0)))
        return KernelSeries(float(b), ug[keep], uc[keep])

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        yy = np.where(y > 0, y, 1.0)
        logy = np.log(yy)[..., None]
        terms = self.c * np.exp((self.gam - 1) * logy - special.gammaln(self.gam))
        out = np.exp(-self.b * yy) * terms.sum(axis=-1)
        return np.where(y > 0, out, 0.0)

    def __add__(self, other: "KernelSeries") -> "KernelSeries":
        if abs(self.b - other.b) > 0:
            raise ValueError("series with different tilts")
        return KernelSeries.build(self.b, np.r_[self.gam, other.gam], np.r_[self.c, other.c])

    def __neg__(self):
        return KernelSeries(self.b, self.gam, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a: float) -> "KernelSeries":
        return KernelSeries(self.b, self.gam, a * self.c)

    def shift_exponent(self, d: float) -> "KernelSeries":
        """Multiply the transform by (xi + b)^(-d)."""
        return KernelSeries.build(self.b, self.gam + d, self.c)

    def integrate(self, tol=1e-20) -> "KernelSeries":
        """Antiderivative vanishing at 0 (transform times 1/xi).

        1/xi = sum_k b^k (xi + b)^(-1-k).
        """
        if self.b == 0:
            return KernelSeries.build(0.0, self.gam + 1, self.c)
        g, c = [], []
        k = 0
        while True:
            gk = self.gam + 1 + k
            ck = self.c * self.b ** k
            g.append(gk)
            c.append(ck)
            mag = np.max(np.abs(ck) * np.exp((gk - 1) * math.log(YMAX) - special.gammaln(gk)))
            if k > 4 and mag < tol:
                break
            k += 1
            if k > 400:
                raise NonConvergence("antiderivative series did not converge")
        return KernelSeries.build(self.b, np.concatenate(g), np.concatenate(c))

    def derivative(self) -> "KernelSeries":
        """Derivative (transform times xi = (xi + b) - b); needs K(0+) = 0."""
        if np.any(self.gam <= 1):
            raise ValueError("kernel does not vanish at 0; derivative has an atom")
        return KernelSeries.build(self.b, np.r_[self.gam - 1, self.gam], np.r_[self.c, -self.b * self.c])

    @property
    def leading_exponent(self) -> float:
        return float(self.gam.min())


def _heaviside_series(b: float, tol: float = 1e-20) -> KernelSeries:
    """The constant 1, i.e. transform 1/xi = sum_k b^k (xi + b)^(-1-k)."""
    if b == 0:
        return KernelSeries(0.0, np.array([1.0]), np.array([1.0]))
    k = np.arange(400)
    c = np.exp(k * math.log(b))
    return KernelSeries.build(b, 1.0 + k, c, tol=tol)


def _inverse_symbol_series(alpha: float, kappa: float, a: float, b0: float, b: float,
                           tol: float = 1e-20) -> KernelSeries:
    """Series for 1/(kappa (s^alpha - a s + b0)), s = xi + b."""
    gams, coefs = [], []
    peak = 0.0
    for m in range(0, 2000):
        l = np.arange(m + 1) if a > 0 else np.array([m])
        if b0 == 0:
            l = l[l == 0]
        logc = (special.gammaln(m + 1) - special.gammaln(l + 1) - special.gammaln(m - l + 1))
        if a > 0:
            logc = logc + (m - l) * math.log(a)
        if b0 != 0:
            logc = logc + l * math.log(abs(b0))
        sign = np.where((l % 2 == 1) & (b0 > 0), -1.0, 1.0)
        g = alpha + (alpha - 1) * m + l
        ok = np.ones(l.shape, bool)
        c = sign[ok] * np.exp(logc[ok]) / kappa
        g = g[ok]
        gams.append(g)
        coefs.append(c)
        mag = float(np.max(np.abs(c) * np.exp((g - 1) * math.log(YMAX) - special.gammaln(g)), initial=0.0))
        peak = max(peak, mag)
        if m > 8 and mag < tol * peak:
            break
    else:
        raise NonConvergence("inverse symbol series did not converge")
    return KernelSeries.build(b, np.concatenate(gams), np.concatenate(coefs), tol=tol)


@dataclass(frozen=True)
class _SymbolParts:
    alpha: float
    kappa: float
    a: float
    b0: float
    b: float


def _parts(sym: LevySymbol) -> Optional[_SymbolParts]:
    if isinstance(sym, Stable):
        return _SymbolParts(sym.alpha, 1.0, 0.0, 0.0, 0.0)
    if isinstance(sym, TemperedStable):
        al, be = sym.alpha, sym.beta
        return _SymbolParts(al, sym.kappa, al * be ** (al - 1), (al - 1) * be ** al, be)
    return None


class ScaleKernels:
    """Scale functions of one symbol: k_i (i = -1..2), W^(beta), Z^(beta), K_F."""

    def __init__(self, sym: LevySymbol):
        p = _parts(sym)
        if p is None:
            raise TypeError("closed series only for stable and tempered symbols")
        self.sym = sym
        self._p = p
        self.k0 = _inverse_symbol_series(p.alpha, p.kappa, p.a, p.b0, p.b)
        self.k1 = self.k0.integrate()
        self.k2 = self.k1.integrate()
        self.km1 = self.k0.derivative()
        self._w: Dict[float, KernelSeries] = {}

    def k(self, i: int) -> KernelSeries:
        return {-1: self.km1, 0: self.k0, 1: self.k1, 2: self.k2}[i]

    def W(self, beta: float) -> KernelSeries:
        """beta-scale function, transform 1/(psi - beta)."""
        if beta == 0:
            return self.k0
        key = float(beta)
        if key not in self._w:
            p = self._p
            self._w[key] = _inverse_symbol_series(p.alpha, p.kappa, p.a, p.b0 - beta / p.kappa, p.b)
        return self._w[key]

    def intW(self, beta: float, times: int = 1) -> KernelSeries:
        s = self.W(beta)
        for _ in range(times):
            s = s.integrate()
        return s

    def Z(self, beta: float) -> Callable:
        iw = self.intW(beta)
        return lambda y: np.where(np.asarray(y) >= 0, 1.0 + beta * iw(y), 0.0)

    def KF(self) -> Callable:
        """Kernel with transform psi'/psi - 1/xi (bounded, K_F(0+) = alpha - 1)."""
        p = self._p
        one = _heaviside_series(p.b)
        lead = self.k0.shift_exponent(-(p.alpha - 1)).scale(p.alpha * p.kappa)
        ser = lead - one
        if p.a:
            ser = ser - self.k0.scale(p.kappa * p.a)
        return ser


@lru_cache(maxsize=32)
def scale_kernels(sym: LevySymbol) -> ScaleKernels:
    return ScaleKernels(sym)


def _has_series(sym) -> bool:
    return _parts(sym) is not None


# --------------------------------------------------------------------------
# Post-Widder


def post_widder_k(sym: LevySymbol, i: int, x: float, m: int) -> float:
    """(m/(x+1)) G^{k_i}_{m, (x+1)/m}, converging to k_i^+(x) as m grows."""
    if i not in (-1, 0, 1):
        raise ValueError("i must be -1, 0 or 1")
    if m < 4:
        raise ValueError("m must be >= 4")
    if not x > -1:
        raise ValueError("x must be > -1")
    if i == -1 and x + 1 < 0.05:
        warnings.warn("k_-1 is singular at -1; Post-Widder values there are inaccurate", RuntimeWarning)
    h = (x + 1) / m
    t = build_table(sym, h, m + 1)
    return float(t.gk[i][m] / h)


def _pw_tables(sym: LevySymbol, step: float, N: int) -> Dict[int, np.ndarray]:
    """k_i(j step), j = 0..N, i = -1..2 from one coefficient table (O(step) accurate)."""
    t = build_table(sym, step, N + 1)
    out = {i: t.gk[i][: N + 1] / step for i in (-1, 0, 1)}
    out[2] = np.cumsum(t.gk[1][: N + 1])
    return out


# --------------------------------------------------------------------------
# sampled functions


@dataclass
class SampledFunction:
    """Uniform samples of a function on [a, b], zero outside."""

    values: np.ndarray
    a: float = -1.0
    b: float = 1.0
    deriv: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("need at least two samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("samples must be finite")
        if not self.b > self.a:
            raise ValueError("empty domain")

    @property
    def N(self) -> int:
        return self.values.size - 1

    @property
    def step(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.N + 1)

    @classmethod
    def from_callable(cls, f: Callable, step: float, a: float = -1.0, b: float = 1.0,
                      df: Optional[Callable] = None) -> "SampledFunction":
        N = int(round((b - a) / step))
        x = np.linspace(a, b, N + 1)
        return cls(np.asarray(f(x), float) * np.ones_like(x), a, b,
                   None if df is None else np.asarray(df(x), float) * np.ones_like(x))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a - 1e-14) & (x <= self.b + 1e-14)
        return np.where(inside, np.interp(x, self.x, self.values), 0.0)

    def derivative(self, x):
        if self.deriv is None:
            d = np.gradient(self.values, self.step, edge_order=2)
        else:
            d = self.deriv
        return np.interp(np.asarray(x, float), self.x, d)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self) -> str:
        rows = ["x,value"] + [f"{a!r},{b!r}" for a, b in zip(self.x.tolist(), self.values.tolist())]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class PiecewiseFunction:
    """A callable that is smooth between the listed breakpoints (zero outside [-1, 1])."""

    f: Callable
    breaks: Tuple[float, ...] = ()
    df: Optional[Callable] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= -1) & (x <= 1), np.asarray(self.f(np.clip(x, -1, 1)), float) * np.ones_like(x), 0.0)

    def derivative(self, x):
        if self.df is None:
            raise ValueError("no derivative supplied")
        x = np.asarray(x, dtype=float)
        return np.where((x >= -1) & (x <= 1), np.asarray(self.df(np.clip(x, -1, 1)), float) * np.ones_like(x), 0.0)

    def sample(self, step: float) -> SampledFunction:
        return SampledFunction.from_callable(self, step, df=self.derivative if self.df else None)


# --------------------------------------------------------------------------
# direct quadrature against a kernel


_GL_CACHE: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_nodes(lo: float, hi: float, graded: bool, order: int = 20, sub: int = 12,
                 ratio: float = 0.1, levels: int = 40):
    """Quadrature nodes/weights on [lo, hi]; geometric grading toward lo if ``graded``."""
    t, w = _gl(order)
    if hi <= lo:
        return np.empty(0), np.empty(0)
    if graded:
        L = hi - lo
        edges = lo + L * ratio ** np.arange(levels + 1)[::-1]
        edges = np.r_[edges, hi] if edges[-1] < hi else edges
        # uniform subpanels on the outermost level for smooth integrands
        outer = np.linspace(lo + L * ratio, hi, sub + 1)
        edges = np.unique(np.r_[edges[edges <= lo + L * ratio], outer])
    else:
        edges = np.linspace(lo, hi, sub + 1)
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    ww = 0.5 * (b - a) * w
    return x.ravel(), ww.ravel()


def kernel_convolve(K: Callable, g: Callable, x: float, side: str, breaks: Sequence[float] = (),
                    order: int = 20, sub: int = 12) -> float:
    """int_0^{L} K(y) g(x -/+ y) dy with L = x + 1 (side '+') or 1 - x (side '-').

    The kernel may be integrably singular at y = 0; g is smooth between
    ``breaks``. Panels touching y = 0 are graded geometrically.
    """
    if side == "+":
        L = x + 1.0
        yb = [x - p for p in breaks]
    elif side == "-":
        L = 1.0 - x
        yb = [p - x for p in breaks]
    else:
        raise ValueError("side must be '+' or '-'")
    if L <= 0:
        return 0.0
    cuts = sorted({0.0, L, *[y for y in yb if 0 < y < L]})
    total = 0.0
    sgn = -1.0 if side == "+" else 1.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        y, w = _panel_nodes(lo, hi, graded=(lo == 0.0), order=order, sub=sub)
        total += float(np.sum(w * K(y) * g(x + sgn * y)))
    return total


def _kernel_for(sym, i: int) -> Callable:
    if _has_series(sym):
        return scale_kernels(sym).k(i)
    step = 1e-4
    tab = _pw_tables(sym, step, int(round(YMAX / step)) + 1)
    grid = np.arange(tab[i].size) * step
    return lambda y: np.interp(np.asarray(y, float), grid, tab[i], left=0.0)


def nonlocal_integral_at(g: Callable, side: str, sym: LevySymbol, x, breaks: Sequence[float] = ()) -> np.ndarray:
    """I^psi_+/- g at the points x by direct graded quadrature."""
    K = _kernel_for(sym, 0)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([kernel_convolve(K, g, xi, side, breaks) for xi in xs])
    return out if np.ndim(x) else float(out[0])


# --------------------------------------------------------------------------
# product integration on uniform samples


def _product_weights(sym: LevySymbol, step: float, N: int, level: int = 0) -> np.ndarray:
    """Weights w_m with sum_m w_m f_{i+/-m} = int k_level(y) f(x_i +/- y) dy for
    piecewise-linear f (level 0: I^psi; level -1: the k_-1 convolution)."""
    y = np.arange(N + 2) * step
    if _has_series(sym):
        sk = scale_kernels(sym)
        K2 = sk.k(level + 2)(y)
    else:
        tab = _pw_tables(sym, step, N + 1)
        K2 = tab[level + 2][: N + 2]
    D = np.diff(K2) / step  # D_m = (K2((m+1)d) - K2(md))/d
    w = np.empty(N + 1)
    w[0] = D[0]
    w[1:] = D[1 : N + 1] - D[:N]
    return w, K2, D


def _product_convolve(vals: np.ndarray, sym: LevySymbol, step: float, side: str, level: int = 0) -> np.ndarray:
    N = vals.size - 1
    w, K2, D = _product_weights(sym, step, N, level)
    if _has_series(sym):
        K1 = scale_kernels(sym).k(level + 1)(np.arange(N + 2) * step)
    else:
        K1 = _pw_tables(sym, step, N + 1)[level + 1][: N + 2]
    f = vals if side == "-" else vals[::-1]
    # out_i = sum_{m=0}^{N-i} w_m f_{i+m}, with the last node weighted by the half hat
    full = signal.fftconvolve(f[::-1], w)[: N + 1][::-1]  # sum_m w_m f_{i+m} over all m <= N-i
    i = np.arange(N + 1)
    last = N - i  # index m of the endpoint node f_N
    half = np.where(last >= 1, K1[np.maximum(last, 0)] - D[np.maximum(last - 1, 0)], 0.0)
    out = full - w[last] * f[N] + half * f[N]
    out[N] = 0.0
    return out if side == "-" else out[::-1]


def nonlocal_integral(g: SampledFunction, side: str, sym: LevySymbol, fine_step: Optional[float] = None,
                      h: Optional[float] = None) -> SampledFunction:
    """I^psi_+/- g on the sample grid of g by product integration.

    The samples are treated as a piecewise-linear function and integrated
    exactly against k_0 using the antiderivatives k_1, k_2.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if h is not None and g.step > h / 4:
        raise ResolutionError(f"sample step {g.step:g} exceeds h/4 = {h / 4:g}")
    if fine_step is not None and abs(fine_step - g.step) > 1e-12:
        g = SampledFunction.from_callable(g, fine_step, g.a, g.b)
    if (g.a, g.b) != (-1.0, 1.0):
        raise ValueError("nonlocal integrals act on functions sampled over [-1, 1]")
    out = _product_convolve(g.values, sym, g.step, side, level=0)
    return SampledFunction(out, g.a, g.b)


def nonlocal_derivative(g: SampledFunction, side: str, sym: LevySymbol) -> SampledFunction:
    """d/dx I^psi_+/- g = +/- (k_-1 convolved with g), by product integration."""
    out = _product_convolve(g.values, sym, g.step, side, level=-1)
    return SampledFunction(out if side == "+" else -out, g.a, g.b)


# --------------------------------------------------------------------------
# convolution quadratures and F


def conv_quadrature(g: Callable, table, side: str, variant: str = "psi", shifted: bool = True,
                    x=None) -> np.ndarray:
    """Grunwald sums of g at x (zero extension outside [-1, 1]).

    psi:     sum_j G^psi_j g(x -/+ (j - s) h), s = 1 if shifted else 0
    psi_m1:  sum_j G^{psi-1}_j g(x -/+ j h)
    Side '+' looks left (x - ...), side '-' looks right.
    """
    h = table.h
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    sgn = -1.0 if side == "+" else 1.0
    if variant == "psi":
        coef, s = table.gpsi, (1 if shifted else 0)
    elif variant == "psi_m1":
        coef, s = table.gpsi_m1, 0
    else:
        raise ValueError("variant must be psi or psi_m1")
    out = np.empty(xs.shape)
    for k, xv in enumerate(xs):
        dist = (xv + 1.0) if side == "+" else (1.0 - xv)
        J = min(int(np.floor(dist / h + 1e-9)) + s, table.N)
        j = np.arange(J + 1)
        pts = xv + sgn * (j - s) * h
        vals = np.asarray(g(np.clip(pts, -1, 1)), float) * np.ones_like(pts)
        vals = np.where((pts < -1 - 1e-12) | (pts > 1 + 1e-12), 0.0, vals)
        out[k] = np.dot(coef[: J + 1], vals)
    return out if np.ndim(x) else float(out[0])


def first_order_correction(g, sym: LevySymbol, side: str, x: float, breaks: Sequence[float] = ()) -> float:
    """F_+/-[g](x), from the bounded kernel K_F (transform psi'/psi - 1/xi).

    F_+[g](x) = -1/2 int_0^{x+1} K_F(z) g'(x - z) dz,
    F_-[g](x) = +1/2 int_0^{1-x} K_F(z) g'(x + z) dz.
    For the stable family K_F = alpha - 1.
    """
    dg = g.derivative
    if _has_series(sym):
        KF = scale_kernels(sym).KF()
    else:
        KF = _kf_fallback(sym)
    val = kernel_convolve(KF, dg, x, side, breaks)
    return -0.5 * val if side == "+" else 0.5 * val


def _kf_fallback(sym):
    """K_F = [y phi(y, inf)] * k_-1 by graded quadrature (no closed series)."""
    km1 = _kernel_for(sym, -1)

    def KF(y):
        y = np.atleast_1d(np.asarray(y, float))
        out = np.empty(y.shape)
        for k, yv in enumerate(y):
            if yv <= 0:
                out[k] = 0.0
                continue
            z, w = _panel_nodes(0.0, yv, graded=True)
            zz = np.maximum(yv - z, 1e-300)
            out[k] = np.sum(w * km1(z) * zz * np.asarray(sym.levy_tail(zz), float))
        return out
    return KF


def I_psi_derivative_at_minus1(g, sym: LevySymbol, breaks: Sequence[float] = ()) -> float:
    """[I^psi_- g]'(-1) = -k_0(2) g(1) + int_0^2 k_0(y) g'(-1 + y) dy."""
    K = _kernel_for(sym, 0)
    return float(-K(np.array([2.0]))[0] * float(g(np.array(1.0))) + kernel_convolve(K, g.derivative, -1.0, "-", breaks))


# --------------------------------------------------------------------------
# Mittag-Leffler series and resolvents


def mittag_leffler_apply(g: SampledFunction, beta: float, side: str, sym: LevySymbol,
                         n_terms: int = 200, rtol: float = 1e-14) -> SampledFunction:
    """E^{psi,beta}_+/- g = sum_n beta^n (I^psi)^n g, iterating product integration."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    acc = g.values.copy()
    term = g.values.copy()
    if beta == 0:
        return SampledFunction(acc, g.a, g.b)
    for _ in range(n_terms):
        term = beta * _product_convolve(term, sym, g.step, side, level=0)
        acc += term
        if np.max(np.abs(term)) < rtol * max(np.max(np.abs(acc)), 1e-300):
            return SampledFunction(acc, g.a, g.b)
    raise NonConvergence(f"Mittag-Leffler series not converged after {n_terms} terms")


_BACKWARD = {"DD", "DN", "ND", "NN", "N*D", "N*N"}


def resolvent_reference(g, beta: float, case, direction: str = "backward", sym: LevySymbol = None,
                        x=None, route: str = "auto", step: float = 1e-4, breaks: Sequence[float] = ()):
    """(beta - G)^{-1} g for the continuous generator with walls ``case``.

    route "series": beta-scale function W^(beta) in closed series form and
    graded quadrature at the points x.
    route "iterate": Mittag-Leffler operators built by iterating the sampled
    nonlocal integral (step ``step``), then interpolated to x.
    Returns an array of values at x (or a SampledFunction if x is None and
    route is "iterate").
    """
    from .generator import BoundaryCase

    case = BoundaryCase.parse(case)
    if direction not in ("backward", "forward"):
        raise ValueError("direction must be backward or forward")
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if case.right == "N" and case.left != "D" and beta <= 1e-8:
        raise ValueError("beta too small for a conservative case")
    if route == "auto":
        route = "series" if (_has_series(sym) and x is not None) else "iterate"
    if route == "series":
        return _resolvent_series(g, beta, case, direction, sym, np.asarray(x, float), breaks)
    if route == "iterate":
        sf = _resolvent_iterate(g, beta, case, direction, sym, step)
        return sf if x is None else sf(np.asarray(x, float))
    raise ValueError(f"unknown route {route!r}")


def _resolvent_series(g, beta, case, direction, sym, x, breaks):
    sk = scale_kernels(sym)
    W = sk.W(beta)
    Wp = W.derivative()
    IW = sk.intW(beta)
    IIW = sk.intW(beta, 2)
    Z = sk.Z(beta)
    side = "-" if direction == "backward" else "+"
    edge = -1.0 if side == "-" else 1.0
    xs = np.atleast_1d(x)

    def conv(K, at):
        return kernel_convolve(K, g, at, side, breaks)

    Wg = np.array([conv(W, xv) for xv in xs])
    Wg_edge = conv(W, edge)
    Zg_edge = conv(Z, edge)
    r = (1.0 - xs) if side == "-" else (xs + 1.0)  # distance to the far wall
    W2, Z2 = float(W(2.0)), float(Z(2.0))
    name = case.name
    if direction == "forward":
        name = {"DN": "DN+", "ND": "ND+", "N*D": "N*D+", "N*N": "N*N+"}.get(name, name)
    if name == "DD":
        d = Wg_edge / W2
        phi = Wg - d * W(r)
    elif name in ("DN", "ND+"):  # omega = 1
        d = Wg_edge / Z2
        phi = Wg - d * Z(r)
    elif name in ("ND", "DN+"):  # omega = k_0
        d = Zg_edge / Z2
        phi = Wg - d * W(r)
    elif name == "NN":
        d = Zg_edge / (beta * (2.0 + beta * float(IIW(2.0))))
        phi = Wg - beta * d * IW(r) - d
    elif name == "N*D":
        dWg = _edge_derivative(W, g, breaks)
        d = dWg / (-float(Wp(2.0)))
        phi = Wg - d * W(r)
    elif name == "N*N":
        dWg = _edge_derivative(W, g, breaks)
        d = dWg / (beta * (-W2))
        phi = Wg - beta * d * IW(r) - d
    elif name == "N*D+":  # omega = k_-1
        d = Wg_edge / float(Wp(2.0))
        phi = Wg - d * Wp(r)
    elif name == "N*N+":
        d = Zg_edge / (beta * W2)
        phi = Wg - d * Wp(r)
    else:  # pragma: no cover
        raise ValueError(name)
    u = -np.asarray(phi, float)
    return u if np.ndim(x) else float(u[0])


def _edge_derivative(W, g, breaks):
    """[W * g]'(-1) for (W * g)(x) = int_0^{1-x} W(y) g(x + y) dy."""
    return float(-W(2.0) * float(g(np.array(1.0))) + kernel_convolve(W, g.derivative, -1.0, "-", breaks))


def _resolvent_iterate(g, beta, case, direction, sym, step) -> SampledFunction:
    side = "-" if direction == "backward" else "+"
    gs = g if isinstance(g, SampledFunction) else SampledFunction.from_callable(g, step)
    step = gs.step
    xs = gs.x
    N = gs.N
    r = (1.0 - xs) if side == "-" else (xs + 1.0)
    e = 0 if side == "-" else N  # index of the evaluation wall
    if _has_series(sym):
        sk = scale_kernels(sym)
        kf = {i: sk.k(i) for i in (-1, 0, 1)}
    else:
        tab = _pw_tables(sym, step, N + 1)
        grid = np.arange(N + 2) * step
        kf = {i: (lambda y, t=tab[i]: np.interp(np.asarray(y, float), grid, t[: N + 2], left=0.0)) for i in (-1, 0, 1)}

    def E(v):
        return mittag_leffler_apply(SampledFunction(v), beta, side, sym).values

    def I(v):
        return _product_convolve(v, sym, step, side, 0)

    def Iplain(v):
        # plain integral toward the evaluation wall, trapezoid
        c = np.r_[0.0, np.cumsum(0.5 * (v[1:] + v[:-1]) * step)]
        return (c[-1] - c) if side == "-" else c

    def dI(v):
        # derivative of I^psi at the left wall (backward side only)
        return _product_convolve(v, sym, step, side, -1)

    Ig = I(gs.values)
    EIg = E(Ig)
    name = case.name
    one = np.ones(N + 1)
    if direction == "forward":
        name = {"DN": "DN+", "ND": "ND+", "N*D": "N*D+", "N*N": "N*N+"}.get(name, name)
    if name == "DD":
        om = kf[0](r)
        Eom = E(om)
        d = EIg[e] / Eom[e]
        phi = EIg - d * Eom
    elif name in ("DN", "ND+"):
        Eom = E(one)
        d = EIg[e] / Eom[e]
        phi = EIg - d * Eom
    elif name in ("ND", "DN+"):
        om = kf[0](r)
        Eom = E(om)
        d = E(Iplain(gs.values))[e] / (1.0 + beta * E(Iplain(om))[e])
        phi = EIg - d * Eom
    elif name == "NN":
        om = kf[1](r)
        Eom = E(om)
        d = E(Iplain(gs.values))[e] / (beta * (2.0 + beta * E(Iplain(om))[e]))
        phi = EIg - beta * d * Eom - d
    elif name in ("N*D", "N*N"):
        # d/dx E I g = d/dx I (E g); d/dx E omega = omega' + beta d/dx I (E omega)
        Eg = E(gs.values)
        num = -dI(Eg)[0]
        if name == "N*D":
            om = kf[0](r)
            om_p = -float(kf[-1](np.array([2.0]))[0])
        else:
            om = kf[1](r)
            om_p = -float(kf[0](np.array([2.0]))[0])
        Eom = E(om)
        den = om_p + beta * (-dI(Eom)[0])
        if name == "N*D":
            d = num / den
            phi = EIg - d * Eom
        else:
            d = num / (beta * den)
            phi = EIg - beta * d * Eom - d
    elif name in ("N*D+", "N*N+"):
        om = kf[-1](r)
        # k_-1 is infinite at the wall; pick the end sample so the first
        # trapezoid carries the exact mass k_0(step)
        om[0] = 2.0 * float(kf[0](np.array([step]))[0]) / step - om[1]
        Eom = E(om)
        if name == "N*D+":
            d = EIg[e] / Eom[e]
        else:
            d = Iplain(E(gs.values))[e] / (beta * Iplain(Eom)[e])
        phi = EIg - d * Eom
    else:  # pragma: no cover
        raise ValueError(name)
    return SampledFunction(-phi, gs.a, gs.b)


@dataclass(frozen=True)
class ScaleFunction:
    """k_i^+/- of a symbol, evaluated from the closed series when available."""

    sym: LevySymbol
    i: int
    side: str = "+"
    m: int = 4096

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = (x + 1.0) if self.side == "+" else (1.0 - x)
        if _has_series(self.sym):
            return scale_kernels(self.sym).k(self.i)(y)
        f = np.vectorize(lambda yy: post_widder_k(self.sym, self.i, yy - 1.0, self.m) if yy > 0 else 0.0)
        return f(y)
