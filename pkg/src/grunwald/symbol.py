"""Lévy symbols of spectrally positive, recurrent, unbounded-variation processes.

A symbol is the Laplace exponent

    psi(xi) = int_0^inf (exp(-xi*y) - 1 + xi*y) phi(dy),

together with the scalar functions the rest of the package needs: the
derivative psi', the moments M_j(s) = int y^j exp(-s*y) phi(dy) (so that
psi^{(j)}(s) = (-1)^j M_j(s) for j >= 2), the tail phi(x, inf) and its
integral Phi(x) = int_x^inf phi(y, inf) dy.

Three closed families are provided (stable, tempered stable, truncated
stable) plus a ``Custom`` wrapper around user supplied callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

__all__ = [
    "LevySymbol",
    "Stable",
    "TemperedStable",
    "TruncatedStable",
    "Custom",
    "SymbolDomainError",
    "psi",
    "psi_prime",
    "tail_moment",
    "big_phi",
    "levy_tail",
    "symbol_from_config",
]


class SymbolDomainError(ValueError):
    """Raised when a symbol function is evaluated outside its domain."""


def _check_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise SymbolDomainError(f"{name} must be > 0, got {x!r}")
    return arr


def _upper_gamma_neg(a: float, z):
    """Upper incomplete gamma Gamma(a, z) for a in (-2, 0) and z > 0.

    scipy only covers a > 0, so we climb with Gamma(a+1, z) = a Gamma(a, z) + z^a e^{-z}.
    """
    z = np.asarray(z, dtype=float)
    if not -2.0 < a < 0.0:
        raise ValueError("helper only handles a in (-2, 0)")
    if a > -1.0:
        top = a + 1.0
        g_top = special.gamma(top) * special.gammaincc(top, z)
        return (g_top - z**a * np.exp(-z)) / a
    top = a + 2.0
    g_top = special.gamma(top) * special.gammaincc(top, z)
    g_mid = (g_top - z ** (a + 1.0) * np.exp(-z)) / (a + 1.0)
    return (g_mid - z**a * np.exp(-z)) / a


def _lower_gamma(a: float, z):
    """Lower incomplete gamma for a > 0 (unregularized)."""
    return special.gamma(a) * special.gammainc(a, np.asarray(z, dtype=float))


@dataclass(frozen=True)
class LevySymbol:
    """Base class. Subclasses implement the five scalar evaluators."""

    h1: bool = field(default=True, init=False)

    # family label used in configs and output metadata
    family: str = field(default="abstract", init=False)

    def psi(self, x):
        raise NotImplementedError

    def psi_prime(self, x):
        raise NotImplementedError

    def tail_moment(self, j: int, s):
        raise NotImplementedError

    def big_phi(self, x):
        raise NotImplementedError

    def levy_tail(self, x):
        raise NotImplementedError

    def log_tail_moment(self, j: int, s: float) -> float:
        """log M_j(s); families override this to avoid under/overflow."""
        return float(np.log(self.tail_moment(j, s)))

    def binomial_factor(self, j: int, h: float) -> Optional[np.ndarray]:
        """Optional fast path: array r_0..r_j with G^psi_m = h^{-alpha} r_m.

        Returning None makes the coefficient builder fall back to the
        generic moment route.
        """
        return None

    def describe(self) -> dict:
        raise NotImplementedError

    @property
    def max_order(self) -> Optional[int]:
        return None


def _stable_binomials(alpha: float, N: int) -> np.ndarray:
    """(-1)^j C(alpha, j) for j = 0..N via the ratio (j - alpha)/(j + 1)."""
    out = np.empty(N + 1)
    out[0] = 1.0
    if N >= 1:
        ratios = (np.arange(N) - alpha) / (np.arange(N) + 1.0)
        out[1:] = np.cumprod(ratios)
    return out


@dataclass(frozen=True)
class Stable(LevySymbol):
    """psi(xi) = xi^alpha with Lévy density y^{-1-alpha}/Gamma(-alpha)."""

    alpha: float = 1.5

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise SymbolDomainError("alpha must lie in (1, 2)")
        object.__setattr__(self, "h1", True)
        object.__setattr__(self, "family", "stable")

    def psi(self, x):
        return _check_positive(x) ** self.alpha

    def psi_prime(self, x):
        return self.alpha * _check_positive(x) ** (self.alpha - 1.0)

    def tail_moment(self, j: int, s):
        if j < 2:
            raise SymbolDomainError("tail moments start at j = 2")
        s = _check_positive(s, "s")
        a = self.alpha
        return s ** (a - j) * special.gamma(j - a) / special.gamma(-a)

    def log_tail_moment(self, j, s):
        a = self.alpha
        return (a - j) * math.log(s) + special.gammaln(j - a) - math.log(special.gamma(-a))

    def big_phi(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = x[pos] ** (1.0 - self.alpha) / special.gamma(2.0 - self.alpha)
        return out if out.ndim else float(out)

    def levy_tail(self, x):
        x = _check_positive(x)
        a = self.alpha
        return x ** (-a) / (a * special.gamma(-a))

    def binomial_factor(self, j, h):
        return _stable_binomials(self.alpha, j)

    def describe(self):
        return {"family": "stable", "alpha": self.alpha}


@dataclass(frozen=True)
class TemperedStable(LevySymbol):
    """Lévy density c exp(-beta*y) y^{-1-alpha}.

    With kappa = c Gamma(-alpha),
    psi(xi) = kappa [(beta+xi)^alpha - beta^alpha - alpha beta^{alpha-1} xi].
    The default c = 1/Gamma(-alpha) gives kappa = 1.
    """

    alpha: float = 1.5
    beta: float = 1.0
    c: Optional[float] = None

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise SymbolDomainError("alpha must lie in (1, 2)")
        if not self.beta > 0:
            raise SymbolDomainError("tempering beta must be > 0")
        if self.c is None:
            object.__setattr__(self, "c", 1.0 / special.gamma(-self.alpha))
        if not self.c > 0:
            raise SymbolDomainError("c must be > 0")
        object.__setattr__(self, "h1", True)
        object.__setattr__(self, "family", "tempered")

    @property
    def kappa(self) -> float:
        return self.c * special.gamma(-self.alpha)

    def psi(self, x):
        x = _check_positive(x)
        a, b = self.alpha, self.beta
        # (b+x)^a - b^a - a b^(a-1) x loses digits for small x; use expm1/log1p
        t = x / b
        body = np.expm1(a * np.log1p(t)) - a * t
        return self.kappa * b**a * body

    def psi_prime(self, x):
        x = _check_positive(x)
        a, b = self.alpha, self.beta
        t = x / b
        return self.kappa * a * b ** (a - 1.0) * np.expm1((a - 1.0) * np.log1p(t))

    def tail_moment(self, j: int, s):
        if j < 2:
            raise SymbolDomainError("tail moments start at j = 2")
        s = _check_positive(s, "s")
        a = self.alpha
        return self.c * special.gamma(j - a) * (s + self.beta) ** (a - j)

    def log_tail_moment(self, j, s):
        a = self.alpha
        return math.log(self.c) + special.gammaln(j - a) + (a - j) * math.log(s + self.beta)

    def levy_tail(self, x):
        x = _check_positive(x)
        a, b = self.alpha, self.beta
        return self.c * b**a * _upper_gamma_neg(-a, b * x)

    def big_phi(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        a, b = self.alpha, self.beta
        out[pos] = self.c * (
            b ** (a - 1.0) * _upper_gamma_neg(1.0 - a, b * xp)
            - xp * b**a * _upper_gamma_neg(-a, b * xp)
        )
        return out if out.ndim else float(out)

    def binomial_factor(self, j, h):
        a = self.alpha
        base = _stable_binomials(a, j)
        m = np.arange(j + 1)
        out = self.kappa * base * (1.0 + self.beta * h) ** (a - m)
        # orders 0 and 1 are psi and psi', which carry the compensator terms
        out[0] = h**a * float(self.psi(1.0 / h))
        if j >= 1:
            out[1] = -(h**a) * float(self.psi_prime(1.0 / h)) / h
        return out

    def describe(self):
        return {"family": "tempered", "alpha": self.alpha, "beta": self.beta, "c": self.c}


@dataclass(frozen=True)
class TruncatedStable(LevySymbol):
    """Lévy density y^{-1-alpha} on (0, K], no normalising constant.

    Everything reduces to incomplete gamma functions of positive order,
    e.g. M_j(s) = s^{alpha-j} gamma(j-alpha, sK).
    """

    alpha: float = 1.5
    K: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise SymbolDomainError("alpha must lie in (1, 2)")
        if not self.K > 0:
            raise SymbolDomainError("truncation K must be > 0")
        object.__setattr__(self, "h1", True)
        object.__setattr__(self, "family", "truncated")

    def _F(self, z):
        # int_0^z (e^{-u} - 1 + u) u^{-1-a} du after two integrations by parts
        a = self.alpha
        z = np.asarray(z, dtype=float)
        f = np.where(z < 1e-4, z * z / 2 - z**3 / 6 + z**4 / 24, np.exp(-z) - 1 + z)
        fp = -np.expm1(-z)
        return (
            -f * z ** (-a) / a
            + fp * z ** (1 - a) / (a * (1 - a))
            - _lower_gamma(2 - a, z) / (a * (1 - a))
        )

    def psi(self, x):
        x = _check_positive(x)
        return x**self.alpha * self._F(x * self.K)

    def psi_prime(self, x):
        # psi'(x) = int_0^K (1 - e^{-xy}) y^{-a} dy = x^{a-1} [ (xK)^{1-a}/(1-a) - gamma(1-a, xK) ]
        # where gamma(1-a, .) has negative order; rewrite through order 2-a.
        x = _check_positive(x)
        a, K = self.alpha, self.K
        z = x * K
        # int_0^z (1-e^{-u}) u^{-a} du = [ (1-e^{-u}) u^{1-a}/(1-a) ]_0^z - gamma(2-a, z)/(1-a)
        inner = -np.expm1(-z) * z ** (1 - a) / (1 - a) - _lower_gamma(2 - a, z) / (1 - a)
        return x ** (a - 1) * inner

    def tail_moment(self, j: int, s):
        if j < 2:
            raise SymbolDomainError("tail moments start at j = 2")
        s = _check_positive(s, "s")
        a = self.alpha
        return s ** (a - j) * _lower_gamma(j - a, s * self.K)

    def log_tail_moment(self, j, s):
        a = self.alpha
        reg = special.gammainc(j - a, s * self.K)
        return (a - j) * math.log(s) + special.gammaln(j - a) + math.log(reg) if reg > 0 else -math.inf

    def levy_tail(self, x):
        x = _check_positive(x)
        a, K = self.alpha, self.K
        return np.where(x < K, (x ** (-a) - K ** (-a)) / a, 0.0)

    def big_phi(self, x):
        x = np.asarray(x, dtype=float)
        a, K = self.alpha, self.K
        out = np.zeros_like(x)
        pos = (x > 0) & (x < K)
        xp = x[pos]
        # int_x^K (y^{-a} - K^{-a})/a dy
        out[pos] = ((K ** (1 - a) - xp ** (1 - a)) / (1 - a) - (K - xp) * K ** (-a)) / a
        return out if out.ndim else float(out)

    def binomial_factor(self, j, h):
        a = self.alpha
        m = np.arange(j + 1)
        base = _stable_binomials(a, j) * special.gamma(-a)
        # G_m = h^{-a} Gamma(-a) (-1)^m C(a, m) P(m - a, K/h) for m >= 2
        reg = np.ones(j + 1)
        if j >= 2:
            reg[2:] = special.gammainc(m[2:] - a, self.K / h)
        out = base * reg
        # the first two coefficients come from psi and psi'
        out[0] = h**a * float(self.psi(1.0 / h))
        if j >= 1:
            out[1] = -(h**a) * float(self.psi_prime(1.0 / h)) / h
        return out

    def describe(self):
        return {"family": "truncated", "alpha": self.alpha, "K": self.K}


@dataclass(frozen=True)
class Custom(LevySymbol):
    """User supplied evaluators. ``tail_moment(j, s)`` must be valid for 2 <= j <= j_max."""

    psi_fn: Callable = None
    psi_prime_fn: Callable = None
    tail_moment_fn: Callable = None
    big_phi_fn: Callable = None
    levy_tail_fn: Callable = None
    j_max: int = 2
    h1_flag: bool = False
    name: str = "custom"

    def __post_init__(self):
        for attr in ("psi_fn", "psi_prime_fn", "tail_moment_fn"):
            if getattr(self, attr) is None:
                raise SymbolDomainError(f"Custom symbol needs {attr}")
        object.__setattr__(self, "h1", bool(self.h1_flag))
        object.__setattr__(self, "family", "custom")

    @property
    def max_order(self):
        return self.j_max

    def psi(self, x):
        return np.asarray(self.psi_fn(_check_positive(x)), dtype=float)

    def psi_prime(self, x):
        return np.asarray(self.psi_prime_fn(_check_positive(x)), dtype=float)

    def tail_moment(self, j: int, s):
        if j < 2:
            raise SymbolDomainError("tail moments start at j = 2")
        if j > self.j_max:
            raise SymbolDomainError(f"moment order {j} exceeds declared j_max={self.j_max}")
        return np.asarray(self.tail_moment_fn(j, _check_positive(s, "s")), dtype=float)

    def big_phi(self, x):
        if self.big_phi_fn is None:
            raise NotImplementedError("big_phi not supplied")
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self.big_phi_fn(np.maximum(x, 1e-300)), 0.0)

    def levy_tail(self, x):
        if self.levy_tail_fn is None:
            raise NotImplementedError("levy_tail not supplied")
        return np.asarray(self.levy_tail_fn(_check_positive(x)), dtype=float)

    def describe(self):
        return {"family": "custom", "name": self.name, "j_max": self.j_max}


# module level wrappers mirror the method names


def psi(sym: LevySymbol, x):
    return sym.psi(x)


def psi_prime(sym: LevySymbol, x):
    return sym.psi_prime(x)


def tail_moment(sym: LevySymbol, j: int, s):
    return sym.tail_moment(j, s)


def big_phi(sym: LevySymbol, x):
    return sym.big_phi(x)


def levy_tail(sym: LevySymbol, x):
    return sym.levy_tail(x)


def symbol_from_config(cfg: dict) -> LevySymbol:
    """Build a symbol from {"family": ..., "alpha": ..., "beta": ..., "c": ..., "K": ...}."""
    fam = str(cfg.get("family", "stable")).lower()
    alpha = float(cfg.get("alpha", 1.5))
    if fam == "stable":
        return Stable(alpha)
    if fam == "tempered":
        c = cfg.get("c")
        return TemperedStable(alpha, float(cfg.get("beta", 1.0)), None if c is None else float(c))
    if fam == "truncated":
        return TruncatedStable(alpha, float(cfg.get("K", 1.0)))
    raise SymbolDomainError(f"unknown family {fam!r}")


def stable_binomials(alpha: float, N: int) -> np.ndarray:
    """Public access to (-1)^j C(alpha, j), j = 0..N."""
    return _stable_binomials(alpha, N)


__all__.append("stable_binomials")
