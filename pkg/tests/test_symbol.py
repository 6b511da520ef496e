"""Symbols: evaluators against direct quadrature over the Lévy density."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from grunwald import Custom, Stable, SymbolDomainError, TemperedStable, TruncatedStable, symbol_from_config

alphas = st.floats(min_value=1.05, max_value=1.95)
points = st.floats(min_value=0.05, max_value=50.0)


def _density(sym):
    """Lévy density y -> phi(y) of each built-in family."""
    a = sym.alpha
    if isinstance(sym, Stable):
        return lambda y: y ** (-1 - a) / special.gamma(-a)
    if isinstance(sym, TemperedStable):
        return lambda y: sym.c * math.exp(-sym.beta * y) * y ** (-1 - a)
    return lambda y: y ** (-1 - a) if y <= sym.K else 0.0


def _psi_quad(sym, xi):
    """psi(xi) = int (e^{-xi y} - 1 + xi y) phi(y) dy by adaptive quadrature."""
    phi = _density(sym)
    f = lambda y: (math.expm1(-xi * y) + xi * y) * phi(y)  # noqa: E731
    hi = sym.K if isinstance(sym, TruncatedStable) else np.inf
    brk = min(1.0, hi)
    a = integrate.quad(f, 0, brk, limit=200, epsrel=1e-12)[0]
    b = integrate.quad(f, brk, hi, limit=200, epsrel=1e-12)[0] if hi > brk else 0.0
    return a + b


FAMILIES = [Stable(1.5), Stable(1.2), TemperedStable(1.5, 1.0), TemperedStable(1.7, 0.3, c=2.0),
            TruncatedStable(1.5, 1.0), TruncatedStable(1.3, 2.5)]


@pytest.mark.parametrize("sym", FAMILIES, ids=lambda s: str(s.describe()))
@pytest.mark.parametrize("xi", [0.3, 1.0, 7.0])
def test_psi_matches_levy_khintchine_quadrature(sym, xi):
    """Property: psi equals its integral representation."""
    assert float(sym.psi(xi)) == pytest.approx(_psi_quad(sym, xi), rel=1e-7)


@pytest.mark.parametrize("sym", FAMILIES, ids=lambda s: str(s.describe()))
@given(xi=points)
@settings(max_examples=25, deadline=None)
def test_psi_prime_is_derivative(sym, xi):
    """Property: psi' agrees with a centred difference of psi."""
    d = 1e-5 * xi
    fd = (float(sym.psi(xi + d)) - float(sym.psi(xi - d))) / (2 * d)
    assert float(sym.psi_prime(xi)) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("sym", FAMILIES, ids=lambda s: str(s.describe()))
@pytest.mark.parametrize("j", [2, 3, 6])
def test_tail_moment_matches_quadrature(sym, j):
    """Property: M_j(s) = int y^j e^{-s y} phi(y) dy."""
    s = 2.0
    phi = _density(sym)
    hi = sym.K if isinstance(sym, TruncatedStable) else np.inf
    ref = integrate.quad(lambda y: y**j * math.exp(-s * y) * phi(y), 0, hi, limit=200, epsrel=1e-12)[0]
    assert float(sym.tail_moment(j, s)) == pytest.approx(ref, rel=1e-8)
    assert sym.log_tail_moment(j, s) == pytest.approx(math.log(ref), abs=1e-8)


@pytest.mark.parametrize("sym", FAMILIES, ids=lambda s: str(s.describe()))
def test_tails_integrate_the_density(sym):
    """Property: -d/dx levy_tail = phi and -d/dx big_phi = levy_tail."""
    phi = _density(sym)
    for x in (0.2, 0.7):
        d = 1e-5
        dt = (float(sym.levy_tail(x + d)) - float(sym.levy_tail(x - d))) / (2 * d)
        assert -dt == pytest.approx(phi(x), rel=1e-6)
        dP = (float(sym.big_phi(x + d)) - float(sym.big_phi(x - d))) / (2 * d)
        assert -dP == pytest.approx(float(sym.levy_tail(x)), rel=1e-6)


@given(alpha=alphas, xi=points)
@settings(max_examples=50, deadline=None)
def test_stable_psi_is_power(alpha, xi):
    """Property: the stable symbol is xi^alpha, increasing and convex."""
    s = Stable(alpha)
    assert float(s.psi(xi)) == pytest.approx(xi**alpha, rel=1e-14)
    assert float(s.psi_prime(xi)) > 0


@given(alpha=alphas, xi=points)
@settings(max_examples=50, deadline=None)
def test_tempered_tends_to_stable(alpha, xi):
    """Property: with kappa = 1, vanishing tempering recovers xi^alpha.

    The compensator alpha beta^(alpha-1) xi bounds the gap, so it closes slowly.
    """
    gaps = []
    for beta in (1e-2, 1e-4, 1e-6, 1e-8):
        gap = abs(float(TemperedStable(alpha, beta).psi(xi)) - xi**alpha)
        assert gap <= 1.01 * (alpha * beta ** (alpha - 1) * xi + beta**alpha) + 1e-12 * xi**alpha
        gaps.append(gap)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


@given(alpha=alphas, xi=st.floats(min_value=1e-6, max_value=1e-2))
@settings(max_examples=30, deadline=None)
def test_tempered_small_xi_is_quadratic(alpha, xi):
    """Property: psi(xi) ~ psi''(0) xi^2 / 2 near zero (no cancellation blow-up)."""
    t = TemperedStable(alpha, 1.0)
    second = t.kappa * alpha * (alpha - 1.0)
    assert float(t.psi(xi)) == pytest.approx(0.5 * second * xi * xi, rel=5 * xi + 1e-9)


@pytest.mark.parametrize("bad", [
    lambda: Stable(2.0), lambda: Stable(1.0), lambda: TemperedStable(1.5, 0.0),
    lambda: TemperedStable(1.5, 1.0, c=-1.0), lambda: TruncatedStable(1.5, 0.0),
    lambda: Stable(1.5).psi(0.0), lambda: Stable(1.5).psi(-1.0), lambda: Stable(1.5).tail_moment(1, 1.0),
    lambda: Custom(psi_fn=lambda x: x),
    lambda: symbol_from_config({"family": "gaussian"}),
])
def test_domain_errors(bad):
    """Property: invalid parameters and arguments raise SymbolDomainError."""
    with pytest.raises(SymbolDomainError):
        bad()


@pytest.mark.parametrize("cfg,cls", [
    ({"family": "stable", "alpha": 1.4}, Stable),
    ({"family": "tempered", "alpha": 1.6, "beta": 0.5}, TemperedStable),
    ({"family": "truncated", "alpha": 1.3, "K": 2.0}, TruncatedStable),
])
def test_config_round_trip(cfg, cls):
    """Property: describe() fed back into the config builder gives the same symbol."""
    s = symbol_from_config(cfg)
    assert isinstance(s, cls)
    assert symbol_from_config(s.describe()) == s


def test_custom_symbol_reproduces_stable():
    """Property: a Custom symbol wrapping stable evaluators matches Stable."""
    a = 1.5
    ref = Stable(a)
    c = Custom(psi_fn=lambda x: x**a, psi_prime_fn=lambda x: a * x ** (a - 1),
               tail_moment_fn=lambda j, s: ref.tail_moment(j, s), j_max=40)
    xs = np.array([0.5, 2.0, 9.0])
    assert np.allclose(c.psi(xs), ref.psi(xs))
    assert c.max_order == 40
    assert c.h1 is False
