"""Approximating functions, test functions and the convergence-study harness."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grunwald import (ConvergenceStudy, Grid, GridFunction, ScaleFunction, Stable, TemperedStable,
                      TruncatedStable, build_fh, build_table, bump_g, convergence_study, vartheta)
from grunwald.harness import FunctionClassError, SupportError, boundary_functional, predicted_slope, vartheta_zero
from grunwald.operators import conv_quadrature

alphas = st.floats(min_value=1.1, max_value=1.9)
ns = st.sampled_from([15, 63])
lams = st.floats(min_value=0.0, max_value=0.95)
families = st.sampled_from(["stable", "tempered", "truncated"])


def _fiber(family, alpha, n, lam):
    sym = {"stable": Stable(alpha), "tempered": TemperedStable(alpha, 1.0), "truncated": TruncatedStable(alpha, 1.0)}
    grid = Grid(n)
    return grid, build_table(sym[family], grid.h, n + 4), grid.points(lam)


@given(family=families, alpha=alphas, n=ns, lam=lams)
@settings(max_examples=40, deadline=None)
def test_vartheta_zero_minus_is_discrete_harmonic(family, alpha, n, lam):
    """Property: the shifted psi quadrature of vartheta^{k_0}_{-h} vanishes at interior nodes
    and its psi-1 quadrature equals one."""
    grid, tab, x = _fiber(family, alpha, n, lam)
    f = lambda y: vartheta(0, "-", grid, tab, y)  # noqa: E731
    q = conv_quadrature(f, tab, "-", "psi", True, x)
    q1 = conv_quadrature(f, tab, "-", "psi_m1", True, x)
    assert np.max(np.abs(q[1:n])) < 1e-10 / grid.h
    assert np.allclose(q1[:n], 1.0, atol=1e-10)


@given(family=families, alpha=alphas, n=ns, lam=lams)
@settings(max_examples=40, deadline=None)
def test_vartheta_minus_one_plus_is_discrete_harmonic(family, alpha, n, lam):
    """Property: both quadratures of vartheta^{k_-1}_{+h} vanish from the third node to the last interior one."""
    grid, tab, x = _fiber(family, alpha, n, lam)
    f = lambda y: vartheta(-1, "+", grid, tab, y)  # noqa: E731
    q = conv_quadrature(f, tab, "+", "psi", True, x)
    q1 = conv_quadrature(f, tab, "+", "psi_m1", True, x)
    assert np.max(np.abs(q[2:n])) < 1e-10 / grid.h
    assert np.max(np.abs(q1[2:n])) < 1e-10 / grid.h


@pytest.mark.parametrize("i,side", [(1, "-"), (0, "-"), (1, "+"), (0, "+"), (-1, "+")])
def test_vartheta_approaches_scale_function(i, side):
    """Property: vartheta^{k_i} tends to the scale function k_i as h shrinks."""
    sym = Stable(1.5)
    x = np.array([-0.5, 0.0, 0.5])
    exact = ScaleFunction(sym, i, side)(x)
    errs = []
    for n in (31, 127, 511):
        grid = Grid(n)
        errs.append(np.max(np.abs(vartheta(i, side, grid, build_table(sym, grid.h, n + 4), x) - exact)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02 * np.max(np.abs(exact))


def test_vartheta_zero_and_errors():
    """Property: vartheta^0 is lambda on the first cell and 1 elsewhere; unsupported indices raise."""
    grid = Grid(7)
    assert vartheta_zero(grid, -1.0 + 0.25 * grid.h) == pytest.approx(0.25)
    assert vartheta_zero(grid, 0.3) == 1.0
    tab = build_table(Stable(1.5), grid.h, 12)
    with pytest.raises(ValueError):
        vartheta(-1, "-", grid, tab, 0.0)
    with pytest.raises(ValueError):
        vartheta(0, "x", grid, tab, 0.0)
    with pytest.raises(ValueError):
        vartheta(0, "+", Grid(15), tab, 0.0)


@pytest.mark.parametrize("kind,params", [("interior_bump", {}), ("interior_bump", {"m": 0.2, "r": 0.3}),
                                         ("right_plateau", {}), ("full_smooth", {}),
                                         ("full_smooth", {"r": 1.9, "s": 0.0})])
def test_bump_derivative(kind, params):
    """Property: the stored derivative matches a centred difference."""
    g = bump_g(kind, **params)
    x = np.linspace(-0.98, 0.98, 41)
    d = 1e-6
    fd = (g(x + d) - g(x - d)) / (2 * d)
    assert np.max(np.abs(g.derivative(x) - fd)) < 1e-7


def test_bump_classes():
    """Property: class flags follow the support and the values at the walls."""
    a, b, c = bump_g("interior_bump"), bump_g("right_plateau"), bump_g("full_smooth")
    assert a.interior and a.vanishes_near_right and a.plateau
    assert not b.interior and not b.vanishes_near_right and b.plateau
    assert b.at_one == pytest.approx(float(b(np.array(1.0))))
    assert not c.interior and c.vanishes_near_right
    assert c.at_minus_one == pytest.approx(float(c(np.array(-1.0))))


@pytest.mark.parametrize("bad", [lambda: bump_g("interior_bump", m=0.8, r=0.3),
                                 lambda: bump_g("interior_bump", r=0.0),
                                 lambda: bump_g("right_plateau", a=0.6, w=0.5),
                                 lambda: bump_g("full_smooth", r=2.5)])
def test_support_errors(bad):
    """Property: supports that reach the forbidden wall raise SupportError."""
    with pytest.raises(SupportError):
        bad()


@pytest.mark.parametrize("case,direction,kind", [("DD", "backward", "right_plateau"),
                                                 ("ND", "backward", "right_plateau"),
                                                 ("DD", "forward", "full_smooth")])
def test_function_class_errors(case, direction, kind):
    """Property: a test function outside the required class is refused."""
    grid = Grid(15)
    tab = build_table(Stable(1.5), grid.h, grid.n + 3)
    with pytest.raises(FunctionClassError):
        build_fh(case, direction, bump_g(kind), grid, tab, sym=Stable(1.5))


@pytest.mark.parametrize("case,direction", [("DD", "backward"), ("NN", "backward"), ("DN", "forward")])
def test_fh_tends_to_f(case, direction):
    """Property: ||f_h - f|| decreases along the ladder."""
    out = convergence_study(ConvergenceStudy(case, direction, ladder=(15, 31, 63, 127)), workers=1)
    fe = [r.fh_error for r in out.rows]
    assert all(a > b for a, b in zip(fe, fe[1:])), fe
    assert out.monotone


def test_study_validation_and_csv():
    """Property: ladders must refine by powers of two; the CSV has one header line."""
    for lad in [(15,), (31, 15), (15, 47), (15, 23)]:
        with pytest.raises(ValueError):
            ConvergenceStudy("DD", ladder=lad)
    with pytest.raises(ValueError):
        ConvergenceStudy("DD", direction="sideways")
    with pytest.raises(ValueError):
        ConvergenceStudy("DD", norm="l2")
    s = ConvergenceStudy("nn", "forward", ladder=(15, 63))
    assert s.case == "NN" and s.norm == "l1" and s.g.interior
    csv = convergence_study(ConvergenceStudy("DD", ladder=(15, 31)), workers=1).to_csv().strip().split("\n")
    assert csv[0] == "case,direction,n,h,norm,error,predicted_rate,fitted_slope" and len(csv) == 3


@pytest.mark.parametrize("case,direction,expected", [
    ("DD", "backward", 0.5), ("ND", "backward", 0.5), ("NN", "forward", 1.0),
    ("N*N", "forward", 0.5), ("DN", "forward", 1.0),
])
def test_predicted_slopes_stable(case, direction, expected):
    """Property: for psi(xi) = xi^1.5 the rate exponents are 2 - alpha, alpha - 1 or 1."""
    assert predicted_slope(case, direction, Stable(1.5), (15, 31, 63)) == pytest.approx(expected, abs=1e-12)


def test_predicted_slope_tempered_is_finite():
    """Property: tempered rates give a finite slope between the stable and the smooth limits."""
    s = predicted_slope("DD", "backward", TemperedStable(1.5, 1.0), (15, 31, 63, 127))
    assert 0.3 < s < 1.0


def test_boundary_functional():
    """Property: the functional sums G^{psi-1}_j u_j and reads only the lambda = 0 fiber."""
    grid = Grid(15)
    tab = build_table(Stable(1.5), grid.h, grid.n + 3)
    u = GridFunction(grid, 0.0, np.ones(grid.size))
    assert boundary_functional(u, tab) == pytest.approx(tab.gpsi_m1[: grid.size].sum(), rel=1e-14)
    with pytest.raises(ValueError):
        boundary_functional(GridFunction(grid, 0.5, np.ones(grid.size)), tab)
