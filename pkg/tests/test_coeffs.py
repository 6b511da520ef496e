"""Grunwald coefficients: sign patterns, identities, routes and serialisation."""

import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grunwald import Custom, IdentityViolation, Stable, SymbolDomainError, TemperedStable, TruncatedStable, build_table
from grunwald.coeffs import grunwald_psi, reciprocal_series, verify_identities

alphas = st.floats(min_value=1.05, max_value=1.95)
steps = st.floats(min_value=1e-3, max_value=0.5)
betas = st.floats(min_value=0.05, max_value=5.0)


@given(alpha=alphas, h=steps)
@settings(max_examples=40, deadline=None)
def test_stable_sign_pattern(alpha, h):
    """Property: G^psi_0 > 0, G^psi_1 < 0 and G^psi_j > 0 for j >= 2."""
    g = build_table(Stable(alpha), h, 300).gpsi
    assert g[0] > 0 and g[1] < 0
    assert np.all(g[2:] > 0)


@given(alpha=alphas, h=steps, beta=betas)
@settings(max_examples=40, deadline=None)
def test_tempered_identities_hold(alpha, h, beta):
    """Property: the convolution identities and sign checks pass for tempered symbols."""
    tab = build_table(TemperedStable(alpha, beta), h, 200)
    rep = verify_identities(tab, tol=1e-10, raise_on_fail=False)
    assert rep.ok, rep.as_dict()


@given(alpha=alphas, h=steps, K=st.floats(min_value=0.2, max_value=5.0))
@settings(max_examples=30, deadline=None)
def test_truncated_identities_hold(alpha, h, K):
    """Property: the convolution identities and sign checks pass for truncated symbols."""
    tab = build_table(TruncatedStable(alpha, K), h, 200)
    assert verify_identities(tab, tol=1e-10, raise_on_fail=False).ok


@given(alpha=alphas, h=steps)
@settings(max_examples=40, deadline=None)
def test_partial_sums_tend_to_zero(alpha, h):
    """Property: sum_{m<=j} G^psi_m is negative for j >= 1 and rises to 0, so sum_j G^psi_j = 0."""
    tab = build_table(Stable(alpha), h, 2000)
    s = tab.gpsi_m1 / h
    assert s[0] > 0
    assert np.all(s[1:] < 0)
    assert np.all(np.diff(s[1:]) > 0)
    assert abs(s[-1]) < 0.05 * abs(s[1])


@pytest.mark.parametrize("sym", [Stable(1.5), Stable(1.8), TemperedStable(1.5, 1.0), TemperedStable(1.3, 0.2)],
                         ids=lambda s: str(s.describe()))
@pytest.mark.parametrize("h", [0.1, 0.01])
def test_closed_form_and_moment_routes_agree(sym, h):
    """Property: the binomial fast path and the generic moment route give the same coefficients."""
    a = grunwald_psi(sym, h, 150, route="auto")
    b = grunwald_psi(sym, h, 150, route="moments")
    assert np.allclose(a, b, rtol=1e-11, atol=0)


@given(a=st.lists(st.floats(min_value=-2, max_value=2), min_size=1, max_size=30),
       a0=st.floats(min_value=0.5, max_value=3))
@settings(max_examples=60, deadline=None)
def test_reciprocal_series_inverts(a, a0):
    """Property: (A * 1/A) is the unit sequence up to the truncation order."""
    arr = np.array([a0] + a)
    r = reciprocal_series(arr)
    prod = np.convolve(arr, r)[: arr.size]
    unit = np.zeros(arr.size)
    unit[0] = 1.0
    assert np.allclose(prod, unit, atol=1e-9 * max(1.0, np.max(np.abs(r))))


@pytest.mark.parametrize("i", [1, 0, -1])
def test_k_coefficients_positive(i):
    """Property: the G^{k_i} coefficients for i = 1, 0, -1 are positive."""
    for sym in (Stable(1.5), TemperedStable(1.5, 2.0), TruncatedStable(1.5, 0.5)):
        assert np.all(build_table(sym, 0.05, 400).gk[i] > 0)


def test_violation_raises_and_reports():
    """Property: an unattainable tolerance raises IdentityViolation carrying the report."""
    tab = build_table(Stable(1.5), 0.5, 300)
    with pytest.raises(IdentityViolation):
        verify_identities(tab, tol=1e-30)
    rep = verify_identities(tab, tol=1e-30, raise_on_fail=False)
    assert not rep.ok and set(rep.as_dict()) >= {"residuals", "signs", "ok"}


def test_csv_single_header_line():
    """Property: the CSV export has exactly one header line and N+1 rows."""
    tab = build_table(Stable(1.5), 0.1, 12)
    rows = list(csv.reader(io.StringIO(tab.to_csv())))
    assert rows[0] == ["j", "gpsi", "gpsi_m1", "gk1", "gk0", "gkm1", "gkm2"]
    assert len(rows) == 14
    assert float(rows[3][1]) == pytest.approx(tab.gpsi[2], rel=1e-15)


@pytest.mark.parametrize("bad", [
    lambda: build_table(Stable(1.5), 0.0, 10),
    lambda: build_table(Stable(1.5), -0.1, 10),
    lambda: build_table(Custom(psi_fn=lambda x: x**1.5, psi_prime_fn=lambda x: 1.5 * x**0.5,
                               tail_moment_fn=lambda j, s: 1.0, j_max=5), 0.1, 10),
])
def test_invalid_requests(bad):
    """Property: non-positive steps and orders beyond a custom symbol's range are rejected."""
    with pytest.raises(SymbolDomainError):
        bad()
