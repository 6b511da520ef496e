"""Monte Carlo chain: jump law, single paths and marginal estimates."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grunwald import Stable, TemperedStable, build_table, chain_spec, mc_expectation, modify_path, simulate_free
from grunwald.simulate import mc_marginal

N = 15
H = 2.0 / (N + 1)
SPEC = chain_spec(Stable(1.5), H, J=1 << 12)
CASES = ["DD", "DN", "ND", "NN", "N*D", "N*N"]


@pytest.mark.parametrize("sym", [Stable(1.5), Stable(1.2), TemperedStable(1.5, 1.0)], ids=lambda s: s.family + str(s.alpha))
def test_jump_law_is_a_distribution(sym):
    """Property: p_0 = G^psi_0 / q, p_1 = 0 and table mass plus tail is one."""
    spec = chain_spec(sym, 0.05, J=1 << 12)
    tab = build_table(sym, 0.05, 4)
    assert spec.q == pytest.approx(-tab.gpsi[1], rel=1e-13)
    assert spec.p_down == pytest.approx(tab.gpsi[0] / spec.q, rel=1e-13)
    assert spec.p[1] == 0.0 and spec.p.min() >= 0.0
    assert spec.p.sum() + spec.tail == pytest.approx(1.0, abs=1e-9)
    cdf = spec.up_cdf()
    assert np.all(np.diff(cdf) >= 0) and cdf[-1] == pytest.approx(1.0, abs=1e-12)


def test_chain_spec_from_table_matches_symbol():
    """Property: building from a table or from the symbol gives the same law."""
    tab = build_table(Stable(1.5), H, 1 << 10)
    a, b = chain_spec(tab), chain_spec(Stable(1.5), H, J=1 << 10)
    assert a.q == pytest.approx(b.q, rel=1e-13)
    assert np.allclose(a.p, b.p, rtol=1e-12, atol=0)


@pytest.mark.parametrize("K", [10, 1000])
def test_ladder_law_sums_to_one(K):
    """Property: ladder-height probabilities are non-negative and sum to one with the remainder."""
    law = SPEC.ladder_law(K)
    assert law.size == K + 1 and law.min() >= 0.0
    assert law.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(law[:-1]) <= 0)


@given(seed=st.integers(min_value=0, max_value=2**31), case=st.sampled_from(CASES))
@settings(max_examples=40, deadline=None)
def test_modified_paths(seed, case):
    """Property: dead paths stay dead, live states stay in [-1, 1] and observed time is at most T."""
    T = 0.5
    free = simulate_free(SPEC, 0.0, T, seed)
    again = simulate_free(SPEC, 0.0, T, seed)
    assert np.array_equal(free.cells, again.cells) and np.array_equal(free.times, again.times)
    assert np.all(np.diff(free.times) > 0) and free.times[-1] <= T
    m = modify_path(free, case, N)
    assert m.observed <= T + 1e-12
    assert np.all(np.diff(m.times) >= 0)
    if m.alive.size:
        dead = np.flatnonzero(~m.alive)
        assert dead.size <= 1 and (dead.size == 0 or dead[0] == m.alive.size - 1)
        live = m.states[m.alive]
        assert live.min() >= -1.0 - 1e-12 and live.max() <= 1.0 - H + 1e-12
    if case in ("NN", "N*N"):
        assert m.alive.all()
    s, a = m.state_at(0.0)
    assert s == pytest.approx(0.0) and a
    assert m.state_at(T + 1.0) == (None, False)


def test_reflection_keeps_left_floor():
    """Property: the N* rule never goes below -1 + h."""
    for seed in range(20):
        m = modify_path(simulate_free(SPEC, -1.0 + H, 2.0, seed), "N*N", N)
        assert m.cells.min() >= 1


@pytest.mark.parametrize("case", CASES)
def test_mc_deterministic_per_seed(case):
    """Property: equal seeds give identical estimates; different seeds differ."""
    a = mc_expectation(case, np.cos, 0.0, 0.2, 2000, 7, spec=SPEC, n=N)
    b = mc_expectation(case, np.cos, 0.0, 0.2, 2000, 7, spec=SPEC, n=N)
    c = mc_expectation(case, np.cos, 0.0, 0.2, 2000, 8, spec=SPEC, n=N)
    assert a == b and a != c


@pytest.mark.parametrize("case", ["NN", "N*N"])
def test_conservative_cases_keep_mass(case):
    """Property: with no killing wall E f(Y_t) = 1 for f = 1 and the error estimate is zero."""
    mean, se = mc_expectation(case, lambda x: np.ones_like(x), 0.0, 1.0, 3000, 3, spec=SPEC, n=N)
    assert mean == 1.0 and se == 0.0


def test_killing_loses_mass():
    """Property: with two killing walls the survival probability decreases in t."""
    surv = [mc_expectation("DD", lambda x: np.ones_like(x), 0.0, t, 4000, 5, spec=SPEC, n=N)[0]
            for t in (0.05, 0.5, 2.0)]
    assert 1.0 > surv[0] > surv[1] > surv[2] > 0.0


def test_small_time_limit():
    """Property: as t -> 0 the estimate approaches f(x0) (no event before t has probability e^(-qt))."""
    t = 1e-3
    mean, _ = mc_expectation("DD", np.cos, 0.25, t, 4000, 9, spec=SPEC, n=N)
    assert abs(mean - np.cos(0.25)) <= 2.0 * (1.0 - np.exp(-SPEC.q * t)) + 1e-12


def test_marginal_cells_in_range():
    """Property: final cells of live paths lie on 1..n for reflecting and Neumann walls."""
    for case in ("ND", "NN", "N*N"):
        k, alive, _ = mc_marginal(case, SPEC, N, 0.0, 0.5, 3000, 1)
        assert k[alive].min() >= 1 and k[alive].max() <= N


@pytest.mark.parametrize("bad", [
    lambda: simulate_free(SPEC, 0.0, 0.0, 1),
    lambda: simulate_free(SPEC, 0.01, 1.0, 1),
    lambda: mc_expectation("NN", np.cos, -1.0, 0.5, 100, 1, spec=SPEC, n=N),
    lambda: mc_expectation("DD", np.cos, 0.0, 0.5, 1, 1, spec=SPEC, n=N),
    lambda: mc_expectation("DD", np.cos, 0.0, 0.5, 100, 1),
    lambda: chain_spec(Stable(1.5)),
])
def test_invalid_requests(bad):
    """Property: off-grid or outside starting points, missing laws and bad sizes are rejected."""
    with pytest.raises(ValueError):
        bad()
