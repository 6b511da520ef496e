"""Monte Carlo for the free Grunwald chain and its boundary modifications.

The free chain Y^h is compound Poisson: at rate q = -G^psi_1 it jumps by
(j - 1)h with probability G^psi_j / q, j in {0, 2, 3, ...}. Its only
downward move is the single step -h, so the chain cannot skip a level on the
way down.

Boundary rules on the lattice {-1 + k h} (cell index k, 0 <-> -1), matching
the interpolation matrices at lambda = 0:

    D left   the state -1 is alive; the first event there kills the path.
    N left   states <= -1 are outside; the clock is frozen while outside and
             the path re-enters at its first state > -1.
    N* left  down-steps from -1 + h are suppressed (running reflection).
    D right  landing at >= 1 kills.
    N right  states >= 1 are outside; the chain comes back down to exactly
             1 - h with the clock frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .coeffs import CoefficientTable, grunwald_psi
from .generator import BoundaryCase
from .symbol import LevySymbol

__all__ = [
    "ChainSpec",
    "FreePath",
    "ModifiedPath",
    "chain_spec",
    "simulate_free",
    "modify_path",
    "mc_expectation",
    "mc_marginal",
    "block_generator",
    "BLOCK",
]

BLOCK = 8192  # paths per RNG stream
J_TABLE = 1 << 17
EXCURSION_CAP = 20_000


@dataclass(frozen=True)
class ChainSpec:
    """Jump law of the free chain on a lattice of step h."""

    h: float
    q: float
    p: np.ndarray  # p_j = G^psi_j / q for j = 0..J (p_1 = 0)
    tail: float  # probability of j > J
    tail_index: float = 1.5  # Pareto index used to place jumps beyond the table
    _cdf_up: np.ndarray = field(default=None, repr=False)

    @property
    def J(self) -> int:
        return self.p.size - 1

    @property
    def p_down(self) -> float:
        return float(self.p[0])

    def up_cdf(self) -> np.ndarray:
        """CDF of j >= 2 conditioned on an upward jump (table part plus tail)."""
        return self._cdf_up

    def ladder_law(self, K: int) -> np.ndarray:
        """P(H = c), c = 1..K, and the remainder P(H > K) as the last entry.

        H is the first strict ascending ladder height of the walk with steps
        j - 1; for a zero-mean walk that moves down only by unit steps,
        P(H = c) = P(X >= c) / E[X^+].
        """
        px = np.r_[self.p[2:], 0.0]  # P(X = c) for c = 1..J-1
        tail_ge = np.cumsum(px[::-1])[::-1] + self.tail  # P(X >= c)
        ex = self.p_down  # zero mean: E[X^+] = P(X = -1)
        law = tail_ge[:K] / ex
        return np.r_[law, max(0.0, 1.0 - law.sum())]


def chain_spec(sym_or_table, h: Optional[float] = None, J: int = J_TABLE) -> ChainSpec:
    """Jump law from a symbol (and h) or from a coefficient table."""
    if isinstance(sym_or_table, CoefficientTable):
        tab = sym_or_table
        h = tab.h
        g = tab.gpsi
        alpha = float(tab.symbol.get("alpha", 1.5))
        if tab.N < J:
            J = tab.N
    else:
        sym: LevySymbol = sym_or_table
        if h is None:
            raise ValueError("h is required with a symbol")
        if sym.max_order is not None:
            J = min(J, sym.max_order)
        g = grunwald_psi(sym, h, J)
        alpha = float(getattr(sym, "alpha", 1.5))
    g = np.asarray(g[: J + 1], dtype=float)
    q = -g[1]
    p = g / q
    p[1] = 0.0
    # the coefficients sum to zero, so the mass beyond the table is -sum(g)
    tail = max(0.0, -float(np.sum(g)) / q)
    tail = min(tail, max(0.0, 1.0 - p[0] - p[2:].sum()))
    up = np.r_[p[2:], tail]
    cdf = np.cumsum(up) / up.sum()
    return ChainSpec(h=h, q=q, p=p, tail=tail, tail_index=alpha, _cdf_up=cdf)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent stream for paths [block*BLOCK, (block+1)*BLOCK)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(block)])))


def _sample_up(spec: ChainSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    """j >= 2 from the upward law; j > J is placed by a Pareto tail."""
    u = rng.random(m)
    idx = np.searchsorted(spec.up_cdf(), u, side="right")
    j = idx + 2
    beyond = idx >= spec.J - 1
    if np.any(beyond):
        v = rng.random(int(beyond.sum()))
        j = j.astype(np.int64)
        j[beyond] = (spec.J * v ** (-1.0 / spec.tail_index)).astype(np.int64) + 1
    return j.astype(np.int64)


def _sample_jumps(spec: ChainSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    down = rng.random(m) < spec.p_down
    j = np.zeros(m, dtype=np.int64)
    nu = int((~down).sum())
    if nu:
        j[~down] = _sample_up(spec, rng, nu)
    return j


# --------------------------------------------------------------------------
# single paths


@dataclass
class FreePath:
    times: np.ndarray  # event times, starting with 0
    cells: np.ndarray  # lattice offsets from -1 in units of h
    h: float
    T: float

    @property
    def states(self) -> np.ndarray:
        return -1.0 + self.cells * self.h


def _cell_of(x0: float, h: float) -> int:
    k = (x0 + 1.0) / h
    if abs(k - round(k)) > 1e-9:
        raise ValueError("x0 must lie on the lambda = 0 grid")
    return int(round(k))


def simulate_free(spec: ChainSpec, x0: float, T: float, seed: int) -> FreePath:
    """One path of the free chain on [0, T]."""
    if not T > 0:
        raise ValueError("T must be > 0")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0x5EED])))
    k = _cell_of(x0, spec.h)
    times, cells = [0.0], [k]
    t = 0.0
    while True:
        t += rng.exponential(1.0 / spec.q)
        if t > T:
            break
        j = int(_sample_jumps(spec, rng, 1)[0])
        k = k + j - 1
        times.append(t)
        cells.append(k)
    return FreePath(np.array(times), np.array(cells, dtype=np.int64), spec.h, T)


@dataclass
class ModifiedPath:
    times: np.ndarray  # observed (time-changed) clock at each recorded state
    cells: np.ndarray
    alive: np.ndarray
    h: float
    observed: float  # total observed time, A(T)

    @property
    def states(self) -> np.ndarray:
        return -1.0 + self.cells * self.h

    def state_at(self, t: float) -> Tuple[Optional[float], bool]:
        """(state, alive) at observed time t; state is None if t > observed."""
        if t > self.observed + 1e-15:
            return None, False
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.states[i]), bool(self.alive[i])


def modify_path(path: FreePath, case, n: int) -> ModifiedPath:
    """Apply the wall rules of ``case`` to a free path on the grid of n+1 cells.

    Reflection is applied first, then killing, then time deletion.
    """
    case = BoundaryCase.parse(case)
    top = n + 1  # cell of x = 1
    y = path.cells.astype(np.int64)
    if case.left == "N*":
        floor = 1  # -1 + h at lambda = 0
        shift = np.maximum(0, floor - np.minimum.accumulate(y))
        x = y + shift
    else:
        x = y.copy()
    ev = path.times
    seg_len = np.diff(np.r_[ev, path.T])
    out_t, out_c, out_a = [], [], []
    clock = 0.0
    alive = True
    for i in range(len(x)):
        k = int(x[i])
        if not alive:
            break
        if case.left == "D":
            if i > 0 and int(x[i - 1]) == 0:
                alive = False
            elif k < 0:
                alive = False
        if case.right == "D" and k >= top:
            alive = False
        inside = True
        if case.left == "N" and k <= 0:
            inside = False
        if case.right == "N" and k >= top:
            inside = False
        if not alive:
            out_t.append(clock)
            out_c.append(k)
            out_a.append(False)
            break
        if inside:
            if not out_c or out_c[-1] != k or out_t[-1] != clock:
                out_t.append(clock)
                out_c.append(k)
                out_a.append(True)
            clock += seg_len[i]
    return ModifiedPath(np.array(out_t), np.array(out_c, dtype=np.int64), np.array(out_a, bool),
                        path.h, clock)


# --------------------------------------------------------------------------
# vectorised engine


@dataclass
class _Stats:
    excursions: int = 0
    capped: int = 0


class _LandingPool:
    """Excursions below -1 are i.i.d., so their landing cells are drawn in
    large vectorised batches and handed out in order."""

    def __init__(self, spec, rng, stats, batch):
        self.spec, self.rng, self.stats, self.batch = spec, rng, stats, max(int(batch), 64)
        self.buf = np.empty(0, dtype=np.int64)

    def take(self, m: int) -> np.ndarray:
        while self.buf.size < m:
            more = _excursion_landing(self.spec, self.rng, self.batch, self.stats)
            self.buf = np.r_[self.buf, more]
        out, self.buf = self.buf[:m], self.buf[m:]
        return out


def _excursion_landing(spec: ChainSpec, rng, m: int, stats: _Stats, cap: int = EXCURSION_CAP,
                       beyond: int = 1 << 40) -> np.ndarray:
    """Landing cell (>= 1) of walks started at cell 0 and run until they exceed 0.

    Runs of down-steps are skipped geometrically. Walks that have not
    returned after ``cap`` upward jumps, or that sit too deep for the jump
    table, finish with i.i.d. ladder heights.
    """
    k = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    pd = spec.p_down
    it = 0
    while active.size and it < cap:
        it += 1
        runs = rng.geometric(1.0 - pd, active.size) - 1
        j = _sample_up(spec, rng, active.size)
        k[active] += j - 1 - runs
        active = active[k[active] <= 0]
    stats.excursions += m
    if active.size:
        stats.capped += active.size
        law = spec.ladder_law(min(spec.J - 2, 1 << 16))
        cdf = np.cumsum(law)
        cdf /= cdf[-1]
        while active.size:
            c = np.searchsorted(cdf, rng.random(active.size), side="right") + 1
            c = np.where(c > law.size - 1, beyond, c)
            k[active] += c
            active = active[k[active] <= 0]
    return k


def _run_block(spec: ChainSpec, case: BoundaryCase, n: int, k0: int, t: float, m: int,
               rng: np.random.Generator, stats: _Stats) -> Tuple[np.ndarray, np.ndarray]:
    top = n + 1
    k = np.full(m, k0, dtype=np.int64)
    alive = np.ones(m, bool)
    clock = np.zeros(m)
    running = np.arange(m)
    pool = _LandingPool(spec, rng, stats, m // 2) if case.left == "N" else None
    while running.size:
        clock[running] += rng.exponential(1.0 / spec.q, running.size)
        running = running[clock[running] <= t]
        if not running.size:
            break
        j = _sample_jumps(spec, rng, running.size)
        cur = k[running]
        new = cur + j - 1
        dead = np.zeros(running.size, bool)
        if case.left == "D":
            dead |= cur == 0
        elif case.left == "N":
            exc = new <= 0
            if np.any(exc):
                new[exc] = pool.take(int(exc.sum()))
        else:  # reflecting at -1 + h
            new = np.maximum(new, 1)
        over = new >= top
        if case.right == "D":
            dead |= over
        else:
            new = np.where(over, top - 1, new)
        k[running] = np.where(dead, k[running], new)
        alive[running[dead]] = False
        running = running[~dead]
    return k, alive


def mc_marginal(case, spec: ChainSpec, n: int, x0: float, t: float, n_paths: int, seed: int):
    """Final cells (and alive flags) of n_paths modified chains at time t."""
    case = BoundaryCase.parse(case)
    k0 = _cell_of(x0, spec.h)
    if not 0 <= k0 <= n:
        raise ValueError("x0 must be a grid point in [-1, 1)")
    if case.left != "D" and k0 == 0:
        raise ValueError("x0 = -1 is outside the state space for N and N* left walls")
    stats = _Stats()
    ks, al = [], []
    nb = -(-n_paths // BLOCK)
    for b in range(nb):
        m = min(BLOCK, n_paths - b * BLOCK)
        k, a = _run_block(spec, case, n, k0, t, m, block_generator(seed, b), stats)
        ks.append(k)
        al.append(a)
    return np.concatenate(ks), np.concatenate(al), stats


def mc_expectation(case, f: Callable, x0: float, t: float, n_paths: int, seed: int,
                   spec: Optional[ChainSpec] = None, n: Optional[int] = None,
                   sym: Optional[LevySymbol] = None, return_stats: bool = False):
    """(mean, standard error) of f(Y^{h,LR}_t) with f := 0 on killed paths."""
    if spec is None:
        if sym is None or n is None:
            raise ValueError("need a chain spec or a symbol and n")
        spec = chain_spec(sym, 2.0 / (n + 1))
    if n is None:
        n = int(round(2.0 / spec.h)) - 1
    if n_paths < 2:
        raise ValueError("need at least two paths")
    k, alive, stats = mc_marginal(case, spec, n, x0, t, n_paths, seed)
    x = -1.0 + k * spec.h
    vals = np.where(alive, np.asarray(f(np.clip(x, -1, 1)), float) * np.ones_like(x), 0.0)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(n_paths))
    if return_stats:
        return mean, se, stats
    return mean, se
