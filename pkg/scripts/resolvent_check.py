"""Discrete resolvents against the continuous reference.

For each wall pair the sup distance between (beta - G_h)^(-1) g on the
lambda = 0 grid and the scale-function resolvent is printed along an
n-ladder, together with the boundary functional sum_j G^{psi-1}_j u_j.

    python3 scripts/resolvent_check.py --beta 1.0
"""

import argparse
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from grunwald import CASES, Grid, Stable, build_table, bump_g, resolvent_reference, resolvent_solve
from grunwald.harness import boundary_functional


@dataclass
class ResolventCheckConfig:
    alpha: float = 1.5
    beta: float = 1.0
    ladder: Tuple[int, ...] = (31, 63, 127, 255)
    direction: str = "backward"
    cases: Tuple[str, ...] = tuple(c.name for c in CASES)


def run(cfg: ResolventCheckConfig):
    sym, g = Stable(cfg.alpha), bump_g("interior_bump")
    out = {}
    for case in cfg.cases:
        errs, funcs = [], []
        for n in cfg.ladder:
            grid = Grid(n)
            table = build_table(sym, grid.h, n + 2)
            u = resolvent_solve(case, cfg.direction, grid, g, cfg.beta, table=table)
            x = grid.points(0.0)
            ref = resolvent_reference(g, cfg.beta, case, cfg.direction, sym, x=x, route="series", breaks=g.breaks)
            errs.append(float(np.max(np.abs(u.values - ref)[1:])))
            funcs.append(boundary_functional(u, table))
        out[case] = (errs, funcs)
        print(f"{case:4s} sup err " + " ".join(f"{e:.2e}" for e in errs)
              + "   functional " + " ".join(f"{f:+.2e}" for f in funcs), flush=True)
    return out


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--direction", choices=["backward", "forward"], default="backward")
    p.add_argument("--ladder", default="31,63,127,255")
    a = p.parse_args()
    run(ResolventCheckConfig(a.alpha, a.beta, tuple(int(v) for v in a.ladder.split(",")), a.direction))
