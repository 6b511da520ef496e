"""Generator convergence rates for every wall pair and direction.

Prints one line per (case, direction) with the fitted log-log slope of
||G_h f_h - G f|| next to the slope of the predicted rate, and optionally
writes all rows as CSV.

    python3 scripts/rate_table.py --family stable --alpha 1.5 --out rates.csv
"""

import argparse
from dataclasses import dataclass, field
from typing import Optional, Tuple

from grunwald import CASES, ConvergenceStudy, convergence_study, symbol_from_config


@dataclass
class RateTableConfig:
    family: str = "stable"
    alpha: float = 1.5
    beta: float = 1.0
    ladder: Tuple[int, ...] = (63, 127, 255, 511, 1023)
    directions: Tuple[str, ...] = ("backward", "forward")
    cases: Tuple[str, ...] = field(default_factory=lambda: tuple(c.name for c in CASES))
    c: float = 2.0
    out: Optional[str] = None


def run(cfg: RateTableConfig):
    sym = symbol_from_config({"family": cfg.family, "alpha": cfg.alpha, "beta": cfg.beta})
    results = []
    for direction in cfg.directions:
        for case in cfg.cases:
            res = convergence_study(ConvergenceStudy(case, direction, symbol=sym, ladder=cfg.ladder, c=cfg.c))
            results.append(res)
            print(f"{case:4s} {direction:8s} {res.norm:3s} slope {res.slope:6.3f} "
                  f"predicted {res.predicted:6.3f} monotone {res.monotone}", flush=True)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            for k, res in enumerate(results):
                text = res.to_csv()
                fh.write(text if k == 0 else text.split("\n", 1)[1])
    return results


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--family", default="stable", choices=["stable", "tempered", "truncated"])
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--ladder", default="63,127,255,511,1023")
    p.add_argument("--direction", choices=["backward", "forward", "both"], default="both")
    p.add_argument("--out")
    a = p.parse_args()
    dirs = ("backward", "forward") if a.direction == "both" else (a.direction,)
    run(RateTableConfig(a.family, a.alpha, a.beta, tuple(int(v) for v in a.ladder.split(",")), dirs, out=a.out))
