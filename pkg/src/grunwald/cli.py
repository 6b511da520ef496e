"""Command-line entry point: ``grunwald <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 coefficient
identity violation, 3 rate-matrix violation, 4 statistical mismatch.
Every output is either CSV with a single header line or JSON carrying the
same rows inside a metadata envelope.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence

import click
import numpy as np

from . import __version__
from .coeffs import IdentityViolation, build_table, verify_identities
from .generator import BoundaryCase, RateMatrixViolation
from .grid import Grid, project
from .harness import ConvergenceStudy, bump_g, convergence_study
from .operators import ScaleFunction, post_widder_k, resolvent_reference
from .semigroup import expm_uniformized, fiber_matrix, resolvent_solve
from .simulate import chain_spec, mc_expectation, modify_path, simulate_free
from .symbol import SymbolDomainError, symbol_from_config

EXIT_OK, EXIT_USAGE, EXIT_IDENTITY, EXIT_MATRIX, EXIT_STAT = 0, 1, 2, 3, 4
Z_LIMIT = 4.0


class StatisticalMismatch(RuntimeError):
    """Monte Carlo and matrix values differ by more than Z_LIMIT standard errors."""


@dataclass
class RunConfig:
    """Resolved options of one invocation (echoed in JSON metadata)."""

    command: str
    symbol: dict
    case: Optional[str] = None
    direction: Optional[str] = None
    n: Optional[int] = None
    t: Optional[float] = None
    beta: Optional[float] = None
    paths: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    fmt: str = "csv"
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.case is not None:
            self.case = BoundaryCase.parse(self.case).name
        if self.direction is not None and self.direction not in ("backward", "forward"):
            raise click.UsageError("direction must be backward or forward")
        if self.n is not None and self.n < 3:
            raise click.UsageError("n must be >= 3")
        if self.t is not None and not (np.isfinite(self.t) and self.t >= 0):
            raise click.UsageError("t must be finite and >= 0")
        if self.beta is not None and not self.beta > 0:
            raise click.UsageError("beta must be > 0")
        if self.paths is not None and self.paths < 2:
            raise click.UsageError("need at least two paths")
        return self


def _emit(cfg: RunConfig, columns: Sequence[str], rows: Iterable[Sequence], meta: Optional[dict] = None):
    rows = [list(r) for r in rows]
    if cfg.fmt == "json":
        env = {"metadata": {"version": __version__, **asdict(cfg), **(meta or {})},
               "columns": list(columns), "rows": rows}
        text = json.dumps(env, indent=1, default=float) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _symbol(family, alpha, temper, c, K) -> dict:
    return {"family": family, "alpha": alpha, "beta": temper, "c": c, "K": K}


def _make_symbol(cfg: RunConfig):
    try:
        return symbol_from_config(cfg.symbol)
    except SymbolDomainError as e:
        raise click.UsageError(f"symbol configuration: {e}")


def symbol_options(f):
    opts = [
        click.option("--family", type=click.Choice(["stable", "tempered", "truncated"]), default="stable",
                     show_default=True),
        click.option("--alpha", type=float, default=1.5, show_default=True),
        click.option("--temper", type=float, default=1.0, show_default=True, help="tempering rate"),
        click.option("--c", "c_", type=float, default=None, help="tempered density constant"),
        click.option("--K", "K", type=float, default=1.0, show_default=True, help="truncation range"),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def output_options(f):
    f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="output file (stdout if omitted)")(f)
    return f


_CASE = click.Choice(["DD", "DN", "ND", "NN", "N*D", "N*N", "NSD", "NSN"], case_sensitive=False)


def _init_function(kind: str):
    if kind == "bump":
        return bump_g("interior_bump")
    if kind == "one":
        return lambda x: np.ones_like(np.asarray(x, float))
    if kind == "middle-third":
        return lambda x: ((np.asarray(x) >= -1 / 3) & (np.asarray(x) < 1 / 3)).astype(float)
    raise click.UsageError(f"unknown initial data {kind!r}")


class _ExitCodeGroup(click.Group):
    """Maps exceptions to the documented exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.Exit as e:
            sys.exit(e.exit_code)
        except click.exceptions.Abort:
            click.echo("aborted", err=True)
            sys.exit(EXIT_USAGE)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except IdentityViolation as e:
            click.echo(f"identity violation: {e}", err=True)
            sys.exit(EXIT_IDENTITY)
        except RateMatrixViolation as e:
            click.echo(f"rate matrix violation: {e}", err=True)
            sys.exit(EXIT_MATRIX)
        except StatisticalMismatch as e:
            click.echo(f"statistical mismatch: {e}", err=True)
            sys.exit(EXIT_STAT)
        except (ValueError, SymbolDomainError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


@click.group(cls=_ExitCodeGroup)
@click.version_option(__version__)
def cli():
    """Grunwald-type generators, semigroups and chains on [-1, 1]."""


@cli.command()
@symbol_options
@click.option("--h", "h", type=float, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--report", type=click.Path(dir_okay=False), default=None, help="identity report (JSON)")
@output_options
def coeffs(family, alpha, temper, c_, K, h, N, tol, report, out, fmt):
    """Coefficient table plus convolution-identity report."""
    if N < 1:
        raise click.UsageError("N must be >= 1")
    if not h > 0:
        raise click.UsageError("h must be > 0")
    cfg = RunConfig("coeffs", _symbol(family, alpha, temper, c_, K), out=out, fmt=fmt,
                    extra={"h": h, "N": N, "tol": tol}).validate()
    sym = _make_symbol(cfg)
    table = build_table(sym, h, N)
    rep = verify_identities(table, tol=tol, raise_on_fail=False)
    text = json.dumps(rep.as_dict(), indent=1)
    if report:
        with open(report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text, err=True)
    _emit(cfg, table.COLUMNS, table.rows(), {"identities": rep.as_dict()})
    if not rep.ok:
        raise IdentityViolation(rep)


@cli.command()
@symbol_options
@click.option("--case", type=_CASE, required=True)
@click.option("--direction", type=click.Choice(["backward", "forward"]), default="backward", show_default=True)
@click.option("--n", type=int, default=63, show_default=True)
@click.option("--t", type=float, default=None)
@click.option("--init", "init", type=click.Choice(["bump", "one", "middle-third"]), default="bump", show_default=True)
@click.option("--normalize", is_flag=True, help="scale forward initial data to unit mass")
@click.option("--resolvent", is_flag=True, help="solve (beta - G_h) u = g instead of evolving")
@click.option("--beta", type=float, default=None)
@click.option("--dump-matrix", type=click.Path(dir_okay=False), default=None)
@output_options
def solve(family, alpha, temper, c_, K, case, direction, n, t, init, normalize, resolvent, beta, dump_matrix,
          out, fmt):
    """Evolve (or resolve) initial data with the interpolated generator on the lambda = 0 fiber."""
    if resolvent and beta is None:
        raise click.UsageError("--resolvent needs --beta")
    if not resolvent and t is None:
        raise click.UsageError("give --t (or --resolvent --beta)")
    cfg = RunConfig("solve", _symbol(family, alpha, temper, c_, K), case=case, direction=direction, n=n,
                    t=t, beta=beta, out=out, fmt=fmt,
                    extra={"init": init, "normalize": normalize, "resolvent": resolvent}).validate()
    sym = _make_symbol(cfg)
    grid = Grid(n)
    table = build_table(sym, grid.h, n + 2)
    M = fiber_matrix(cfg.case, table, grid, 0.0, direction, check=True)
    if dump_matrix:
        np.savetxt(dump_matrix, M, delimiter=",", header=",".join(f"c{j}" for j in range(grid.size)),
                   comments="", fmt="%.17g")
    v0 = project(grid, _init_function(init), 0.0)
    mass_in = grid.h * v0.sum()
    if normalize and direction == "forward":
        if mass_in == 0:
            raise click.UsageError("initial data has zero mass")
        v0 = v0 / mass_in
    if resolvent:
        vals = resolvent_solve(cfg.case, direction, grid, lambda x: np.interp(x, grid.points(0.0), v0), beta,
                               table=table).values
    else:
        vals = expm_uniformized(M, t, v0)
    meta = {"mass_in": float(grid.h * v0.sum()), "mass_out": float(grid.h * vals.sum())}
    _emit(cfg, ("x", "value"), zip(grid.points(0.0).tolist(), vals.tolist()), meta)


@cli.command("resolvent-reference")
@symbol_options
@click.option("--case", type=_CASE, required=True)
@click.option("--direction", type=click.Choice(["backward", "forward"]), default="backward", show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--n", type=int, default=63, show_default=True, help="report on the lambda = 0 grid of this n")
@click.option("--route", type=click.Choice(["series", "iterate"]), default="series", show_default=True)
@output_options
def resolvent_reference_cmd(family, alpha, temper, c_, K, case, direction, beta, n, route, out, fmt):
    """Continuous resolvent of the bump from scale-function formulas."""
    cfg = RunConfig("resolvent-reference", _symbol(family, alpha, temper, c_, K), case=case,
                    direction=direction, n=n, beta=beta, out=out, fmt=fmt, extra={"route": route}).validate()
    sym = _make_symbol(cfg)
    g = bump_g("interior_bump")
    x = Grid(n).points(0.0)
    vals = resolvent_reference(g, beta, cfg.case, direction, sym, x=x, route=route, breaks=g.breaks)
    _emit(cfg, ("x", "value"), zip(x.tolist(), np.asarray(vals, float).tolist()))


@cli.command()
@symbol_options
@click.option("--i", "i", type=click.IntRange(-1, 1), default=0, show_default=True)
@click.option("--side", type=click.Choice(["+", "-"]), default="+", show_default=True)
@click.option("--points", type=int, default=21, show_default=True)
@click.option("--m", type=int, default=0, help="also report the Post-Widder value with m steps")
@output_options
def scale(family, alpha, temper, c_, K, i, side, points, m, out, fmt):
    """Scale function k_i^+/- on a uniform set of points."""
    if points < 2:
        raise click.UsageError("need at least two points")
    cfg = RunConfig("scale", _symbol(family, alpha, temper, c_, K), out=out, fmt=fmt,
                    extra={"i": i, "side": side, "m": m}).validate()
    sym = _make_symbol(cfg)
    x = np.linspace(-1.0, 1.0, points)
    vals = np.asarray(ScaleFunction(sym, i, side)(x), float)
    if m:
        y = (x + 1.0) if side == "+" else (1.0 - x)
        pw = [post_widder_k(sym, i, yy - 1.0, m) if yy > 0 else 0.0 for yy in y]
        _emit(cfg, ("x", "value", "post_widder"), zip(x.tolist(), vals.tolist(), pw))
    else:
        _emit(cfg, ("x", "value"), zip(x.tolist(), vals.tolist()))


@cli.command()
@symbol_options
@click.option("--case", type=_CASE, required=True)
@click.option("--n", type=int, default=15, show_default=True)
@click.option("--paths", type=int, default=100_000, show_default=True)
@click.option("--t", type=float, default=0.5, show_default=True)
@click.option("--x0", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--f", "fname", type=click.Choice(["middle-third", "one"]), default="middle-third", show_default=True)
@click.option("--compare", is_flag=True, help="append the matrix value and the z-score")
@click.option("--dump-paths", type=click.Path(dir_okay=False), default=None)
@click.option("--dump-count", type=int, default=10, show_default=True)
@output_options
def simulate(family, alpha, temper, c_, K, case, n, paths, t, x0, seed, fname, compare, dump_paths, dump_count,
             out, fmt):
    """Monte Carlo estimate of E f(Y_t) for the boundary-modified chain."""
    cfg = RunConfig("simulate", _symbol(family, alpha, temper, c_, K), case=case, n=n, t=t, paths=paths,
                    seed=seed, out=out, fmt=fmt, extra={"x0": x0, "f": fname}).validate()
    sym = _make_symbol(cfg)
    grid = Grid(n)
    f = _init_function(fname)
    spec = chain_spec(sym, grid.h)
    mean, se = mc_expectation(cfg.case, f, x0, t, paths, seed, spec=spec, n=n)
    if dump_paths:
        with open(dump_paths, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("path_id", "time", "state", "alive"))
            for p in range(dump_count):
                mp = modify_path(simulate_free(spec, x0, t, seed * 1_000_003 + p), cfg.case, n)
                for tt, s, a in zip(mp.times, mp.states, mp.alive):
                    w.writerow((p, repr(float(tt)), repr(float(s)), int(a)))
    cols, row = ["mean", "stderr"], [mean, se]
    z = None
    if compare:
        table = build_table(sym, grid.h, n + 2)
        M = fiber_matrix(cfg.case, table, grid, 0.0, "backward", check=True)
        k = int(round((x0 + 1.0) / grid.h))
        val = float(expm_uniformized(M, t, project(grid, f, 0.0))[k])
        z = (mean - val) / se if se > 0 else (0.0 if abs(mean - val) < 1e-12 else float("inf"))
        cols += ["matrix", "z"]
        row += [val, z]
    _emit(cfg, cols, [row])
    if z is not None and abs(z) > Z_LIMIT:
        raise StatisticalMismatch(f"|z| = {abs(z):.2f} > {Z_LIMIT}")


@cli.command()
@symbol_options
@click.option("--case", type=_CASE, required=True)
@click.option("--direction", type=click.Choice(["backward", "forward"]), default="backward", show_default=True)
@click.option("--ladder", type=str, default="15,31,63,127,255", show_default=True)
@click.option("--cconst", type=float, default=2.0, show_default=True, help="free domain constant")
@output_options
def study(family, alpha, temper, c_, K, case, direction, ladder, cconst, out, fmt):
    """Generator convergence study with a least-squares rate fit."""
    try:
        lad = tuple(int(v) for v in ladder.split(","))
    except ValueError:
        raise click.UsageError("ladder must be a comma separated list of integers")
    cfg = RunConfig("study", _symbol(family, alpha, temper, c_, K), case=case, direction=direction,
                    out=out, fmt=fmt, extra={"ladder": list(lad), "c": cconst}).validate()
    sym = _make_symbol(cfg)
    st = ConvergenceStudy(cfg.case, direction, symbol=sym, ladder=lad, c=cconst)
    res = convergence_study(st)
    rows = [(res.case, res.direction, r.n, r.h, res.norm, r.error, res.predicted, res.slope) for r in res.rows]
    _emit(cfg, ("case", "direction", "n", "h", "norm", "error", "predicted_rate", "fitted_slope"), rows,
          {"g": st.g.describe(), "reference_error": res.reference_error, "monotone": res.monotone})


def main(argv: Optional[List[str]] = None):
    cli.main(args=argv, prog_name="grunwald")


if __name__ == "__main__":  # pragma: no cover
    main()
