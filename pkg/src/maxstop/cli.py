"""Command-line surface: solve, value, simulate, diagnose, oracle, convergence.

One static entry point with subcommands; every run is described by a
RunConfig that is embedded verbatim in the artifact header, so any output
file can be reproduced from its own first line.  Configuration precedence
is flags > config file (flat ``key = value`` lines) > defaults, where the
defaults are exactly the module-level defaults of the solver and the
Monte Carlo lab.  The ``--workers`` flag parallelizes Monte Carlo block
evaluation only and never changes output bytes.

Exit codes: 0 success; 2 configuration errors; 3 spec/table mismatches;
4 root-bracketing failures; 5 tolerance breaches.  Failures print a
machine-readable JSON error record to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .dp import compare_bands, solve_dp
from .errors import ConfigError, MaxstopError, MismatchError
from .mc import StoppingRule, regret_scan, simulate
from .problem import ProblemSpec
from .quadrature import backend_name
from .solver import BoundaryTable, SolverConfig, refine_convergence, solve_boundaries
from .value import diagnostics, value_at
from .artifacts import (
    format_number,
    read_boundary_csv,
    write_artifact,
    write_boundary_csv,
    write_regret_csv,
    write_value_csv,
)

__all__ = ["RunConfig", "run", "main"]

COMMANDS = ("solve", "value", "simulate", "diagnose", "oracle", "convergence")

_DEFAULTS = {
    "mu": 0.0,
    "horizon": 1.0,
    "steps": 200,
    "quad_order": 32,
    "root_tol": 1e-8,
    "paths": 1_000_000,
    "dt": None,  # resolved to 1e-3 * horizon
    "seed": 0,
    "workers": 1,
    "out": None,
    "table": None,
}

_TYPES = {
    "mu": float,
    "horizon": float,
    "steps": int,
    "quad_order": int,
    "root_tol": float,
    "paths": int,
    "dt": float,
    "seed": int,
    "workers": int,
    "out": str,
    "table": str,
}


@dataclass(frozen=True)
class RunConfig:
    """Complete, serializable description of one CLI run."""

    command: str
    mu: float
    horizon: float
    steps: int
    quad_order: int
    root_tol: float
    paths: int
    dt: float
    seed: int
    workers: int
    out: str | None
    table: str | None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def spec(self) -> ProblemSpec:
        return ProblemSpec(mu=self.mu, T=self.horizon)

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(
            n_steps=self.steps, quad_order=self.quad_order, root_tol=self.root_tol
        )

    def meta(self) -> dict:
        out = asdict(self)
        out["version"] = __version__
        out["backend"] = backend_name()
        return out


class _Parser(argparse.ArgumentParser):
    """Argparse that reports errors through the package error channel."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="maxstop",
        description="Optimal stopping of a drifted Brownian motion near its maximum.",
    )
    p.add_argument("command", choices=COMMANDS, help="what to run")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--mu", type=float, help="drift of the Brownian motion")
    p.add_argument("--horizon", type=float, help="time horizon T")
    p.add_argument("--steps", type=int, help="time-grid steps for the solver")
    p.add_argument("--quad-order", dest="quad_order", type=int,
                   help="Gauss-Legendre nodes per quadrature panel")
    p.add_argument("--root-tol", dest="root_tol", type=float,
                   help="boundary root tolerance")
    p.add_argument("--paths", type=int, help="Monte Carlo path count")
    p.add_argument("--dt", type=float, help="Monte Carlo time step")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("--workers", type=int, help="parallel workers (never changes bytes)")
    p.add_argument("--out", help="output artifact path")
    p.add_argument("--table", help="boundary artifact to reuse instead of solving")
    return p


def _load_config_file(path: str) -> dict:
    values = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _TYPES[key](val.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = _load_config_file(args.config) if args.config else {}
    merged = {}
    for key, default in _DEFAULTS.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else file_values.get(key, default)
    if merged["dt"] is None:
        merged["dt"] = 1e-3 * merged["horizon"]
    return RunConfig(command=args.command, **merged)


def _require_out(config: RunConfig) -> str:
    if not config.out:
        raise ConfigError(f"command {config.command!r} needs --out")
    return config.out


def _obtain_table(config: RunConfig) -> BoundaryTable:
    if config.table:
        meta, grid, b1, b2 = read_boundary_csv(config.table)
        spec = ProblemSpec(mu=float(meta["mu"]), T=float(meta["horizon"]))
        if spec != config.spec:
            raise MismatchError(
                f"table {config.table} was solved for {spec}, run asks for {config.spec}"
            )
        t_star = float(meta["t_star"]) if meta.get("t_star") is not None else 0.0
        z_star = meta.get("z_star")
        return BoundaryTable(spec, grid, b1, b2, t_star,
                             None if z_star is None else float(z_star))
    return solve_boundaries(config.spec, config.solver)


def _cmd_solve(config: RunConfig) -> None:
    out = _require_out(config)
    table = solve_boundaries(config.spec, config.solver)
    meta = config.meta()
    meta["t_star"] = table.t_star
    meta["z_star"] = table.z_star
    write_boundary_csv(out, table, meta)


def _cmd_value(config: RunConfig) -> None:
    out = _require_out(config)
    spec = config.spec
    table = _obtain_table(config)
    finite = table.b2[np.isfinite(table.b2)]
    top = max(3.0, 1.5 * np.nanmax(table.b1), 1.5 * finite.max() if finite.size else 0.0)
    times = np.linspace(0.0, spec.T, 11)
    levels = np.linspace(0.0, top, 13)
    points = []
    for t in times:
        for x in levels:
            points.append((float(t), float(x), value_at(spec, table, float(t), float(x))))
    write_value_csv(out, points, config.meta())


def _default_rivals(spec: ProblemSpec) -> list:
    scale = np.sqrt(spec.T)
    rules = [StoppingRule.threshold(a * scale) for a in (0.6, 0.8, 1.0, 1.4)]
    rules.append(StoppingRule.constant_time(0.0))
    rules.append(StoppingRule.never())
    return rules


def _cmd_simulate(config: RunConfig) -> None:
    out = _require_out(config)
    spec = config.spec
    table = _obtain_table(config)
    batch = simulate(spec, config.dt, config.paths, config.seed)
    table_rows = regret_scan(spec, table, _default_rivals(spec), batch,
                             workers=config.workers)
    write_regret_csv(out, table_rows.rows, config.meta())


def _cmd_diagnose(config: RunConfig) -> None:
    out = _require_out(config)
    spec = config.spec
    table = _obtain_table(config)
    report = diagnostics(spec, table)
    rows = (
        (check, format_number(t), format_number(v)) for check, t, v in report.rows()
    )
    write_artifact(out, config.meta(), "check,t,value", rows)


def _cmd_oracle(config: RunConfig) -> None:
    out = _require_out(config)
    spec = config.spec
    table = _obtain_table(config)
    dp = solve_dp(spec)
    comp = compare_bands(dp, table)
    v_dp = float(dp.values[0, 0])
    v_engine = value_at(spec, table, 0.0, 0.0).v
    meta = config.meta()
    meta.update(
        lattice_value_origin=v_dp,
        solver_value_origin=v_engine,
        max_edge_cells=comp.max_cells,
        existence_mismatches=comp.existence_mismatches,
        endgame_cells=None if np.isnan(comp.endgame_cells) else comp.endgame_cells,
        edge_offset=comp.offset,
        cell=comp.cell,
    )

    def rows():
        for k in comp.rows:
            t = float(dp.times[k])
            b1, b2 = table.band_at(t)
            yield (
                format_number(t),
                format_number(dp.band_lo[k]),
                format_number(dp.band_hi[k]),
                format_number(b1),
                format_number(b2),
                format_number(comp.lo_cells[k]),
                format_number(comp.hi_cells[k]),
            )

    write_artifact(out, meta,
                   "t,lattice_lo,lattice_hi,b1,b2,lo_cells,hi_cells", rows())


def _cmd_convergence(config: RunConfig) -> None:
    out = _require_out(config)
    spec = config.spec
    factors = (1, 2, 4)
    report = refine_convergence(spec, config.solver, factors)
    meta = config.meta()
    meta["decreasing"] = report.decreasing

    def rows():
        for i, f in enumerate(report.factors):
            yield (
                str(f),
                str(config.steps * f),
                format_number(report.t_stars[i]),
                format_number(report.b1_diffs[i]) if i < len(report.b1_diffs) else "",
                format_number(report.b2_diffs[i]) if i < len(report.b2_diffs) else "",
            )

    write_artifact(out, meta,
                   "factor,steps,t_star,b1_diff_vs_next,b2_diff_vs_next", rows())


_RUNNERS = {
    "solve": _cmd_solve,
    "value": _cmd_value,
    "simulate": _cmd_simulate,
    "diagnose": _cmd_diagnose,
    "oracle": _cmd_oracle,
    "convergence": _cmd_convergence,
}


def run(config: RunConfig) -> int:
    """Execute one run; returns the process exit status."""
    _RUNNERS[config.command](config)
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
        return run(config)
    except MaxstopError as exc:
        record = {
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exc.exit_code,
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
