"""Batch front-end: load a problem config (JSON), evaluate the estimator on
a point grid, emit CSV.  Auxiliary subcommands dump single trajectories,
survival-probability tables and the exact 1D solution.

Exit status: 0 success, 1 config/usage validation error, 2 runtime error.
All numbers are serialized with 17 significant digits, so output files are
byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import oracle1d as oracle1d_mod
from .estimate import estimate_grid, particle_stream
from .expr import BoundaryFunction, ExprError, parse as parse_expr
from .geometry import (
    Ball,
    Cell,
    ConvexPolygon,
    Interval,
    PartitionError,
    PiecewiseDomain,
    Region,
    contains,
)
from .kernels import psi
from .walk import SolverParams, WalkError, simulate

__all__ = ["ProblemConfig", "ConfigError", "load_config", "run_solve", "run_trajectory", "run_psi_table", "main"]

_METHODS = ("kwos", "gr_kwos", "naive")


class ConfigError(ValueError):
    """Config validation failure; carries one message per defect."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass(frozen=True)
class ProblemConfig:
    domain: PiecewiseDomain
    boundary_f: BoundaryFunction
    method: str
    params: SolverParams
    eval_points: tuple
    k: int
    seed: int


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _region_from_json(desc, errors: list[str], where: str) -> Optional[Region]:
    try:
        kind = desc.get("type")
        if kind == "interval":
            return Interval(float(desc["a"]), float(desc["b"]))
        if kind == "ball":
            return Ball(np.asarray(desc["center"], dtype=float), float(desc["radius"]))
        if kind == "polygon":
            return ConvexPolygon(np.asarray(desc["vertices"], dtype=float))
        errors.append(f"{where}: unknown region type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
    return None


def _grid_points(spec, dimension: int, errors: list[str]) -> list:
    lo = np.asarray(spec.get("min"), dtype=float).reshape(-1)
    hi = np.asarray(spec.get("max"), dtype=float).reshape(-1)
    counts = np.asarray(spec.get("counts"), dtype=int).reshape(-1)
    if not (len(lo) == len(hi) == len(counts) == dimension):
        errors.append("eval_points grid spec needs min, max and counts with one entry per axis")
        return []
    if np.any(counts < 1):
        errors.append("eval_points grid counts must be >= 1")
        return []
    axes = [np.linspace(lo[i], hi[i], counts[i]) for i in range(dimension)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [np.array(p) for p in zip(*(m.ravel() for m in mesh))]


def load_config(path: str) -> ProblemConfig:
    """Load and validate a problem config; raises ConfigError with one
    message per defect."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc

    errors: list[str] = []

    dimension = raw.get("dimension")
    if dimension not in (1, 2, 3):
        errors.append(f"dimension must be 1, 2 or 3, got {dimension!r}")
        raise ConfigError(errors)

    outer = _region_from_json(raw.get("outer", {}), errors, "outer region")
    cells: list[Cell] = []
    for i, cell_desc in enumerate(raw.get("cells", []), start=1):
        region = _region_from_json(cell_desc.get("region", {}), errors, f"cell {i} region")
        lam = cell_desc.get("lambda")
        if lam is None or not (float(lam) >= 0.0):
            errors.append(f"cell {i}: lambda must be a number >= 0, got {lam!r}")
        elif region is not None:
            try:
                cells.append(Cell(region, float(lam)))
            except ValueError as exc:
                errors.append(f"cell {i}: {exc}")
    if not cells:
        errors.append("config needs at least one cell")

    domain = None
    if outer is not None and cells and not errors:
        try:
            domain = PiecewiseDomain(dimension, outer, tuple(cells))
            domain.validate_partition()
        except PartitionError as exc:
            errors.append(str(exc))
            domain = None
        except ValueError as exc:
            errors.append(str(exc))
            domain = None

    boundary_f = None
    try:
        boundary_f = parse_expr(str(raw.get("boundary_f", "")))
        if boundary_f.max_dimension_needed() > dimension:
            errors.append(
                f"boundary_f uses variables beyond dimension {dimension}: {sorted(boundary_f.variables)}"
            )
    except ExprError as exc:
        errors.append(f"boundary_f: {exc}")

    method = raw.get("method", "kwos")
    if method not in _METHODS:
        errors.append(f"method must be one of {_METHODS}, got {method!r}")
    if method == "gr_kwos" and dimension != 1:
        errors.append("method gr_kwos requires dimension 1")

    params = None
    if domain is not None:
        try:
            params = SolverParams.for_domain(domain, **{
                key: raw.get("params", {}).get(key)
                for key in ("eps_boundary", "eps_interface", "dt", "max_steps")
            })
        except (TypeError, ValueError) as exc:
            errors.append(f"params: {exc}")

    eval_spec = raw.get("eval_points")
    points: list = []
    if isinstance(eval_spec, dict):
        points = _grid_points(eval_spec, dimension, errors)
    elif isinstance(eval_spec, list) and eval_spec:
        try:
            points = [np.asarray(p, dtype=float).reshape(-1) for p in eval_spec]
            if any(len(p) != dimension for p in points):
                errors.append("every eval point needs one coordinate per dimension")
                points = []
        except (TypeError, ValueError) as exc:
            errors.append(f"eval_points: {exc}")
    else:
        errors.append("eval_points must be a nonempty list of points or a grid spec {min, max, counts}")

    if domain is not None and points:
        for i, p in enumerate(points):
            if not contains(domain.outer, p):
                errors.append(f"evaluation point {i} at {p.tolist()} is not interior to the outer domain")

    k = raw.get("K")
    if not isinstance(k, int) or k < 1:
        errors.append(f"K must be a positive integer, got {k!r}")
    seed = raw.get("seed")
    if not isinstance(seed, int) or seed < 0:
        errors.append(f"seed must be a nonnegative integer, got {seed!r}")

    if errors:
        raise ConfigError(errors)
    return ProblemConfig(domain, boundary_f, method, params, tuple(points), k, seed)


def run_solve(
    config_path: str,
    out_path: str,
    seed: int | None = None,
    k: int | None = None,
    workers: int = 1,
) -> int:
    """Evaluate the configured estimator on the configured points; write CSV
    rows x[,y[,z]],estimate,stderr,k_survived,k_total in config order."""
    config = load_config(config_path)
    use_seed = config.seed if seed is None else seed
    use_k = config.k if k is None else k
    results = estimate_grid(
        config.domain,
        config.boundary_f,
        config.eval_points,
        config.params,
        use_k,
        use_seed,
        config.method,
        workers=workers,
    )
    coord_names = ["x", "y", "z"][: config.domain.dimension]
    lines = [",".join(coord_names + ["estimate", "stderr", "k_survived", "k_total"])]
    for point, est in results:
        row = [_fmt(c) for c in point]
        row += [_fmt(est.mean), _fmt(est.stderr), str(est.k_survived), str(est.k_total)]
        lines.append(",".join(row))
    _write_text(out_path, "\n".join(lines) + "\n")
    return 0


def run_trajectory(config_path: str, start, out_path: str, seed: int | None = None) -> int:
    """Dump one trajectory as CSV rows step,x[,y[,z]],cell_index,mode with
    mode in {sphere, fine, absorb, kill}."""
    config = load_config(config_path)
    start = np.asarray(start, dtype=float).reshape(-1)
    if len(start) != config.domain.dimension:
        raise ConfigError([f"--start needs {config.domain.dimension} coordinates, got {len(start)}"])
    if not contains(config.domain.outer, start):
        raise ConfigError([f"--start {start.tolist()} is not interior to the outer domain"])
    use_seed = config.seed if seed is None else seed
    rng = particle_stream(use_seed, 0)
    outcome = simulate(config.method, config.domain, start, config.params, rng, record_path=True)
    coord_names = ["x", "y", "z"][: config.domain.dimension]
    lines = [",".join(["step"] + coord_names + ["cell_index", "mode"])]
    for j, step in enumerate(outcome.path, start=1):
        row = [str(j)] + [_fmt(c) for c in step.point] + [str(step.cell), step.mode]
        lines.append(",".join(row))
    _write_text(out_path, "\n".join(lines) + "\n")
    return 0


def run_psi_table(n: int, mu_min: float, mu_max: float, steps: int, out_path: str | None = None) -> int:
    """CSV table mu,psi on an inclusive linspace; the psi column is
    monotone decreasing."""
    if n not in (1, 2, 3):
        raise ConfigError([f"dimension must be 1, 2 or 3, got {n}"])
    if not (mu_min >= 0.0 and mu_max > mu_min):
        raise ConfigError([f"need 0 <= mu_min < mu_max, got [{mu_min}, {mu_max}]"])
    if steps < 2:
        raise ConfigError([f"steps must be >= 2, got {steps}"])
    lines = ["mu,psi"]
    for mu in np.linspace(mu_min, mu_max, steps):
        lines.append(f"{_fmt(mu)},{_fmt(psi(float(mu), n))}")
    _write_text(out_path, "\n".join(lines) + "\n")
    return 0


def run_oracle1d(
    breakpoints,
    lambdas,
    u_left: float,
    u_right: float,
    grid: int,
    out_path: str | None = None,
) -> int:
    """Print the coefficient table of the exact 1D solution, then a CSV of
    (x, u(x)) on an evenly spaced grid."""
    try:
        solution = oracle1d_mod.solve_1d(breakpoints, lambdas, u_left, u_right)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    lines = []
    for i in range(solution.n_cells):
        a_coef, b_coef = solution.coefficients[i]
        lam = solution.lambdas[i]
        lo, hi = solution.breakpoints[i], solution.breakpoints[i + 1]
        if lam == 0.0:
            form = f"u(x) = {_fmt(a_coef)} + {_fmt(b_coef)} * x"
        else:
            kappa = float(np.sqrt(2.0 * lam))
            form = f"u(x) = {_fmt(a_coef)} * cosh({_fmt(kappa)} x) + {_fmt(b_coef)} * sinh({_fmt(kappa)} x)"
        lines.append(f"# cell {i + 1} on [{_fmt(lo)}, {_fmt(hi)}], lambda={_fmt(lam)}: {form}")
    lines.append("x,u")
    for x in np.linspace(solution.breakpoints[0], solution.breakpoints[-1], grid):
        lines.append(f"{_fmt(x)},{_fmt(oracle1d_mod.eval_1d(solution, float(x)))}")
    _write_text(out_path, "\n".join(lines) + "\n")
    return 0


def _write_text(out_path: str | None, text: str) -> None:
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _parse_point(text: str) -> list[float]:
    return [float(part) for part in text.split(",")]


def _parse_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",")]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kwos", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="evaluate the estimator on the configured grid")
    solve.add_argument("--config", required=True)
    solve.add_argument("--out", required=True)
    solve.add_argument("--seed", type=int, default=None, help="override the config seed")
    solve.add_argument("--k", type=int, default=None, help="override the config particle count")
    solve.add_argument("--workers", type=int, default=1, help="worker processes (result-invariant)")

    traj = sub.add_parser("trajectory", help="dump one particle trajectory")
    traj.add_argument("--config", required=True)
    traj.add_argument("--out", required=True)
    traj.add_argument("--start", required=True, help="start point, e.g. 0.5 or 0.5,1.0")
    traj.add_argument("--seed", type=int, default=None)

    table = sub.add_parser("psi-table", help="tabulate the sphere-exit survival probability")
    table.add_argument("--n", type=int, required=True, help="ambient dimension (1, 2 or 3)")
    table.add_argument("--mu-min", type=float, required=True)
    table.add_argument("--mu-max", type=float, required=True)
    table.add_argument("--steps", type=int, required=True)
    table.add_argument("--out", default=None)

    oracle = sub.add_parser("oracle1d", help="exact piecewise 1D solution")
    oracle.add_argument("--breakpoints", required=True, help="comma separated, strictly increasing")
    oracle.add_argument("--lambdas", required=True, help="comma separated, one per cell")
    oracle.add_argument("--u-left", type=float, required=True)
    oracle.add_argument("--u-right", type=float, required=True)
    oracle.add_argument("--grid", type=int, default=101, help="number of output samples")
    oracle.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "solve":
            return run_solve(args.config, args.out, args.seed, args.k, args.workers)
        if args.command == "trajectory":
            return run_trajectory(args.config, _parse_point(args.start), args.out, args.seed)
        if args.command == "psi-table":
            return run_psi_table(args.n, args.mu_min, args.mu_max, args.steps, args.out)
        if args.command == "oracle1d":
            return run_oracle1d(
                _parse_floats(args.breakpoints),
                _parse_floats(args.lambdas),
                args.u_left,
                args.u_right,
                args.grid,
                args.out,
            )
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        for message in exc.messages:
            print(f"error: {message}", file=sys.stderr)
        return 1
    except (WalkError, PartitionError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
