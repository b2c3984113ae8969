"""Single-particle trajectory simulators.

Three walkers share the WalkOutcome contract:

* ``kwos_trajectory``   -- sphere jumps with survival probability psi(mu r)
  per jump, falling back to a fine Euler mesh inside the eps_interface shell
  around the current cell's boundary, and absorbing inside the eps_boundary
  shell at the outer boundary.
* ``gr_kwos_trajectory`` -- 1D hybrid: inside rate-0 cells the exit point is
  drawn exactly (gambler's ruin); everywhere else steps follow the sphere
  walker.
* ``naive_trajectory``   -- plain Euler walk to the first exit, discounting
  the boundary payoff by exp(-sum rate*dt) along the path.

Kill decisions are uniform-threshold comparisons (survive iff u < s) and the
kill uniform is drawn on every jump and every fine step, including in rate-0
cells.  Draws are consumed at stream positions that depend only on the
particle's geometry, never on the rates, so runs that share streams are
coupled pathwise: raising any rate can only turn survivors into casualties,
never the reverse.  Fine steps draw normals and kill uniforms in fixed-size
blocks (a whole block is consumed even if the phase ends mid-block), which
keeps that alignment while letting numpy do the stepping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    Ball,
    ConvexPolygon,
    Interval,
    PartitionError,
    PiecewiseDomain,
    Point,
    as_point,
    boundary_gap,
    contains,
    project_to_boundary,
    sample_sphere,
    subdomain_index,
)
from .kernels import psi

__all__ = [
    "ABSORBED",
    "KILLED",
    "SolverParams",
    "TraceStep",
    "WalkOutcome",
    "WalkError",
    "kwos_trajectory",
    "gr_kwos_trajectory",
    "naive_trajectory",
    "simulate",
]

ABSORBED = "absorbed"
KILLED = "killed"

_FINE_BLOCK_FIRST = 16
_FINE_BLOCK_MAX = 128
_NAIVE_BLOCK = 1024


class WalkError(RuntimeError):
    """A trajectory failed to terminate within max_steps."""


@dataclass(frozen=True)
class SolverParams:
    """Shell widths, fine time-mesh and step cap for the walkers.

    eps_boundary is the absorption shell at the outer boundary;
    eps_interface the fine-mesh shell at cell boundaries; dt the fine
    time step.  One fine move has spatial scale sqrt(dt), which must stay
    below eps_interface so single steps rarely overshoot the shell.
    """

    eps_boundary: float
    eps_interface: float
    dt: float
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        for name in ("eps_boundary", "eps_interface", "dt"):
            if not (getattr(self, name) > 0.0 and math.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite and > 0")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be > 0")
        if not math.sqrt(self.dt) < self.eps_interface:
            raise ValueError("need sqrt(dt) < eps_interface")

    @classmethod
    def for_domain(
        cls,
        domain: PiecewiseDomain,
        eps_boundary: float | None = None,
        eps_interface: float | None = None,
        dt: float | None = None,
        max_steps: int | None = None,
    ) -> "SolverParams":
        """Defaults scaled to the domain: eps_boundary = 1e-3 diam,
        eps_interface = 1e-2 diam, dt = (eps_interface/10)^2."""
        diam = domain.diameter
        e1 = 1e-3 * diam if eps_boundary is None else eps_boundary
        e2 = 1e-2 * diam if eps_interface is None else eps_interface
        step = (e2 / 10.0) ** 2 if dt is None else dt
        return cls(e1, e2, step, 1_000_000 if max_steps is None else max_steps)


@dataclass(frozen=True)
class TraceStep:
    """One recorded move: the landing point, the 1-based cell number of the
    landing point (0 if it lies outside every cell closure) and the move kind
    ('sphere', 'fine', 'absorb' or 'kill')."""

    point: Point
    cell: int
    mode: str


@dataclass(frozen=True)
class WalkOutcome:
    status: str  # ABSORBED or KILLED
    exit_point: Optional[Point]  # on the outer boundary iff ABSORBED
    weight: float  # 1 for sphere walkers; exp(-sum rate*dt) for naive
    steps: int
    path: Optional[list[TraceStep]] = None


# --------------------------------------------------------------------------
# batch geometry helpers (points as (m, n) arrays)


def _gap_many(region, pts: np.ndarray) -> np.ndarray:
    """Signed boundary distance for a batch of points."""
    if isinstance(region, Interval):
        x = pts[:, 0]
        return np.minimum(x - region.a, region.b - x)
    if isinstance(region, Ball):
        dist = np.sqrt(((pts - region.center[None, :]) ** 2).sum(axis=1))
        return region.radius - dist
    if isinstance(region, ConvexPolygon):
        best2 = np.full(len(pts), np.inf)
        inside = np.ones(len(pts), dtype=bool)
        for ax, ay, ex, ey, len2 in region._edge_data:
            wx = pts[:, 0] - ax
            wy = pts[:, 1] - ay
            inside &= ex * wy - ey * wx > 0.0
            t = np.clip((wx * ex + wy * ey) / len2, 0.0, 1.0)
            dx = wx - t * ex
            dy = wy - t * ey
            best2 = np.minimum(best2, dx * dx + dy * dy)
        gap = np.sqrt(best2)
        return np.where(inside, gap, -gap)
    raise TypeError(f"unsupported region type {type(region).__name__}")


def _closure_many(region, pts: np.ndarray, tol: float) -> np.ndarray:
    if isinstance(region, Interval):
        x = pts[:, 0]
        return (x >= region.a - tol) & (x <= region.b + tol)
    if isinstance(region, Ball):
        d2 = ((pts - region.center[None, :]) ** 2).sum(axis=1)
        return d2 <= (region.radius + tol) ** 2
    if isinstance(region, ConvexPolygon):
        ok = np.ones(len(pts), dtype=bool)
        for ax, ay, ex, ey, len2 in region._edge_data:
            wx = pts[:, 0] - ax
            wy = pts[:, 1] - ay
            ok &= (ex * wy - ey * wx) / math.sqrt(len2) >= -tol
        return ok
    raise TypeError(f"unsupported region type {type(region).__name__}")


def _cells_at(domain: PiecewiseDomain, pts: np.ndarray, strict: bool = True) -> np.ndarray:
    """1-based cell number per point, lowest number winning interface ties,
    with a tolerance fallback for boundary roundoff.  Points in no closure
    raise PartitionError when strict, else get the sentinel 0."""
    idx = np.zeros(len(pts), dtype=np.intp)
    unassigned = np.ones(len(pts), dtype=bool)
    for i, cell in enumerate(domain.cells, start=1):
        if not unassigned.any():
            break
        hit = unassigned & _closure_many(cell.region, pts, 0.0)
        idx[hit] = i
        unassigned &= ~hit
    if unassigned.any():
        tol = 1e-9 * domain.diameter
        for i, cell in enumerate(domain.cells, start=1):
            hit = unassigned & _closure_many(cell.region, pts, tol)
            idx[hit] = i
            unassigned &= ~hit
        if strict and unassigned.any():
            bad = pts[unassigned][0]
            raise PartitionError(f"point {bad.tolist()} lies in no cell closure")
    return idx


def _rates_at(domain: PiecewiseDomain, pts: np.ndarray) -> np.ndarray:
    """Killing rate at each (interior) point."""
    table = np.array([c.rate for c in domain.cells])
    return table[_cells_at(domain, pts, strict=True) - 1]


# --------------------------------------------------------------------------
# the killing sphere walk


def _trace_cell(domain: PiecewiseDomain, p: Point) -> int:
    try:
        return subdomain_index(domain, p)
    except Exception:
        return 0


def _check_start(domain: PiecewiseDomain, start) -> Point:
    w = as_point(start, domain.dimension)
    if not contains(domain.outer, w):
        raise ValueError(f"start point {w.tolist()} is not strictly inside the outer domain")
    return w


class _KwosEngine:
    """Shared per-walk state for the sphere walkers."""

    def __init__(self, domain: PiecewiseDomain, params: SolverParams, rng: np.random.Generator, trace):
        self.domain = domain
        self.params = params
        self.rng = rng
        self.trace = trace
        self.fine_survival = np.array([math.exp(-c.rate * params.dt) for c in domain.cells])
        self.rate_zero = np.array([c.rate == 0.0 for c in domain.cells])
        self.sqrt_dt = math.sqrt(params.dt)
        self.single_cell = len(domain.cells) == 1
        # 1D domains with consecutive interval cells get a searchsorted fast
        # path for cell lookup and gaps.
        self.breaks: Optional[np.ndarray] = None
        if domain.dimension == 1 and all(isinstance(c.region, Interval) for c in domain.cells):
            edges = [domain.cells[0].region.a]
            edges += [c.region.b for c in domain.cells]
            if all(
                abs(domain.cells[i + 1].region.a - domain.cells[i].region.b) == 0.0
                for i in range(len(domain.cells) - 1)
            ):
                self.breaks = np.array(edges)

    def cell_no(self, w: Point) -> int:
        if self.single_cell:
            return 1
        if self.breaks is not None:
            return int(np.searchsorted(self.breaks[1:-1], w[0], side="left")) + 1
        return subdomain_index(self.domain, w)

    def absorb_at(self, w: Point) -> Point:
        exit_point = project_to_boundary(self.domain.outer, w)
        if self.trace is not None:
            self.trace.append(TraceStep(exit_point, _trace_cell(self.domain, exit_point), "absorb"))
        return exit_point

    def sphere_jump(self, w: Point, cell_no: int, radius: float):
        """One sphere jump plus its kill draw.  Returns (killed, landing)."""
        cell = self.domain.cells[cell_no - 1]
        w_new = sample_sphere(w, radius, self.rng)
        u = self.rng.random()
        survival = 1.0 if cell.rate == 0.0 else psi(
            math.sqrt(2.0 * cell.rate) * radius, self.domain.dimension
        )
        if not u < survival:
            if self.trace is not None:
                self.trace.append(TraceStep(w_new, _trace_cell(self.domain, w_new), "kill"))
            return True, w_new
        if self.trace is not None:
            self.trace.append(TraceStep(w_new, _trace_cell(self.domain, w_new), "sphere"))
        return False, w_new

    def fine_phase(self, w: Point, cell_no: int, budget: int, release_rate_zero: bool = False):
        """Fine Euler steps in blocks until kill, absorption, shell exit or
        budget exhaustion.  Returns (event, point, steps_used) with event in
        {KILLED, ABSORBED, 'moved'}.

        Each block draws its normals and then its kill uniforms in one shot;
        a block is consumed whole even when an event cuts it short, and the
        block schedule is fixed, so stream positions stay aligned across rate
        fields sharing the same streams.  A move is killed at the rate of the
        cell it started from; a surviving move landing outside the outer
        region absorbs at the boundary projection.

        With release_rate_zero (the gambler's-ruin hybrid), the phase also
        hands back any move landing strictly inside a rate-0 cell, whose exit
        is then drawn exactly by the caller; such phases are usually cut
        short after a step or two, so they start with a small block and grow.
        """
        domain = self.domain
        params = self.params
        eps1 = params.eps_boundary
        eps2 = params.eps_interface
        used = 0
        current_cell = cell_no
        block = _FINE_BLOCK_FIRST if release_rate_zero else _FINE_BLOCK_MAX
        while used < budget:
            block = min(block, budget - used)
            if block < 1:
                break
            normals = self.rng.standard_normal((block, domain.dimension))
            uniforms = self.rng.random(block)
            positions = w[None, :] + self.sqrt_dt * np.cumsum(normals, axis=0)

            if self.single_cell:
                cells = np.ones(block, dtype=np.intp)
            elif self.breaks is not None:
                cells = np.searchsorted(self.breaks[1:-1], positions[:, 0], side="left") + 1
            else:
                cells = _cells_at(domain, positions, strict=False)
            start_cells = np.empty(block, dtype=np.intp)
            start_cells[0] = current_cell
            start_cells[1:] = cells[:-1]
            killed = uniforms >= self.fine_survival[np.maximum(start_cells, 1) - 1]

            if self.breaks is not None:
                x = positions[:, 0]
                outer_gap = np.minimum(x - self.breaks[0], self.breaks[-1] - x)
                cell_gap = np.minimum(x - self.breaks[cells - 1], self.breaks[cells] - x)
            else:
                outer_gap = _gap_many(domain.outer, positions)
                cell_gap = np.zeros(block)
                for c in np.unique(cells):
                    if c > 0:
                        mask = cells == c
                        cell_gap[mask] = _gap_many(domain.cells[c - 1].region, positions[mask])
            outside = outer_gap <= 0.0
            leave_phase = (outer_gap < eps1) | (cell_gap >= eps2)
            if release_rate_zero:
                leave_phase |= self.rate_zero[np.maximum(cells, 1) - 1] & (cells > 0) & (cell_gap > 0.0)

            events = killed | outside | leave_phase
            if not events.any():
                used += block
                if self.trace is not None:
                    for j in range(block):
                        self.trace.append(TraceStep(positions[j], int(cells[j]), "fine"))
                w = positions[-1]
                current_cell = int(cells[-1])
                block = min(2 * block, _FINE_BLOCK_MAX)
                continue

            j = int(np.argmax(events))
            used += j + 1
            if self.trace is not None:
                for i in range(j):
                    self.trace.append(TraceStep(positions[i], int(cells[i]), "fine"))
            if killed[j]:
                if self.trace is not None:
                    self.trace.append(TraceStep(positions[j], int(cells[j]), "kill"))
                return KILLED, positions[j], used
            if outside[j]:
                return ABSORBED, self.absorb_at(positions[j]), used
            if self.trace is not None:
                self.trace.append(TraceStep(positions[j], int(cells[j]), "fine"))
            return "moved", positions[j], used
        return "moved", w, used


def kwos_trajectory(
    domain: PiecewiseDomain,
    start,
    params: SolverParams,
    rng: np.random.Generator,
    record_path: bool = False,
) -> WalkOutcome:
    """Simulate one particle of the killing sphere walk.

    Per step, in this order: absorb if within eps_boundary of the outer
    boundary; otherwise fine-step if within eps_interface of the current
    cell's boundary; otherwise sphere-jump with survival psi(sqrt(2 rate) r).
    """
    w = _check_start(domain, start)
    trace: Optional[list[TraceStep]] = [] if record_path else None
    engine = _KwosEngine(domain, params, rng, trace)
    steps = 0
    while steps < params.max_steps:
        if boundary_gap(domain.outer, w) < params.eps_boundary:
            steps += 1
            return WalkOutcome(ABSORBED, engine.absorb_at(w), 1.0, steps, trace)
        cell_no = engine.cell_no(w)
        gap_cell = boundary_gap(domain.cells[cell_no - 1].region, w)
        if gap_cell < params.eps_interface:
            event, w, used = engine.fine_phase(w, cell_no, params.max_steps - steps)
            steps += used
            if event == KILLED:
                return WalkOutcome(KILLED, None, 1.0, steps, trace)
            if event == ABSORBED:
                return WalkOutcome(ABSORBED, w, 1.0, steps, trace)
            continue
        steps += 1
        was_killed, w = engine.sphere_jump(w, cell_no, gap_cell)
        if was_killed:
            return WalkOutcome(KILLED, None, 1.0, steps, trace)
    raise WalkError(f"trajectory did not terminate within max_steps={params.max_steps}")


def _consecutive_1d_cells(domain: PiecewiseDomain) -> None:
    if domain.dimension != 1:
        raise ValueError("gr_kwos requires a 1-dimensional domain")
    if not isinstance(domain.outer, Interval):
        raise ValueError("gr_kwos requires an interval outer domain")
    tol = 1e-12 * domain.diameter
    cursor = domain.outer.a
    for i, cell in enumerate(domain.cells, start=1):
        if not isinstance(cell.region, Interval):
            raise ValueError("gr_kwos requires interval cells")
        if abs(cell.region.a - cursor) > tol:
            raise ValueError(
                f"gr_kwos cells must be consecutive; cell {i} starts at {cell.region.a}, expected {cursor}"
            )
        cursor = cell.region.b
    if abs(cursor - domain.outer.b) > tol:
        raise ValueError("gr_kwos cells must end at the outer boundary")


def gr_kwos_trajectory(
    domain: PiecewiseDomain,
    start,
    params: SolverParams,
    rng: np.random.Generator,
    record_path: bool = False,
) -> WalkOutcome:
    """1D hybrid walker: exact gambler's-ruin exits inside rate-0 cells,
    killing sphere steps elsewhere.

    From x strictly inside a rate-0 cell (lo, hi), the particle moves straight
    to lo with probability (hi - x)/(hi - lo), else to hi.  A move landing on
    the outer boundary absorbs; a move landing on an interior interface hands
    over to the sphere walker's stepping, which fine-meshes its way into the
    neighbouring cell.
    """
    _consecutive_1d_cells(domain)
    w = _check_start(domain, start)
    outer = domain.outer
    tol = 1e-12 * domain.diameter
    trace: Optional[list[TraceStep]] = [] if record_path else None
    engine = _KwosEngine(domain, params, rng, trace)
    steps = 0
    while steps < params.max_steps:
        cell_no = engine.cell_no(w)
        cell = domain.cells[cell_no - 1]
        lo, hi = cell.region.a, cell.region.b
        x = float(w[0])
        if cell.rate == 0.0 and lo < x < hi:
            steps += 1
            u = rng.random()
            target = lo if u < (hi - x) / (hi - lo) else hi
            if abs(target - outer.a) <= tol or abs(target - outer.b) <= tol:
                w = np.array([outer.a if abs(target - outer.a) <= tol else outer.b])
                if trace is not None:
                    trace.append(TraceStep(w, _trace_cell(domain, w), "absorb"))
                return WalkOutcome(ABSORBED, w, 1.0, steps, trace)
            w = np.array([target])
            if trace is not None:
                trace.append(TraceStep(w, _trace_cell(domain, w), "sphere"))
            continue
        if boundary_gap(outer, w) < params.eps_boundary:
            steps += 1
            return WalkOutcome(ABSORBED, engine.absorb_at(w), 1.0, steps, trace)
        gap_cell = boundary_gap(cell.region, w)
        if gap_cell < params.eps_interface:
            event, w, used = engine.fine_phase(w, cell_no, params.max_steps - steps, release_rate_zero=True)
            steps += used
            if event == KILLED:
                return WalkOutcome(KILLED, None, 1.0, steps, trace)
            if event == ABSORBED:
                return WalkOutcome(ABSORBED, w, 1.0, steps, trace)
            continue
        steps += 1
        was_killed, w = engine.sphere_jump(w, cell_no, gap_cell)
        if was_killed:
            return WalkOutcome(KILLED, None, 1.0, steps, trace)
    raise WalkError(f"trajectory did not terminate within max_steps={params.max_steps}")


def naive_trajectory(
    domain: PiecewiseDomain,
    start,
    dt: float,
    max_steps: int,
    rng: np.random.Generator,
    record_path: bool = False,
) -> WalkOutcome:
    """Plain Euler reference walker: step sqrt(dt) * xi until the first point
    outside the outer domain, then absorb at the boundary projection of the
    last interior point.  The weight discounts by exp(-rate * dt) per step,
    with the rate read at each step's starting point.
    """
    if not (dt > 0.0):
        raise ValueError(f"dt must be > 0, got {dt}")
    if max_steps <= 0:
        raise ValueError("max_steps must be > 0")
    w = _check_start(domain, start)
    n = domain.dimension
    sqrt_dt = math.sqrt(dt)
    trace: Optional[list[TraceStep]] = [] if record_path else None
    log_weight = 0.0
    steps = 0
    while steps < max_steps:
        block = min(_NAIVE_BLOCK, max_steps - steps)
        positions = w[None, :] + sqrt_dt * np.cumsum(rng.standard_normal((block, n)), axis=0)
        inside = _gap_many(domain.outer, positions) > 0.0
        exits = np.flatnonzero(~inside)
        if exits.size == 0:
            starts = np.vstack([w[None, :], positions[:-1]])
            log_weight -= dt * _rates_at(domain, starts).sum()
            steps += block
            if trace is not None:
                for p in positions:
                    trace.append(TraceStep(p, _trace_cell(domain, p), "fine"))
            w = positions[-1]
            continue
        first = int(exits[0])
        starts = np.vstack([w[None, :], positions[:first]])
        log_weight -= dt * _rates_at(domain, starts).sum()
        steps += first + 1
        last_interior = positions[first - 1] if first >= 1 else w
        exit_point = project_to_boundary(domain.outer, last_interior)
        if trace is not None:
            for p in positions[:first]:
                trace.append(TraceStep(p, _trace_cell(domain, p), "fine"))
            trace.append(TraceStep(exit_point, _trace_cell(domain, exit_point), "absorb"))
        return WalkOutcome(ABSORBED, exit_point, math.exp(log_weight), steps, trace)
    raise WalkError(f"naive walk did not exit within max_steps={max_steps}")


_METHODS = ("kwos", "gr_kwos", "naive")


def simulate(
    method: str,
    domain: PiecewiseDomain,
    start,
    params: SolverParams,
    rng: np.random.Generator,
    record_path: bool = False,
) -> WalkOutcome:
    """Dispatch one trajectory by method name ('kwos', 'gr_kwos', 'naive')."""
    if method == "kwos":
        return kwos_trajectory(domain, start, params, rng, record_path)
    if method == "gr_kwos":
        return gr_kwos_trajectory(domain, start, params, rng, record_path)
    if method == "naive":
        return naive_trajectory(domain, start, params.dt, params.max_steps, rng, record_path)
    raise ValueError(f"unknown method '{method}'; expected one of {_METHODS}")
