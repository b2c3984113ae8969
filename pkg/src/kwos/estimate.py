"""Monte Carlo aggregation of trajectories into point estimates.

Reproducibility contract: particle k of evaluation point i draws from a
counter-based stream keyed by (master_seed, i, k), so estimates are a pure
function of the inputs -- independent of worker count, scheduling and
evaluation order.  Summands are reduced in particle order with numpy's
pairwise summation, which fixes the reduction tree.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import PiecewiseDomain, Point, as_point, contains
from .walk import ABSORBED, SolverParams, simulate

__all__ = ["Estimate", "particle_stream", "estimate_point", "estimate_grid"]


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean, its standard error and survival bookkeeping."""

    mean: float
    stderr: float
    k_total: int
    k_survived: int
    k_killed: int
    method: str


def particle_stream(master_seed: int, particle_index: int, point_ordinal: int = 0) -> np.random.Generator:
    """Independent, reproducible stream for one particle.

    The counter-based Philox generator is keyed directly by the 128-bit pair
    (master_seed, point_ordinal : particle_index); distinct keys give
    statistically independent streams and the same triple always reproduces
    the same draw sequence, whatever the worker layout.
    """
    if not 0 <= particle_index < 2**32:
        raise ValueError(f"particle_index must be in [0, 2^32), got {particle_index}")
    if not 0 <= point_ordinal < 2**32:
        raise ValueError(f"point_ordinal must be in [0, 2^32), got {point_ordinal}")
    key = np.array(
        [master_seed & 0xFFFFFFFFFFFFFFFF, (point_ordinal << 32) | particle_index],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def _summands_range(
    domain: PiecewiseDomain,
    f: Callable,
    start,
    params: SolverParams,
    master_seed: int,
    method: str,
    point_ordinal: int,
    lo: int,
    hi: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-particle summands and survival flags for particle ordinals
    [lo, hi).  The summand is weight * f(exit_point) for absorbed particles
    and 0 for killed ones."""
    values = np.zeros(hi - lo)
    survived = np.zeros(hi - lo, dtype=bool)
    for k in range(lo, hi):
        rng = particle_stream(master_seed, k, point_ordinal)
        outcome = simulate(method, domain, start, params, rng)
        if outcome.status == ABSORBED:
            values[k - lo] = outcome.weight * float(f(outcome.exit_point))
            survived[k - lo] = True
    return values, survived


def _summands_task(args):
    return _summands_range(*args)


def _chunks(total: int, n_chunks: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(n_chunks, total))
    bounds = np.linspace(0, total, n_chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _reduce(values: np.ndarray, survived: np.ndarray, method: str) -> Estimate:
    k_total = len(values)
    mean = float(np.sum(values) / k_total)
    if k_total > 1:
        stderr = float(np.std(values, ddof=1) / math.sqrt(k_total))
    else:
        stderr = 0.0
    k_survived = int(np.count_nonzero(survived))
    return Estimate(mean, stderr, k_total, k_survived, k_total - k_survived, method)


def estimate_point(
    domain: PiecewiseDomain,
    f: Callable,
    start,
    params: SolverParams,
    k: int,
    master_seed: int,
    method: str = "kwos",
    *,
    point_ordinal: int = 0,
    workers: int = 1,
) -> Estimate:
    """Run k independent particles from one start point and average.

    The mean divides by k (killed particles contribute 0), which is the
    unbiased estimator of the killed-path representation; stderr is the
    sample standard deviation of the k summands over sqrt(k).
    """
    if k < 1:
        raise ValueError(f"particle count must be >= 1, got {k}")
    start = as_point(start, domain.dimension)
    if not contains(domain.outer, start):
        raise ValueError(f"start point {start.tolist()} is not interior to the outer domain")
    if workers <= 1:
        values, survived = _summands_range(
            domain, f, start, params, master_seed, method, point_ordinal, 0, k
        )
        return _reduce(values, survived, method)
    tasks = [
        (domain, f, start, params, master_seed, method, point_ordinal, lo, hi)
        for lo, hi in _chunks(k, 4 * workers)
    ]
    values = np.zeros(k)
    survived = np.zeros(k, dtype=bool)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for task, (vals, surv) in zip(tasks, pool.map(_summands_task, tasks)):
            lo, hi = task[7], task[8]
            values[lo:hi] = vals
            survived[lo:hi] = surv
    return _reduce(values, survived, method)


def estimate_grid(
    domain: PiecewiseDomain,
    f: Callable,
    points: Sequence,
    params: SolverParams,
    k: int,
    master_seed: int,
    method: str = "kwos",
    *,
    workers: int = 1,
) -> list[tuple[Point, Estimate]]:
    """One estimate per evaluation point.

    Particle streams are keyed by (point ordinal, particle ordinal), so the
    result for each point is identical to a standalone estimate_point call
    with the matching point_ordinal, whatever the worker count.
    """
    if k < 1:
        raise ValueError(f"particle count must be >= 1, got {k}")
    pts = [as_point(p, domain.dimension) for p in points]
    bad = [i for i, p in enumerate(pts) if not contains(domain.outer, p)]
    if bad:
        raise ValueError(f"evaluation points at ordinals {bad} are not interior to the outer domain")

    if workers <= 1:
        return [
            (p, estimate_point(domain, f, p, params, k, master_seed, method, point_ordinal=i))
            for i, p in enumerate(pts)
        ]

    tasks = []
    for i, p in enumerate(pts):
        for lo, hi in _chunks(k, workers):
            tasks.append((domain, f, p, params, master_seed, method, i, lo, hi))
    values = {i: np.zeros(k) for i in range(len(pts))}
    survived = {i: np.zeros(k, dtype=bool) for i in range(len(pts))}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for task, (vals, surv) in zip(tasks, pool.map(_summands_task, tasks)):
            i, lo, hi = task[6], task[7], task[8]
            values[i][lo:hi] = vals
            survived[i][lo:hi] = surv
    return [(p, _reduce(values[i], survived[i], method)) for i, p in enumerate(pts)]
