"""Domains, subdomain partitions and the geometric queries the walkers need:
membership, distance to boundary, boundary projection and uniform sphere
sampling in dimensions 1 to 3.

Supported region shapes are open intervals (1D), balls (any dimension) and
strictly convex counter-clockwise polygons (2D) -- enough for piecewise
domains without a mesh engine.  All values are immutable after construction
and every operation is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Point",
    "Interval",
    "Ball",
    "ConvexPolygon",
    "Region",
    "Cell",
    "PiecewiseDomain",
    "PartitionError",
    "contains",
    "closure_contains",
    "boundary_gap",
    "distance_to_boundary",
    "project_to_boundary",
    "sample_sphere",
    "subdomain_index",
    "region_dimension",
    "diameter",
]

Point = np.ndarray  # shape (n,), float64, n in {1, 2, 3}


class PartitionError(ValueError):
    """The cells of a piecewise domain fail to partition the outer region."""


def as_point(coords, dimension: int | None = None) -> Point:
    p = np.asarray(coords, dtype=float).reshape(-1)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point coordinates must be finite, got {coords}")
    if dimension is not None and p.shape[0] != dimension:
        raise ValueError(f"expected a {dimension}-dimensional point, got {p.shape[0]} coordinates")
    return p


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a < self.b):
            raise ValueError(f"interval requires a < b, got [{self.a}, {self.b}]")


@dataclass(frozen=True, eq=False)
class Ball:
    center: Point
    radius: float
    _c: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        if self.center.shape[0] not in (1, 2, 3):
            raise ValueError("ball center must have 1, 2 or 3 coordinates")
        if not (self.radius > 0.0):
            raise ValueError(f"ball radius must be > 0, got {self.radius}")
        object.__setattr__(self, "_c", tuple(float(c) for c in self.center))


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Strictly convex 2D polygon, vertices in counter-clockwise order."""

    vertices: np.ndarray  # shape (m, 2)
    # Cached edge vectors (numpy, for batch queries) and per-edge scalar
    # tuples (ax, ay, ex, ey, len2) for the walkers' hot loop.
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _edge_data: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least 3 two-dimensional vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon vertices must be finite")
        d = np.roll(v, -1, axis=0) - v
        cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
        if np.any(cross <= 0.0):
            raise ValueError("polygon must be strictly convex with counter-clockwise vertices")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_edges", d)
        object.__setattr__(
            self,
            "_edge_data",
            tuple(
                (float(a[0]), float(a[1]), float(e[0]), float(e[1]), float(e[0] ** 2 + e[1] ** 2))
                for a, e in zip(v, d)
            ),
        )


Region = Union[Interval, Ball, ConvexPolygon]


def region_dimension(region: Region) -> int:
    if isinstance(region, Interval):
        return 1
    if isinstance(region, Ball):
        return int(region.center.shape[0])
    if isinstance(region, ConvexPolygon):
        return 2
    raise TypeError(f"unsupported region type {type(region).__name__}")


def diameter(region: Region) -> float:
    if isinstance(region, Interval):
        return region.b - region.a
    if isinstance(region, Ball):
        return 2.0 * region.radius
    if isinstance(region, ConvexPolygon):
        v = region.vertices
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(axis=2)).max())
    raise TypeError(f"unsupported region type {type(region).__name__}")


def _check_dim(region: Region, p: Point) -> Point:
    p = as_point(p)
    n = region_dimension(region)
    if p.shape[0] != n:
        raise ValueError(f"point has {p.shape[0]} coordinates but region is {n}-dimensional")
    return p


def boundary_gap(region: Region, p: Point) -> float:
    """Signed distance to the region boundary: positive inside, negative
    outside.  No interiority precondition; this is the walkers' workhorse.

    Scalar arithmetic throughout: this sits on the per-step hot path of the
    walkers, where small-array numpy calls cost more than the math.
    """
    if isinstance(region, Interval):
        x = float(p[0])
        return min(x - region.a, region.b - x)
    if isinstance(region, Ball):
        c = region._c
        if len(c) == 1:
            dist = abs(float(p[0]) - c[0])
        elif len(c) == 2:
            dist = math.hypot(float(p[0]) - c[0], float(p[1]) - c[1])
        else:
            dist = math.hypot(float(p[0]) - c[0], float(p[1]) - c[1], float(p[2]) - c[2])
        return region.radius - dist
    if isinstance(region, ConvexPolygon):
        px, py = float(p[0]), float(p[1])
        best = math.inf
        inside = True
        for ax, ay, ex, ey, len2 in region._edge_data:
            wx, wy = px - ax, py - ay
            if ex * wy - ey * wx <= 0.0:
                inside = False
            t = (wx * ex + wy * ey) / len2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            dx, dy = wx - t * ex, wy - t * ey
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
        gap = math.sqrt(best)
        return gap if inside else -gap
    raise TypeError(f"unsupported region type {type(region).__name__}")


def contains(region: Region, p: Point) -> bool:
    """True iff p lies in the open interior of the region."""
    if len(p) != region_dimension(region):
        raise ValueError(f"point has {len(p)} coordinates but region is {region_dimension(region)}-dimensional")
    return boundary_gap(region, p) > 0.0


def closure_contains(region: Region, p: Point, tol: float = 0.0) -> bool:
    return boundary_gap(region, p) >= -tol


def distance_to_boundary(region: Region, p: Point) -> float:
    """Euclidean distance from an interior point to the region boundary."""
    if len(p) != region_dimension(region):
        raise ValueError(f"point has {len(p)} coordinates but region is {region_dimension(region)}-dimensional")
    gap = boundary_gap(region, p)
    if gap <= 0.0:
        raise ValueError(f"point {np.asarray(p)} is not interior to the region")
    return gap


def project_to_boundary(region: Region, p: Point) -> Point:
    """Nearest boundary point; ties go to the first edge/face in storage
    order.  Works for interior and exterior points alike."""
    p = _check_dim(region, p)
    if isinstance(region, Interval):
        if abs(p[0] - region.a) <= abs(region.b - p[0]):
            return np.array([region.a])
        return np.array([region.b])
    if isinstance(region, Ball):
        offset = p - region.center
        norm = float(np.linalg.norm(offset))
        if norm == 0.0:
            # Direction is arbitrary from the exact center; pick +x.
            offset = np.zeros_like(p)
            offset[0] = 1.0
            norm = 1.0
        return region.center + (region.radius / norm) * offset
    v = region.vertices
    d = region._edges
    w = p[None, :] - v
    t = np.clip((w * d).sum(axis=1) / (d * d).sum(axis=1), 0.0, 1.0)
    feet = v + t[:, None] * d
    dists = np.linalg.norm(p[None, :] - feet, axis=1)
    return feet[int(np.argmin(dists))].copy()


def sample_sphere(center: Point, radius: float, rng: np.random.Generator) -> Point:
    """Uniform point on the sphere of the given radius around center.

    1D: center +- radius with probability 1/2 each.  2D: uniform angle.
    3D: normalized Gaussian direction.
    """
    if not (radius > 0.0):
        raise ValueError(f"sphere radius must be > 0, got {radius}")
    center = as_point(center)
    n = center.shape[0]
    if n == 1:
        sign = -1.0 if rng.random() < 0.5 else 1.0
        return np.array([center[0] + sign * radius])
    if n == 2:
        theta = 2.0 * math.pi * rng.random()
        return np.array([center[0] + radius * math.cos(theta), center[1] + radius * math.sin(theta)])
    if n == 3:
        g = rng.standard_normal(3)
        norm = float(np.linalg.norm(g))
        while norm < 1e-12:  # astronomically rare
            g = rng.standard_normal(3)
            norm = float(np.linalg.norm(g))
        return center + (radius / norm) * g
    raise ValueError(f"sample_sphere supports dimensions 1-3, got {n}")


@dataclass(frozen=True)
class Cell:
    """One subdomain with its constant killing rate."""

    region: Region
    rate: float

    def __post_init__(self) -> None:
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"cell rate must be finite and >= 0, got {self.rate}")


@dataclass(frozen=True)
class PiecewiseDomain:
    """Outer domain partitioned into cells with constant killing rates.

    Cell numbering is 1-based throughout (the first cell is cell 1), matching
    the config file order; interface points belong to the lowest-numbered
    cell whose closure contains them.
    """

    dimension: int
    outer: Region
    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if region_dimension(self.outer) != self.dimension:
            raise ValueError("outer region dimension does not match the domain dimension")
        cells = tuple(self.cells)
        if not cells:
            raise ValueError("domain needs at least one cell")
        for i, cell in enumerate(cells, start=1):
            if region_dimension(cell.region) != self.dimension:
                raise ValueError(f"cell {i} dimension does not match the domain dimension")
        object.__setattr__(self, "cells", cells)

    @property
    def diameter(self) -> float:
        return diameter(self.outer)

    def rates(self) -> np.ndarray:
        return np.array([c.rate for c in self.cells])

    def max_rate(self) -> float:
        return max(c.rate for c in self.cells)

    def with_rates(self, rates) -> "PiecewiseDomain":
        """Same geometry with the killing rates replaced (one per cell)."""
        rates = [float(r) for r in np.broadcast_to(rates, (len(self.cells),))]
        return PiecewiseDomain(
            self.dimension,
            self.outer,
            tuple(Cell(c.region, r) for c, r in zip(self.cells, rates)),
        )

    def validate_partition(self, n_samples: int = 10_000, seed: int = 0) -> None:
        """Statistical check that cell interiors are disjoint and their
        closures cover the outer region, by rejection sampling interior
        points.  Raises PartitionError with a distinct message per defect."""
        rng = np.random.default_rng(seed)
        tol = 1e-9 * self.diameter
        for p in _interior_samples(self.outer, n_samples, rng):
            strict = [i for i, c in enumerate(self.cells, start=1) if contains(c.region, p)]
            if len(strict) > 1:
                raise PartitionError(
                    f"overlapping cell interiors: point {p.tolist()} lies strictly inside cells {strict}"
                )
            if not strict and not any(
                closure_contains(c.region, p, tol) for c in self.cells
            ):
                raise PartitionError(
                    f"coverage gap: interior point {p.tolist()} lies in no cell closure"
                )


def _bounding_box(region: Region) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(region, Interval):
        return np.array([region.a]), np.array([region.b])
    if isinstance(region, Ball):
        return region.center - region.radius, region.center + region.radius
    return region.vertices.min(axis=0), region.vertices.max(axis=0)


def _interior_samples(region: Region, count: int, rng: np.random.Generator):
    lo, hi = _bounding_box(region)
    produced = 0
    attempts = 0
    while produced < count:
        attempts += 1
        if attempts > 1000 * count:
            raise PartitionError("rejection sampling failed to hit the region interior")
        p = lo + (hi - lo) * rng.random(lo.shape[0])
        if contains(region, p):
            produced += 1
            yield p


def subdomain_index(domain: PiecewiseDomain, p: Point) -> int:
    """1-based number of the cell whose closure contains p; ties at interface
    points go to the lowest number.  Raises PartitionError if no cell closure
    contains p (malformed partition)."""
    if len(p) != domain.dimension:
        raise ValueError(f"point has {len(p)} coordinates but the domain is {domain.dimension}-dimensional")
    for i, cell in enumerate(domain.cells, start=1):
        if closure_contains(cell.region, p):
            return i
    tol = 1e-9 * domain.diameter
    for i, cell in enumerate(domain.cells, start=1):
        if closure_contains(cell.region, p, tol):
            return i
    raise PartitionError(f"point {p.tolist()} lies in no cell closure")
