"""Integer-lattice geometry: regions, boxes, reflections, dyadic cubes, projections.

Conventions used throughout the package:

* adjacency is nearest-neighbor in the l1 norm (``|i - j| = 1``),
* an ``m``-cube anchored at ``x`` is the half-open box
  ``prod_k [2^m x_k, 2^m (x_k + 1))`` intersected with ``Z^d`` (``2^(m*d)`` points),
* regions store their points as a sorted tuple, so every derived object is
  deterministic and safe to hash, compare, and serialize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Point = tuple[int, ...]


def unit_vectors(d: int) -> list[Point]:
    """The 2d signed unit steps of Z^d."""
    steps = []
    for k in range(d):
        e = [0] * d
        e[k] = 1
        steps.append(tuple(e))
        e[k] = -1
        steps.append(tuple(e))
    return steps


def neighbors(p: Point) -> Iterator[Point]:
    """Nearest neighbors of ``p`` (l1 distance one)."""
    for k in range(len(p)):
        for s in (1, -1):
            yield p[:k] + (p[k] + s,) + p[k + 1 :]


@dataclass(frozen=True)
class Region:
    """A finite set of lattice points with a fixed ambient dimension."""

    points: tuple[Point, ...]
    dim: int
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    @classmethod
    def from_points(cls, pts: Iterable[Point], dim: int | None = None) -> "Region":
        pts = sorted(set(tuple(int(c) for c in p) for p in pts))
        if dim is None:
            if not pts:
                raise ValueError("dimension required for an empty region")
            dim = len(pts[0])
        for p in pts:
            if len(p) != dim:
                raise ValueError(f"point {p} does not have dimension {dim}")
        return cls(tuple(pts), dim)

    @classmethod
    def empty(cls, dim: int) -> "Region":
        return cls((), dim)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return tuple(p) in self.point_set

    @property
    def point_set(self) -> frozenset:
        if self._index is None:
            object.__setattr__(self, "_index", {"set": frozenset(self.points)})
        return self._index["set"]

    def bounding_box(self) -> tuple[Point, Point] | None:
        """(mins, maxs) per axis, or None when empty."""
        if not self.points:
            return None
        mins = tuple(min(p[k] for p in self.points) for k in range(self.dim))
        maxs = tuple(max(p[k] for p in self.points) for k in range(self.dim))
        return mins, maxs

    def diameter(self, norm: str = "linf") -> int:
        """Diameter of the region; 0 for empty or singleton regions."""
        if len(self.points) < 2:
            return 0
        bb = self.bounding_box()
        spans = [bb[1][k] - bb[0][k] for k in range(self.dim)]
        if norm == "linf":
            return max(spans)
        if norm == "l1":
            # exact l1 diameter needs a pairwise scan; regions here are small
            return max(
                sum(abs(a - b) for a, b in zip(p, q))
                for p in self.points
                for q in self.points
            )
        raise ValueError(f"unsupported norm {norm!r}")

    def union(self, other: "Region") -> "Region":
        return Region.from_points(self.points + other.points, self.dim)

    def intersection(self, other: "Region") -> "Region":
        ps = other.point_set
        return Region.from_points((p for p in self.points if p in ps), self.dim)

    def difference(self, other: "Region") -> "Region":
        ps = other.point_set
        return Region.from_points((p for p in self.points if p not in ps), self.dim)

    def translate(self, v: Point) -> "Region":
        return Region.from_points(
            (tuple(c + dv for c, dv in zip(p, v)) for p in self.points), self.dim
        )

    def is_box(self) -> bool:
        """True when the region is exactly its own bounding box."""
        bb = self.bounding_box()
        if bb is None:
            return True
        size = 1
        for lo, hi in zip(*bb):
            size *= hi - lo + 1
        return size == len(self.points)

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.points])

    @classmethod
    def from_json(cls, s: str, dim: int | None = None) -> "Region":
        return cls.from_points((tuple(p) for p in json.loads(s)), dim)


def build_box(n: int, m: int, d: int, base: int = 0) -> Region:
    """The box ``{i : base <= i_d <= m, |i_k| <= n for k < d}``.

    ``base`` selects the wall layer convention: 0 for the half-space with the
    wall at height zero, 1 for the shifted half-space whose first layer is 1.
    """
    if d < 1 or n < 0 or m < base or base not in (0, 1):
        raise ValueError(f"invalid box parameters n={n}, m={m}, d={d}, base={base}")
    pts = []

    def rec(prefix):
        if len(prefix) == d - 1:
            for h in range(base, m + 1):
                pts.append(prefix + (h,))
            return
        for c in range(-n, n + 1):
            rec(prefix + (c,))

    rec(())
    return Region.from_points(pts, d)


def build_rect(lo: Point, hi: Point) -> Region:
    """Axis-aligned box with inclusive corners ``lo`` and ``hi``."""
    d = len(lo)
    pts = [()]
    for k in range(d):
        if hi[k] < lo[k]:
            raise ValueError("empty rectangle")
        pts = [p + (c,) for p in pts for c in range(lo[k], hi[k] + 1)]
    return Region.from_points(pts, d)


def reflect_region(r: Region, axis: int, pivot: float | Fraction) -> Region:
    """Mirror image across the hyperplane ``x_axis = pivot`` (pivot half-integer)."""
    two_pivot = Fraction(pivot) * 2
    if two_pivot.denominator != 1:
        raise ValueError("pivot must be a half-integer")
    t = int(two_pivot)
    if not 0 <= axis < r.dim:
        raise ValueError("axis out of range")
    return Region.from_points(
        (p[:axis] + (t - p[axis],) + p[axis + 1 :] for p in r.points), r.dim
    )


def inner_boundary(a: Region) -> Region:
    ps = a.point_set
    return Region.from_points(
        (p for p in a.points if any(q not in ps for q in neighbors(p))), a.dim
    )


def exterior_boundary(a: Region) -> Region:
    ps = a.point_set
    out = set()
    for p in a.points:
        for q in neighbors(p):
            if q not in ps:
                out.add(q)
    return Region.from_points(out, a.dim)


def edge_boundary(a: Region) -> tuple[tuple[Point, Point], ...]:
    """Sorted tuple of (inside, outside) nearest-neighbor pairs leaving ``a``."""
    ps = a.point_set
    edges = []
    for p in a.points:
        for q in neighbors(p):
            if q not in ps:
                edges.append((p, q))
    return tuple(sorted(edges))


def boundaries(a: Region, kind: str):
    """Dispatcher used by the CLI: kind in {'inner', 'exterior', 'edge'}."""
    if kind == "inner":
        return inner_boundary(a)
    if kind == "exterior":
        return exterior_boundary(a)
    if kind == "edge":
        return edge_boundary(a)
    raise ValueError(f"unknown boundary kind {kind!r}")


@dataclass(frozen=True)
class Cube:
    """Dyadic cube of scale ``m`` anchored at ``anchor``."""

    m: int
    anchor: Point

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("cube scale must be non-negative")

    @property
    def side(self) -> int:
        return 1 << self.m

    def size(self) -> int:
        return self.side ** len(self.anchor)

    def points(self) -> Iterator[Point]:
        s = self.side
        d = len(self.anchor)
        idx = [0] * d
        base = [a * s for a in self.anchor]
        while True:
            yield tuple(base[k] + idx[k] for k in range(d))
            k = d - 1
            while k >= 0:
                idx[k] += 1
                if idx[k] < s:
                    break
                idx[k] = 0
                k -= 1
            if k < 0:
                return

    def contains(self, p: Point) -> bool:
        s = self.side
        return all(a * s <= c < (a + 1) * s for a, c in zip(self.anchor, p))

    def region(self) -> Region:
        return Region.from_points(self.points(), len(self.anchor))


@dataclass(frozen=True)
class CubeCollection:
    """A set of pairwise-disjoint cubes sharing one scale."""

    m: int
    anchors: frozenset

    def __len__(self) -> int:
        return len(self.anchors)

    def cubes(self) -> list[Cube]:
        return [Cube(self.m, a) for a in sorted(self.anchors)]

    def covered_region(self, dim: int) -> Region:
        pts = []
        for c in self.cubes():
            pts.extend(c.points())
        return Region.from_points(pts, dim)

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "anchors": sorted(list(a) for a in self.anchors)})


def min_cube_covering(a: Region, m: int) -> CubeCollection:
    """Minimal cover of ``a`` by grid-aligned m-cubes (floor division of points)."""
    if m < 0:
        raise ValueError("cube scale must be non-negative")
    s = 1 << m
    anchors = frozenset(tuple(c // s for c in p) for p in a.points)
    return CubeCollection(m, anchors)


def cube_gap(anchor_a: Point, anchor_b: Point, m: int) -> tuple[int, ...]:
    """Per-axis gap (in lattice units) between the point sets of two m-cubes."""
    s = 1 << m
    gaps = []
    for x, y in zip(anchor_a, anchor_b):
        delta = abs(x - y)
        gaps.append(0 if delta == 0 else (delta - 1) * s + 1)
    return tuple(gaps)


def cube_distance_sq(anchor_a: Point, anchor_b: Point, m: int, norm: str = "l2"):
    """Distance between two m-cubes: squared for l2, plain for l1/linf."""
    gaps = cube_gap(anchor_a, anchor_b, m)
    if norm == "l2":
        return sum(g * g for g in gaps)
    if norm == "l1":
        return sum(gaps)
    if norm == "linf":
        return max(gaps)
    raise ValueError(f"unsupported norm {norm!r}")


def axis_projection(a: Region, rect: Region, axis: int):
    """Split the projection of ``a ∩ rect`` onto the face ``rect_axis`` into
    good and bad points.

    A projected point is *bad* when its full line through the rectangle lies
    inside ``a``, good otherwise.  Returns ``(good, bad)`` as sets of points on
    the face ``{x in rect : x_axis = min}``.
    """
    if not rect.is_box():
        raise ValueError("projection rectangle must be an axis-aligned box")
    bb = rect.bounding_box()
    if bb is None:
        return set(), set()
    lo, hi = bb
    if not 0 <= axis < rect.dim:
        raise ValueError("axis out of range")
    aset = a.point_set
    good, bad = set(), set()
    face = [p for p in rect.points if p[axis] == lo[axis]]
    for x in face:
        line = [
            x[:axis] + (c,) + x[axis + 1 :] for c in range(lo[axis], hi[axis] + 1)
        ]
        hits = [p in aset for p in line]
        if any(hits):
            if all(hits):
                bad.add(x)
            else:
                good.add(x)
    return good, bad


def fill(a: Region, dim: int | None = None) -> Region:
    """The volume V(a): ``a`` plus every hole (sites enclosed by ``a``).

    Computed on the bounding box padded by one layer; the complement points
    that are not reachable from the outside are the holes.
    """
    if dim is None:
        dim = a.dim
    if not a.points:
        return a
    lo, hi = a.bounding_box()
    lo = tuple(c - 1 for c in lo)
    hi = tuple(c + 1 for c in hi)
    aset = a.point_set

    def inside_box(p):
        return all(l <= c <= h for l, c, h in zip(lo, p, hi))

    # flood the complement from one guaranteed-outside corner
    start = lo
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in seen or not inside_box(q) or q in aset:
                continue
            seen.add(q)
            stack.append(q)
    holes = [
        p
        for p in build_rect(lo, hi).points
        if p not in aset and p not in seen
    ]
    return Region.from_points(list(a.points) + holes, dim)


def connected_components(a: Region) -> list[Region]:
    """NN-connected components of a region, in deterministic order."""
    ps = set(a.points)
    comps = []
    while ps:
        start = min(ps)
        comp = {start}
        stack = [start]
        ps.discard(start)
        while stack:
            p = stack.pop()
            for q in neighbors(p):
                if q in ps:
                    ps.discard(q)
                    comp.add(q)
                    stack.append(q)
        comps.append(Region.from_points(comp, a.dim))
    return comps
