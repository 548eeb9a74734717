import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isinglab.lattice import (
    Cube,
    CubeCollection,
    Region,
    axis_projection,
    boundaries,
    build_box,
    build_rect,
    edge_boundary,
    exterior_boundary,
    fill,
    inner_boundary,
    min_cube_covering,
    neighbors,
    reflect_region,
)

points_2d = st.tuples(st.integers(-8, 8), st.integers(-8, 8))


def test_build_box_sizes():
    assert len(build_box(1, 1, 2, base=0)) == 6  # (2n+1)^(d-1) * (m+1)
    assert build_box(0, 0, 3, base=0).points == ((0, 0, 0),)
    assert len(build_box(2, 3, 2, base=1)) == 15


def test_build_box_invalid():
    with pytest.raises(ValueError):
        build_box(1, 0, 2, base=1)
    with pytest.raises(ValueError):
        build_box(-1, 1, 2)


def test_reflect_examples():
    assert reflect_region(Region.from_points([(0, 0)]), 1, -0.5).points == ((0, -1),)
    lam = build_box(1, 1, 2, base=1)
    mirrored = reflect_region(lam, 1, 0.5)
    assert len(mirrored) == len(lam)
    assert all(p[1] in (0,) for p in mirrored.points)
    # Delta_n = Lambda_n union its mirror has twice the size (disjoint copy)
    delta = lam.union(mirrored)
    assert len(delta) == 2 * len(lam)


@given(st.lists(points_2d, min_size=1, max_size=12), st.integers(0, 1), st.integers(-3, 3))
@settings(max_examples=60, deadline=None)
def test_reflect_is_involution(pts, axis, two_pivot):
    r = Region.from_points(pts, 2)
    pivot = two_pivot / 2.0
    assert reflect_region(reflect_region(r, axis, pivot), axis, pivot) == r


def test_boundaries_single_point():
    r = Region.from_points([(0, 0)])
    assert len(exterior_boundary(r)) == 4
    assert len(inner_boundary(r)) == 1
    assert len(edge_boundary(r)) == 4


def test_boundaries_empty():
    e = Region.empty(2)
    assert len(exterior_boundary(e)) == 0
    assert len(inner_boundary(e)) == 0
    assert edge_boundary(e) == ()


def test_boundaries_2x2_square():
    # derived by enumerating unit-distance pairs leaving the square
    sq = build_rect((0, 0), (1, 1))
    pairs = [
        (p, q) for p in sq.points for q in neighbors(p) if q not in sq.point_set
    ]
    assert len(inner_boundary(sq)) == 4
    assert len(exterior_boundary(sq)) == 8
    assert len(edge_boundary(sq)) == len(pairs) == 8


def test_boundary_size_sandwich():
    for pts in ([(0, 0)], [(0, 0), (1, 0), (2, 0)], [(0, 0), (1, 1)]):
        r = Region.from_points(pts, 2)
        inner = len(inner_boundary(r))
        edge = len(edge_boundary(r))
        assert inner <= edge <= 2 * r.dim * inner


def test_boundaries_dispatcher():
    r = Region.from_points([(0, 0)])
    assert boundaries(r, "inner") == inner_boundary(r)
    with pytest.raises(ValueError):
        boundaries(r, "bogus")


def test_exterior_boundary_restriction_invariant():
    # ext boundary computed globally then restricted to B equals the ext
    # boundary relative to any superset B
    a = Region.from_points([(0, 0), (1, 0)])
    b = build_rect((-1, -1), (2, 2))
    ext = exterior_boundary(a)
    restricted = [p for p in ext.points if p in b.point_set]
    assert sorted(restricted) == sorted(
        p for p in b.points if p not in a.point_set and any(q in a.point_set for q in neighbors(p))
    )


def test_min_cube_covering_examples():
    assert len(min_cube_covering(Region.from_points([(0, 0)]), 3)) == 1
    m = 2
    two = Region.from_points([(0, 0), (1 << m, 0)])
    assert len(min_cube_covering(two, m)) == 2
    # 3x3 square at m=1: floor-division of 9 points gives 4 anchors
    sq = build_rect((0, 0), (2, 2))
    assert len(min_cube_covering(sq, 1)) == 4


def test_min_cube_covering_monotone_in_scale():
    r = build_rect((0, 0), (5, 3))
    sizes = [len(min_cube_covering(r, m)) for m in range(5)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_cube_points_and_membership():
    c = Cube(1, (0, 0))
    pts = list(c.points())
    assert len(pts) == 4 and all(c.contains(p) for p in pts)
    assert not c.contains((2, 0))
    col = CubeCollection(1, frozenset({(0, 0), (1, 0)}))
    assert len(col.covered_region(2)) == 8


def test_axis_projection_examples():
    rect = build_rect((0, 0), (2, 2))
    good, bad = axis_projection(Region.empty(2), rect, 0)
    assert good == set() and bad == set()
    # full rectangle: every line lies inside, all bad
    g2, b2 = axis_projection(rect, rect, 0)
    assert g2 == set() and len(b2) == 3
    # single interior point: one good point per axis, no bad
    mid = Region.from_points([(1, 1)])
    for axis in (0, 1):
        g, b = axis_projection(mid, rect, axis)
        assert len(g) == 1 and len(b) == 0


def test_axis_projection_good_point_bound_exhaustive_3x3():
    # |P_i^G(A in R)| <= |ext boundary of A inside R| over all subsets
    rect = build_rect((0, 0), (2, 2))
    cells = rect.points
    for mask in range(1 << 9):
        a = Region.from_points([cells[i] for i in range(9) if mask >> i & 1] or [], 2) \
            if mask else Region.empty(2)
        ext_in_r = [
            p for p in cells
            if p not in a.point_set and any(q in a.point_set for q in neighbors(p))
        ]
        for axis in (0, 1):
            good, _ = axis_projection(a, rect, axis)
            assert len(good) <= len(ext_in_r)


def test_axis_projection_requires_box():
    notbox = Region.from_points([(0, 0), (1, 1)])
    with pytest.raises(ValueError):
        axis_projection(notbox, notbox, 0)


def test_fill_closes_holes():
    ring = Region.from_points(
        [(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)]
    )
    assert (1, 1) in fill(ring)
    assert len(fill(ring)) == 9


def test_region_serialization_roundtrip():
    r = Region.from_points([(0, 1), (-2, 3)])
    assert Region.from_json(r.to_json(), 2) == r
