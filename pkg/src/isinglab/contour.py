"""Contours: Peierls duals, the omega^L defect contour, multiscale
(M,a)-partition contours with labels, flip maps, erase costs, and the
small-box contour census.

Configurations for contour work live on all of Z^d: explicit values on a
finite set plus a constant background sign, so the incorrect-point set is
finite by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .lattice import (
    Cube,
    CubeCollection,
    Point,
    Region,
    connected_components,
    cube_distance_sq,
    exterior_boundary,
    fill,
    inner_boundary,
    min_cube_covering,
    neighbors,
)
from .model import ModelInstance, NORM_FUNCS
from .exact import CapacityError


# -- spin fields ---------------------------------------------------------------


@dataclass(frozen=True)
class SpinField:
    """Spins on Z^d: explicit values over a finite set, constant background."""

    values: dict
    background: int
    d: int

    def __post_init__(self):
        if self.background not in (-1, 1):
            raise ValueError("background sign must be +-1")

    def at(self, p: Point) -> int:
        return self.values.get(p, self.background)

    def support(self) -> list[Point]:
        """Sites where the field may differ from the background."""
        return sorted(p for p, s in self.values.items() if s != self.background)

    def flipped_on(self, sites: Iterable[Point]) -> "SpinField":
        vals = dict(self.values)
        for p in sites:
            vals[p] = -self.at(p)
        return SpinField(vals, self.background, self.d)


def spin_field_from_model(model: ModelInstance, spins) -> SpinField:
    """Embed a finite-volume configuration with plus/minus/omegaL bc into Z^d."""
    bc = model.bc
    region = model.region
    if isinstance(spins, dict):
        vals = {p: int(spins[p]) for p in region.points}
    else:
        vals = {p: int(s) for p, s in zip(region.points, spins)}
    if bc.kind == "plus":
        return SpinField(vals, 1, region.dim)
    if bc.kind == "minus":
        return SpinField(vals, -1, region.dim)
    if bc.kind == "omegaL":
        w = bc.wall_layer
        for k in _strip_points(bc.L, w - 1, region.dim):
            vals.setdefault(k, 1)
        return SpinField(vals, -1, region.dim)
    raise ValueError(f"bc kind {bc.kind!r} has no constant background")


def _strip_points(L: int, layer: int, d: int) -> list[Point]:
    pts = [()]
    for _ in range(d - 1):
        pts = [p + (c,) for p in pts for c in range(-L, L + 1)]
    return [p + (layer,) for p in pts]


# -- incorrect points and Peierls contours --------------------------------------


def incorrect_points(sf: SpinField) -> Region:
    """Sites whose closed l1-ball of radius one is not monochromatic."""
    cand = set()
    for p in sf.support():
        cand.add(p)
        cand.update(neighbors(p))
    out = []
    for x in cand:
        s0 = sf.at(x)
        ball = [sf.at(y) for y in neighbors(x)]
        if any(s != s0 for s in ball):
            out.append(x)
            continue
    # a site is incorrect also when its neighbors disagree among themselves;
    # with spin values in {-1,1} the ball is monochromatic iff all values
    # equal the center, so the check above is complete.
    return Region.from_points(out, sf.d)


Face = tuple[Point, Point]


def _canon_face(p: Point, q: Point) -> Face:
    return (p, q) if p <= q else (q, p)


def _face_hinges(face: Face) -> list[tuple]:
    """(d-2)-cell identifiers of a dual face, in doubled coordinates."""
    p, q = face
    d = len(p)
    center = tuple(a + b for a, b in zip(p, q))  # 2 * midpoint
    axis = next(k for k in range(d) if p[k] != q[k])
    out = []
    for m in range(d):
        if m == axis:
            continue
        for s in (1, -1):
            out.append(tuple(c + (s if k == m else 0) for k, c in enumerate(center)))
    return out


@dataclass(frozen=True)
class PeierlsContour:
    """One maximal dual-connected component of disagreement faces."""

    faces: frozenset
    interior: Region

    @property
    def size(self) -> int:
        return len(self.faces)

    def separates(self, a: Point, b: Point) -> bool:
        """True when every nearest-neighbor path from a to b crosses the contour."""
        lo, hi = self._padded_box()
        lo = tuple(min(l, min(a[k], b[k]) - 1) for k, l in enumerate(lo))
        hi = tuple(max(h, max(a[k], b[k]) + 1) for k, h in enumerate(hi))
        seen = {a}
        stack = [a]
        faces = self.faces
        while stack:
            p = stack.pop()
            if p == b:
                return False
            for q in neighbors(p):
                if q in seen or not all(l <= c <= h for l, c, h in zip(lo, q, hi)):
                    continue
                if _canon_face(p, q) in faces:
                    continue
                seen.add(q)
                stack.append(q)
        return True

    def _padded_box(self):
        pts = [p for f in self.faces for p in f]
        d = len(pts[0])
        lo = tuple(min(p[k] for p in pts) - 1 for k in range(d))
        hi = tuple(max(p[k] for p in pts) + 1 for k in range(d))
        return lo, hi


def disagreement_faces(sf: SpinField) -> set[Face]:
    faces = set()
    for p in sf.support():
        sp = sf.at(p)
        for q in neighbors(p):
            if sf.at(q) != sp:
                faces.add(_canon_face(p, q))
    return faces


def peierls_contours(sf: SpinField) -> list[PeierlsContour]:
    """Maximal dual-connected components of the disagreement faces.

    Dual connectivity: two faces are adjacent when they share a (d-2)-cell
    (an endpoint in d = 2).
    """
    if sf.d < 2:
        raise ValueError("Peierls contours need d >= 2")
    faces = disagreement_faces(sf)
    by_hinge: dict[tuple, list[Face]] = {}
    for f in faces:
        for hinge in _face_hinges(f):
            by_hinge.setdefault(hinge, []).append(f)
    contours = []
    remaining = set(faces)
    while remaining:
        start = min(remaining)
        comp = {start}
        stack = [start]
        remaining.discard(start)
        while stack:
            f = stack.pop()
            for hinge in _face_hinges(f):
                for g in by_hinge[hinge]:
                    if g in remaining:
                        remaining.discard(g)
                        comp.add(g)
                        stack.append(g)
        contours.append(PeierlsContour(frozenset(comp), _interior_of_faces(comp, sf.d)))
    contours.sort(key=lambda c: sorted(c.faces)[0])
    return contours


def _interior_of_faces(faces: Iterable[Face], d: int) -> Region:
    faces = set(faces)
    pts = [p for f in faces for p in f]
    lo = tuple(min(p[k] for p in pts) - 1 for k in range(d))
    hi = tuple(max(p[k] for p in pts) + 1 for k in range(d))
    start = lo
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in seen or not all(l <= c <= h for l, c, h in zip(lo, q, hi)):
                continue
            if _canon_face(p, q) in faces:
                continue
            seen.add(q)
            stack.append(q)
    from .lattice import build_rect

    inside = [p for p in build_rect(lo, hi).points if p not in seen]
    return Region.from_points(inside, d)


def gamma_L_extract(model: ModelInstance, spins) -> dict:
    """The defect contour of an omega^L configuration plus its event class.

    Returns the contour whose faces surround the +1 defect strip and whether
    it separates the first wall site from the defect site below it (the event
    written 0-underline; the complement is 0-overline).
    """
    if model.bc.kind != "omegaL":
        raise ValueError("gamma_L extraction needs the omegaL boundary condition")
    sf = spin_field_from_model(model, spins)
    d = sf.d
    w = model.bc.wall_layer
    probe = _canon_face(
        tuple([model.bc.L] * (d - 1) + [w - 1]), tuple([model.bc.L + 1] + [0] * (d - 2) + [w - 1])
    )
    gamma = None
    for c in peierls_contours(sf):
        if probe in c.faces:
            gamma = c
            break
    if gamma is None:
        raise RuntimeError("defect contour not found; malformed configuration")
    origin_wall = tuple([0] * (d - 1) + [w])
    below = tuple([0] * (d - 1) + [w - 1])
    separated = gamma.separates(origin_wall, below)
    return {"contour": gamma, "event": "0-under" if separated else "0-over"}


# -- (M, a)-partitions ----------------------------------------------------------


def default_a(d: int, alpha: float) -> float:
    if alpha <= d:
        raise ValueError("long-range exponent must exceed the dimension")
    return 3.0 * (d + 1) / min(alpha - d, 1.0)


def default_r(a: float, d: int) -> int:
    return 4 * math.ceil(math.log2(a + 1)) + d + 1


@dataclass(frozen=True)
class PartitionParams:
    """Parameters of the multiscale partition: distance factor M, exponent a,
    volume exponent delta (= d + 1), scale step r, and the cube-graph norm."""

    M: float
    a: float
    delta: int
    r: int
    norm: str = "l2"

    @classmethod
    def for_model(cls, d: int, alpha: float, M: float = 1.0,
                  r: int | None = None, norm: str = "l2") -> "PartitionParams":
        a = default_a(d, alpha)
        return cls(M=M, a=a, delta=d + 1, r=r if r is not None else default_r(a, d), norm=norm)


@dataclass(frozen=True)
class PartitionClass:
    region: Region
    step: int  # removal step in the construction (1-based)


def _volume_size(region: Region) -> int:
    return len(fill(region))


def ma_partition(a: Region, params: PartitionParams) -> list[PartitionClass]:
    """The multiscale construction: at step n, build the scale-(r n) cube graph
    with edges between cubes at distance <= M 2^(a r n), and remove the
    components whose covered area has filled volume <= 2^(r n (d+1))."""
    d = a.dim
    if params.r < 1:
        raise ValueError("scale step r must be >= 1")
    remaining = set(a.points)
    classes: list[PartitionClass] = []
    n = 0
    while remaining:
        n += 1
        scale = params.r * n
        current = Region.from_points(remaining, d)
        cover = min_cube_covering(current, scale)
        anchors = sorted(cover.anchors)
        threshold = params.M * 2.0 ** (params.a * scale)
        thr_sq = threshold * threshold
        k = len(anchors)
        adj = [[] for _ in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                dist = cube_distance_sq(anchors[i], anchors[j], scale, params.norm)
                close = dist <= thr_sq if params.norm == "l2" else dist <= threshold
                if close:
                    adj[i].append(j)
                    adj[j].append(i)
        comp_id = [-1] * k
        comps = []
        for i in range(k):
            if comp_id[i] >= 0:
                continue
            comp = [i]
            comp_id[i] = len(comps)
            stack = [i]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if comp_id[v] < 0:
                        comp_id[v] = len(comps)
                        comp.append(v)
                        stack.append(v)
            comps.append(comp)
        vol_cap = 2 ** (scale * (d + 1))
        for comp in comps:
            cubes = [Cube(scale, anchors[i]) for i in comp]
            pts = [p for c in cubes for p in c.points() if p in remaining]
            piece = Region.from_points(pts, d)
            if _volume_size(piece) <= vol_cap:
                classes.append(PartitionClass(piece, n))
                remaining.difference_update(piece.points)
        if n > 64:
            raise RuntimeError("partition construction failed to terminate")
    classes.sort(key=lambda c: c.region.points[0])
    return classes


def _exact_distance_gt(dist_sq: int, M: Fraction, vol: int, exponent: Fraction) -> bool:
    """Exact check of dist > M * vol^exponent using integer arithmetic.

    dist is given squared (l2); the comparison is dist^2 > M^2 vol^(2 exponent),
    i.e. (dist^2)^q > (M^2)^q vol^(2 p) with exponent = p/q.
    """
    e2 = 2 * exponent
    p, q = e2.numerator, e2.denominator
    lhs = Fraction(dist_sq) ** q
    rhs = (M * M) ** q * Fraction(vol) ** p
    return lhs > rhs


def class_distance_sq(r1: Region, r2: Region, norm: str = "l2"):
    best = None
    for p in r1.points:
        for q in r2.points:
            v = tuple(a - b for a, b in zip(p, q))
            if norm == "l2":
                dist = sum(c * c for c in v)
            elif norm == "l1":
                dist = sum(abs(c) for c in v)
            else:
                dist = max(abs(c) for c in v)
            if best is None or dist < best:
                best = dist
    return best


def partition_audit(classes: Sequence[PartitionClass], a: Region, params: PartitionParams) -> dict:
    """Check conditions (A) disjoint cover, (B) pairwise distance (exact
    arithmetic for the l2 norm), and (A1) single-component containment."""
    failures = []
    covered: set = set()
    for c in classes:
        overlap = covered.intersection(c.region.points)
        if overlap:
            failures.append({"condition": "A", "detail": f"overlap at {sorted(overlap)[:3]}"})
        covered.update(c.region.points)
    if covered != set(a.points):
        failures.append({"condition": "A", "detail": "classes do not cover the set"})

    M = Fraction(params.M)
    exponent = Fraction(params.a) / Fraction(params.delta)
    for i in range(len(classes)):
        for j in range(i + 1, len(classes)):
            ri, rj = classes[i].region, classes[j].region
            vol = min(_volume_size(ri), _volume_size(rj))
            dist = class_distance_sq(ri, rj, params.norm)
            if params.norm == "l2":
                ok = _exact_distance_gt(dist, M, vol, exponent)
            else:
                ok = _exact_distance_gt(dist * dist, M, vol, exponent)
            if not ok:
                failures.append(
                    {"condition": "B", "detail": f"classes {i} and {j}",
                     "dist_sq": dist, "min_volume": vol}
                )

    for i, c in enumerate(classes):
        comp_label = _complement_components(c.region, a)
        for j, other in enumerate(classes):
            if i == j:
                continue
            labels = {comp_label.get(p, "outside") for p in other.region.points}
            if len(labels) > 1:
                failures.append(
                    {"condition": "A1", "detail": f"class {j} straddles components of class {i}^c"}
                )
    return {"passed": not failures, "failures": failures, "n_classes": len(classes)}


def _complement_components(cls_region: Region, universe: Region) -> dict:
    """Label complement points near the configuration by the connected
    component of cls_region^c they belong to ('outside' = unbounded)."""
    pts = list(cls_region.points) + list(universe.points)
    d = cls_region.dim
    lo = tuple(min(p[k] for p in pts) - 1 for k in range(d))
    hi = tuple(max(p[k] for p in pts) + 1 for k in range(d))
    blocked = cls_region.point_set
    labels: dict = {}
    # unbounded component first, seeded from a corner
    stack = [lo]
    labels[lo] = "outside"
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in labels or q in blocked:
                continue
            if not all(l <= c <= h for l, c, h in zip(lo, q, hi)):
                continue
            labels[q] = "outside"
            stack.append(q)
    next_id = 0
    from .lattice import build_rect

    for p in build_rect(lo, hi).points:
        if p in labels or p in blocked:
            continue
        name = f"hole{next_id}"
        next_id += 1
        stack = [p]
        labels[p] = name
        while stack:
            u = stack.pop()
            for q in neighbors(u):
                if q in labels or q in blocked:
                    continue
                if not all(l <= c <= h for l, c, h in zip(lo, q, hi)):
                    continue
                labels[q] = name
                stack.append(q)
    return labels


# -- labelled long-range contours ------------------------------------------------


class LabelError(RuntimeError):
    """The configuration is not constant where a label must be read."""


@dataclass(frozen=True)
class LRContour:
    """A contour: a partition class plus the label map on its interiors."""

    support: Region
    exterior_label: int
    interiors: tuple  # tuple of (Region, label)
    step: int
    params: PartitionParams

    @property
    def size(self) -> int:
        return len(self.support)

    def interior(self) -> Region:
        pts = [p for reg, _ in self.interiors for p in reg.points]
        return Region.from_points(pts, self.support.dim) if pts else Region.empty(self.support.dim)

    def interior_signed(self, sign: int) -> Region:
        pts = [p for reg, lab in self.interiors if lab == sign for p in reg.points]
        return Region.from_points(pts, self.support.dim) if pts else Region.empty(self.support.dim)

    def volume(self) -> Region:
        return fill(self.support)


def _constant_sign(sf: SpinField, sites: Iterable[Point], what: str) -> int:
    signs = {sf.at(p) for p in sites}
    if len(signs) != 1:
        raise LabelError(f"configuration not constant on {what}")
    return signs.pop()


def _external_components(comps: list[Region]) -> list[int]:
    fills = [fill(c).point_set for c in comps]
    ext = []
    for k, fk in enumerate(fills):
        external = True
        for j, fj in enumerate(fills):
            if j == k or not (fj & fk):
                continue
            if not fj <= fk:
                external = False
                break
        ext.append(external)
    return [k for k, e in enumerate(ext) if e]


def label_contour(sf: SpinField, cls: PartitionClass, params: PartitionParams) -> LRContour:
    support = cls.region
    comps = connected_components(support)
    ext_idx = _external_components(comps)
    ext_union = Region.from_points(
        [p for k in ext_idx for p in comps[k].points], support.dim
    )
    ext_label = _constant_sign(
        sf, inner_boundary(fill(ext_union)).points, "the external inner boundary"
    )
    vol = fill(support)
    inter = vol.difference(support)
    labelled = []
    for comp in connected_components(inter):
        lab = _constant_sign(sf, inner_boundary(fill(comp)).points, "an interior component")
        labelled.append((comp, lab))
    return LRContour(support, ext_label, tuple(labelled), cls.step, params)


def lr_contours(sf: SpinField, params: PartitionParams) -> list[LRContour]:
    boundary = incorrect_points(sf)
    if not len(boundary):
        return []
    classes = ma_partition(boundary, params)
    return [label_contour(sf, c, params) for c in classes]


def flip_contours(sf: SpinField, contours: Sequence[LRContour]) -> SpinField:
    """Erase a compatible external family with plus exterior labels: keep
    sigma on I_+ and outside, negate on I_-, set +1 on the supports."""
    for g in contours:
        if g.exterior_label != 1:
            raise ValueError("flip map is defined for plus exterior labels")
    vals = dict(sf.values)
    for g in contours:
        for reg, lab in g.interiors:
            if lab == -1:
                for p in reg.points:
                    vals[p] = -sf.at(p)
        for p in g.support.points:
            vals[p] = 1
    return SpinField(vals, sf.background, sf.d)


# -- erase costs -------------------------------------------------------------------


def flip_region_energy_delta(model: ModelInstance, spins, flip_set: Region) -> dict:
    """H(sigma) - H(flip(sigma)) for a pure spin flip on ``flip_set`` plus the
    exact algebraic identity it must satisfy:

        H(sigma) - H(tau sigma) = -2 sum_{x in A, y outside A} J_xy s_x s_y

    (exterior spins resolved by the boundary condition, couplings truncated
    exactly as in the Hamiltonian)."""
    from .model import CompiledModel, hamiltonian, _as_spin_array

    region = model.region
    arr = _as_spin_array(region, spins)
    aset = flip_set.point_set
    for p in flip_set.points:
        if p not in region.point_set:
            raise ValueError("flip set must lie inside the model region")
    flipped = arr.copy()
    idx = {p: i for i, p in enumerate(region.points)}
    for p in flip_set.points:
        flipped[idx[p]] = -flipped[idx[p]]
    h0 = hamiltonian(model, arr)
    h1 = hamiltonian(model, flipped)
    delta = h0 - h1

    inter = model.interaction
    offsets = inter.neighbor_offsets(region.dim)
    cross = 0.0
    for p in flip_set.points:
        sp = arr[idx[p]]
        for off in offsets:
            q = tuple(a + b for a, b in zip(p, off))
            if q in aset:
                continue
            if q in idx:
                sq = arr[idx[q]]
            elif not model.bc.is_free and model.site_exists(q):
                sq = model.bc.value_at(q)
            else:
                continue
            cross += inter.coupling(p, q) * sp * sq
    return {"delta_h": float(delta), "identity_value": -2.0 * cross,
            "identity_residual": abs(float(delta) + 2.0 * cross)}


def erase_cost_audit(model: ModelInstance, spins, contour, c: float = 0.05) -> dict:
    """Energy cost of erasing one contour, the pure-flip identity residual,
    and the slack of the lower bound ``c (|gamma| + F_{I-} + F_sp)``."""
    from .model import boundary_flux

    if isinstance(contour, PeierlsContour):
        flip_set = contour.interior
        res = flip_region_energy_delta(model, spins, flip_set)
        f_int = boundary_flux(model, flip_set)["value"]
        bound = c * (contour.size + f_int)
        return {
            "delta_h": res["delta_h"],
            "identity_residual": res["identity_residual"],
            "lower_bound_slack": res["delta_h"] - bound,
        }
    if isinstance(contour, LRContour):
        region = model.region
        arr = list(spins if not isinstance(spins, dict) else [spins[p] for p in region.points])
        sf = spin_field_from_model(model, arr)
        erased = flip_contours(sf, [contour])
        new_spins = [erased.at(p) for p in region.points]
        from .model import hamiltonian

        delta = hamiltonian(model, arr) - hamiltonian(model, new_spins)
        ident = flip_region_energy_delta(model, spins, contour.interior())
        f_minus = boundary_flux(model, contour.interior_signed(-1))["value"]
        f_sp = boundary_flux(model, contour.support)["value"]
        bound = c * (contour.size + f_minus + f_sp)
        return {
            "delta_h": float(delta),
            "identity_residual": ident["identity_residual"],
            "lower_bound_slack": float(delta) - bound,
        }
    raise TypeError("contour must be a PeierlsContour or LRContour")


# -- the Peierls constant for alpha > d + 1 ------------------------------------------


def c1_alpha(alpha: float, d: int, cutoff: int = 200, norm: str = "l2") -> dict:
    """Truncated value of ``2 (1 - sum_{|k| >= 2} |k|^{-(alpha-1)})`` with a
    certified tail bound; certification fails (tail infinite) unless
    alpha > d + 1."""
    if alpha <= d:
        raise ValueError("alpha must exceed d")
    nf = NORM_FUNCS[norm]
    total = 0.0
    rng = range(-cutoff, cutoff + 1)

    def rec(prefix):
        nonlocal total
        if len(prefix) == d:
            if not any(prefix):
                return
            r = nf(prefix)
            if 2.0 <= r <= cutoff:
                total += r ** (-(alpha - 1))
            return
        for c in rng:
            rec(prefix + (c,))

    rec(())
    if alpha > d + 1:
        base = 2.0 ** (2 * d - 1) * math.e ** (d - 1)
        tail = base * cutoff ** (d - alpha + 1) / (alpha - d - 1)
        if norm == "l2":
            tail *= d ** ((alpha - 1) / 2.0)
        elif norm == "linf":
            tail *= float(d) ** (alpha - 1)
    else:
        tail = math.inf
    c1 = 2.0 * (1.0 - total)
    certified = math.isfinite(tail) and (c1 - 2.0 * tail) > 0.0
    return {
        "c1_truncated": c1,
        "tail_bound": 2.0 * tail if math.isfinite(tail) else math.inf,
        "c1_certified_lower": c1 - 2.0 * tail if math.isfinite(tail) else -math.inf,
        "certified": bool(certified),
        "cutoff": cutoff,
        "norm": norm,
    }


# -- census of small-box contours ------------------------------------------------------

# The exhaustive plus-bc census lives in its own module; re-exported here since
# it is part of the contour toolkit.
from .census import CensusResult, contour_census  # noqa: E402
