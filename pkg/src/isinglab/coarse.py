"""Multiscale coarse-graining: admissible cubes, boundary pairs, the
symmetric-difference series with its explicit constants, discrete-geometry
lemma audits, the d2 metric, covering numbers, and partial volumes.

Scales are ``r * ell`` with an explicit scale step ``r`` (r = 1 reproduces the
plain dyadic ladder, larger r the long-range variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lattice import (
    Cube,
    CubeCollection,
    Point,
    Region,
    build_rect,
    min_cube_covering,
    neighbors,
)
from .census import CensusResult, U, _u


# -- explicit constants -----------------------------------------------------------


def projection_constant(d: int, lam: float) -> float:
    """c(d, lambda): closed form 2d + (d-2) d 2^(d-1) / (1-lambda); equals 4 in
    the plane for every lambda."""
    if d < 2 or not 0 < lam < 1:
        raise ValueError("need d >= 2 and 0 < lambda < 1")
    return 2.0 * d + (d - 2) * d * 2.0 ** (d - 1) / (1.0 - lam)


def projection_constant_recursive(d: int, lam: float) -> float:
    """The induction form of c(d, lambda); must agree with the closed form."""
    if d == 2:
        return 4.0
    prev = projection_constant_recursive(d - 1, (lam + 1.0) / 2.0)
    return d / (d - 1.0) * (prev + (d - 1.0) * 2.0 ** (d - 1) / (1.0 - lam))


@dataclass(frozen=True)
class GeometryConstants:
    """The coarse-graining constants for one dimension (lambda fixed at 7/8).

    ``b1 = 2 d b`` is the constant the pair-overcounting argument actually
    yields (the pair bound is ``2^(l(d-1)) <= b |boundary|`` per boundary pair,
    and each boundary point is shared by at most 2d pairs); the variant with b
    in the denominator fails already on a single-site interior.
    """

    d: int
    lam: float = 7.0 / 8.0

    @property
    def c(self) -> float:
        return projection_constant(self.d, self.lam)

    @property
    def b(self) -> float:
        return max(8.0, (2.0 * self.c + 1.0) * 2.0 ** (1.0 - 1.0 / self.d))

    @property
    def b1(self) -> float:
        return 2.0 * self.d * self.b

    @property
    def b2(self) -> float:
        return self.b * 2.0 ** (self.d + 1)

    @property
    def b3(self) -> float:
        return math.sqrt(self.b2) * (math.sqrt(2.0) + 1.0)

    def as_dict(self) -> dict:
        return {"d": self.d, "lam": self.lam, "c": self.c, "b": self.b,
                "b1": self.b1, "b2": self.b2, "b3": self.b3}


# -- admissible cubes -------------------------------------------------------------


@dataclass(frozen=True)
class CoarseRegion:
    """Admissible cubes of one scale and the region they cover."""

    ell: int
    r: int
    dim: int
    admissible: CubeCollection

    @property
    def scale(self) -> int:
        return self.r * self.ell

    def covered(self) -> Region:
        return self.admissible.covered_region(self.dim)

    def covered_size(self) -> int:
        return len(self.admissible) * (1 << (self.scale * self.dim))


def coarse_region(interior: Region, ell: int, r: int = 1) -> CoarseRegion:
    """Cubes of scale r*ell holding at least half their points in the interior."""
    if ell < 0 or r < 1:
        raise ValueError("need ell >= 0 and r >= 1")
    scale = r * ell
    d = interior.dim
    half = (1 << (scale * d)) / 2.0
    counts: dict[Point, int] = {}
    s = 1 << scale
    for p in interior.points:
        a = tuple(c // s for c in p)
        counts[a] = counts.get(a, 0) + 1
    anchors = frozenset(a for a, k in counts.items() if k >= half)
    return CoarseRegion(ell, r, d, CubeCollection(scale, anchors))


def boundary_pairs(cr: CoarseRegion) -> tuple:
    """Oriented pairs (admissible anchor, face-adjacent non-admissible anchor)."""
    anchors = cr.admissible.anchors
    out = []
    for a in sorted(anchors):
        for q in neighbors(a):
            if q not in anchors:
                out.append((a, q))
    return tuple(out)


def reconstruct_from_pairs(pairs: Sequence[tuple], scale: int, dim: int) -> Region:
    """Rebuild the covered region from its boundary pairs (round-trip check).

    The admissible anchors are the ones appearing on the inside of a pair,
    plus every anchor enclosed by the pair boundary (anchors from which the
    outside cannot be reached without using a pair edge)."""
    if not pairs:
        return Region.empty(dim)
    inside = {p[0] for p in pairs}
    outside = {p[1] for p in pairs}
    blocked = {(a, b) for a, b in pairs} | {(b, a) for a, b in pairs}
    pts = inside | outside
    lo = tuple(min(p[k] for p in pts) - 1 for k in range(dim))
    hi = tuple(max(p[k] for p in pts) + 1 for k in range(dim))
    seen = {lo}
    stack = [lo]
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in seen or not all(l <= c <= h for l, c, h in zip(lo, q, hi)):
                continue
            if (p, q) in blocked:
                continue
            seen.add(q)
            stack.append(q)
    anchors = [p for p in build_rect(lo, hi).points if p not in seen]
    col = CubeCollection(scale, frozenset(anchors))
    return col.covered_region(dim)


# -- the coarse series audit -------------------------------------------------------


def coarse_series_stats(interior: Region, ell: int, r: int = 1) -> dict:
    cr = coarse_region(interior, ell, r)
    return {
        "ell": ell,
        "n_admissible": len(cr.admissible),
        "n_pairs": len(boundary_pairs(cr)),
        "covered": cr.covered(),
    }


def coarse_series_audit(
    interior: Region,
    gamma_size: int,
    ell_max: int,
    constants: GeometryConstants,
    r: int = 1,
) -> dict:
    """Check |boundary pairs at scale l| <= b1 |gamma| / 2^(r l (d-1)) and
    |B_l delta B_{l+1}| <= b2 2^(r l) |gamma| for l = 0..ell_max."""
    d = interior.dim
    rows = []
    ok = True
    prev_cover = None
    for ell in range(ell_max + 2):
        st = coarse_series_stats(interior, ell, r)
        rows.append(st)
    for ell in range(ell_max + 1):
        pair_bound = constants.b1 * gamma_size / 2.0 ** (r * ell * (d - 1))
        sym = len(rows[ell]["covered"].difference(rows[ell + 1]["covered"])) + len(
            rows[ell + 1]["covered"].difference(rows[ell]["covered"])
        )
        sym_bound = constants.b2 * 2.0 ** (r * ell) * gamma_size
        rows[ell]["pair_slack"] = pair_bound - rows[ell]["n_pairs"]
        rows[ell]["sym_diff"] = sym
        rows[ell]["sym_slack"] = sym_bound - sym
        if rows[ell]["pair_slack"] < 0 or rows[ell]["sym_slack"] < 0:
            ok = False
    for row in rows:
        row.pop("covered", None)
    return {"passed": ok, "rows": rows[: ell_max + 1]}


# -- vectorized audit over a census corpus ------------------------------------------


def _census_block_masks(half: int, scale_exp: int):
    """Bitmasks of the absolute 2^scale-aligned blocks meeting the census box,
    together with their anchor grid layout."""
    size = 2 * half + 1
    s = 1 << scale_exp
    lo_a = (-half) // s
    hi_a = half // s
    anchors = [(ax, ay) for ax in range(lo_a, hi_a + 1) for ay in range(lo_a, hi_a + 1)]
    masks = []
    for ax, ay in anchors:
        m = 0
        for x in range(max(-half, ax * s), min(half, (ax + 1) * s - 1) + 1):
            for y in range(max(-half, ay * s), min(half, (ay + 1) * s - 1) + 1):
                m |= 1 << ((x + half) * size + (y + half))
        masks.append(m)
    grid = hi_a - lo_a + 1
    return anchors, masks, grid


def census_coarse_audit(census: CensusResult, constants: GeometryConstants,
                        ell_max: int = 2, r: int = 1) -> dict:
    """The coarse-series audit over every census entry, fully vectorized.

    Admissibility patterns per scale are packed into small integers, pair and
    intersection counts come from lookup tables over those patterns, and the
    per-entry bounds use each entry's own face count.
    """
    if r != 1:
        raise ValueError("the census audit covers the unit scale step")
    half = census.half
    d = 2
    A = census.interiors
    n_int = len(A)
    size_a = np.bitwise_count(A).astype(np.int64)

    adm_patterns = []
    block_counts_sum = []  # |A ∩ B_l| per interior
    grids = []
    for ell in range(0, ell_max + 2):
        anchors, masks, grid = _census_block_masks(half, r * ell)
        cube_size = 1 << (r * ell * d)
        need = cube_size / 2.0
        pat = np.zeros(n_int, dtype=np.int64)
        inter = np.zeros(n_int, dtype=np.int64)
        for k, m in enumerate(masks):
            cnt = np.bitwise_count(A & _u(m)).astype(np.int64)
            adm = cnt >= need
            pat |= adm.astype(np.int64) << k
            inter += np.where(adm, cnt, 0)
        adm_patterns.append(pat)
        block_counts_sum.append(inter)
        grids.append(grid)

    def pair_lut(grid: int) -> np.ndarray:
        n_blocks = grid * grid
        lut = np.zeros(1 << n_blocks, dtype=np.int64)
        for pat in range(1 << n_blocks):
            total = 0
            for k in range(n_blocks):
                if not pat >> k & 1:
                    continue
                ax, ay = divmod(k, grid)
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    bx, by = ax + dx, ay + dy
                    if 0 <= bx < grid and 0 <= by < grid and pat >> (bx * grid + by) & 1:
                        continue
                    total += 1
            lut[pat] = total
        return lut

    def nesting_lut(grid_lo: int, grid_hi: int, ell: int) -> np.ndarray:
        """|B_l ∩ B_{l+1}| = sum over admissible l-blocks inside admissible
        (l+1)-blocks of the l-cube volume, as LUT over (pat_lo, pat_hi)."""
        anchors_lo, _, _ = _census_block_masks(half, r * ell)
        anchors_hi, _, _ = _census_block_masks(half, r * (ell + 1))
        hi_index = {a: i for i, a in enumerate(anchors_hi)}
        vol = 1 << (r * ell * d)
        parents = [hi_index[(ax // 2, ay // 2)] for ax, ay in anchors_lo]
        lut = np.zeros((1 << len(anchors_lo), 1 << len(anchors_hi)), dtype=np.int64)
        for lo_pat in range(1 << len(anchors_lo)):
            for hi_pat in range(1 << len(anchors_hi)):
                tot = 0
                for k in range(len(anchors_lo)):
                    if lo_pat >> k & 1 and hi_pat >> parents[k] & 1:
                        tot += vol
                lut[lo_pat, hi_pat] = tot
        return lut

    pairs = []
    b_sizes = []
    for ell in range(0, ell_max + 2):
        grid = grids[ell]
        if grid * grid <= 16:
            lut = pair_lut(grid)
            pairs.append(lut[adm_patterns[ell]])
        elif ell == 0:
            # every interior point is an admissible 0-cube, so the pair count
            # is exactly the edge-boundary size
            pairs.append(census.interior_faces.astype(np.int64))
        else:
            raise ValueError("census audit scale out of range")
        vol = 1 << (r * ell * d)
        b_sizes.append(np.bitwise_count(adm_patterns[ell].astype(U)).astype(np.int64) * vol)

    sym_diffs = []
    for ell in range(0, ell_max + 1):
        if ell == 0:
            inter = block_counts_sum[1]  # |A ∩ B_1| since B_0 = A
            sym = size_a + b_sizes[1] - 2 * inter
        else:
            grid_lo, grid_hi = grids[ell], grids[ell + 1]
            if (1 << grid_lo * grid_lo) * (1 << grid_hi * grid_hi) <= (1 << 26):
                lut = nesting_lut(grid_lo, grid_hi, ell)
                inter = lut[adm_patterns[ell], adm_patterns[ell + 1]]
            else:
                raise ValueError("census audit scale out of range")
            sym = b_sizes[ell] + b_sizes[ell + 1] - 2 * inter
        sym_diffs.append(sym)

    faces = census.entry_faces.astype(np.float64)
    idx = census.entry_interior
    result_rows = []
    overall_ok = True
    for ell in range(0, ell_max + 1):
        pair_count = pairs[ell][idx].astype(np.float64)
        pair_bound = constants.b1 * faces / 2.0 ** (r * ell * (d - 1))
        pair_slack = pair_bound - pair_count
        sym = sym_diffs[ell][idx].astype(np.float64)
        sym_bound = constants.b2 * 2.0 ** (r * ell) * faces
        sym_slack = sym_bound - sym
        row = {
            "ell": ell,
            "n_entries": int(len(faces)),
            "min_pair_slack": float(pair_slack.min()),
            "min_sym_slack": float(sym_slack.min()),
            "pair_violations": int((pair_slack < 0).sum()),
            "sym_violations": int((sym_slack < 0).sum()),
        }
        overall_ok &= row["pair_violations"] == 0 and row["sym_violations"] == 0
        result_rows.append(row)
    return {"passed": bool(overall_ok), "rows": result_rows}


# -- discrete-geometry lemma audits ----------------------------------------------------


def _projections(a_set: frozenset, lo: Point, hi: Point, d: int):
    """Per-axis projections of a_set within the box [lo, hi]; returns the list
    of (projection size, good size, bad size)."""
    out = []
    for axis in range(d):
        face = [()]
        for k in range(d):
            if k == axis:
                continue
            face = [f + (c,) for f in face for c in range(lo[k], hi[k] + 1)]
        proj = good = bad = 0
        for f in face:
            line = []
            for c in range(lo[axis], hi[axis] + 1):
                p = f[:axis] + (c,) + f[axis:]
                line.append(p in a_set)
            if any(line):
                proj += 1
                if all(line):
                    bad += 1
                else:
                    good += 1
        out.append((proj, good, bad))
    return out


def geometry_lemma1_audit(
    rect_dims: Sequence[int],
    lam: float = 7.0 / 8.0,
    n_samples: int | None = None,
    seed: int = 0,
) -> dict:
    """Projection-sum lemma: over subsets A of the rectangle satisfying
    |P_i(A)| <= lam |R_i| for all axes, check
    sum_i |P_i(A)| <= c(d, lam) |ext boundary of A inside R|."""
    d = len(rect_dims)
    c = projection_constant(d, lam)
    lo = tuple(0 for _ in rect_dims)
    hi = tuple(s - 1 for s in rect_dims)
    cells = build_rect(lo, hi).points
    n = len(cells)
    exhaustive = n <= 12 and n_samples is None
    if not exhaustive and n_samples is None:
        n_samples = 4096
    rng = np.random.Generator(np.random.Philox(key=seed))
    face_sizes = []
    for axis in range(d):
        fs = 1
        for k in range(d):
            if k != axis:
                fs *= rect_dims[k]
        face_sizes.append(fs)

    def subsets():
        if exhaustive:
            for mask in range(1 << n):
                yield frozenset(cells[i] for i in range(n) if mask >> i & 1)
        else:
            for _ in range(n_samples):
                keep = rng.random(n) < rng.uniform(0.2, 0.8)
                yield frozenset(c for c, k in zip(cells, keep) if k)

    checked = skipped = 0
    min_slack = math.inf
    min_good_slack = math.inf
    witness = None
    for a_set in subsets():
        projs = _projections(a_set, lo, hi, d)
        if any(p > lam * fs for (p, _, _), fs in zip(projs, face_sizes)):
            skipped += 1
            continue
        checked += 1
        # |ext boundary of A inside R| counts cells of R \ A adjacent to A
        bset = set()
        for p in a_set:
            for q in neighbors(p):
                if q not in a_set and all(l <= cc <= h for l, cc, h in zip(lo, q, hi)):
                    bset.add(q)
        bnd = len(bset)
        total_proj = sum(p for p, _, _ in projs)
        slack = c * bnd - total_proj
        good_slack = min(bnd - g for _, g, _ in projs)
        if slack < min_slack:
            min_slack = slack
            witness = sorted(a_set)
        min_good_slack = min(min_good_slack, good_slack)
    return {
        "constant": c,
        "checked": checked,
        "skipped": skipped,
        "exhaustive": exhaustive,
        "min_slack": min_slack,
        "min_good_point_slack": min_good_slack,
        "witness": witness,
        "passed": checked > 0 and min_slack >= 0,
    }


def geometry_lemma2_audit(ell: int, d: int = 2, constants: GeometryConstants | None = None,
                          n_samples: int | None = None, seed: int = 0) -> dict:
    """Cube-pair lemma: for A meeting the half-full/half-empty condition on two
    face-adjacent l-cubes, check 2^(l(d-1)) <= b |ext boundary of A in U|."""
    if constants is None:
        constants = GeometryConstants(d)
    b = constants.b
    c1 = Cube(ell, tuple([0] * d))
    c2 = Cube(ell, tuple([1] + [0] * (d - 1)))
    cells1 = list(c1.points())
    cells2 = list(c2.points())
    cells = cells1 + cells2
    n = len(cells)
    half_size = len(cells1) / 2.0
    exhaustive = n <= 12 and n_samples is None
    if not exhaustive and n_samples is None:
        n_samples = 4096
    rng = np.random.Generator(np.random.Philox(key=seed))
    uset = frozenset(cells)

    def subsets():
        if exhaustive:
            for mask in range(1 << n):
                yield [mask >> i & 1 for i in range(n)]
        else:
            for _ in range(n_samples):
                yield (rng.random(n) < rng.uniform(0.2, 0.8)).astype(int).tolist()

    checked = skipped = 0
    min_slack = math.inf
    target = 2.0 ** (ell * (d - 1))
    for keep in subsets():
        in1 = sum(keep[: len(cells1)])
        in2 = sum(keep[len(cells1):])
        if not (in1 >= half_size and in2 < half_size):
            skipped += 1
            continue
        checked += 1
        a_set = {c for c, k in zip(cells, keep) if k}
        bset = set()
        for p in a_set:
            for q in neighbors(p):
                if q not in a_set and q in uset:
                    bset.add(q)
        slack = b * len(bset) - target
        min_slack = min(min_slack, slack)
    return {
        "b": b,
        "checked": checked,
        "skipped": skipped,
        "exhaustive": exhaustive,
        "min_slack": min_slack,
        "passed": checked > 0 and min_slack >= 0,
    }


# -- d2 metric, covering numbers, partial volume ------------------------------------------


def d2_distance(i1: Region, i2: Region, eps: float = 1.0) -> float:
    """2 eps sqrt(|I1 delta I2|): the metric of the concentration argument."""
    sym = len(i1.difference(i2)) + len(i2.difference(i1))
    return 2.0 * eps * math.sqrt(sym)


def census_admissible_patterns(census: CensusResult, ells: Iterable[int], r: int = 1) -> dict:
    """Packed admissibility patterns per scale for every census interior."""
    half = census.half
    A = census.interiors
    out = {}
    for ell in ells:
        anchors, masks, grid = _census_block_masks(half, r * ell)
        need = (1 << (r * ell * 2)) / 2.0
        pat = np.zeros(len(A), dtype=np.int64)
        for k, m in enumerate(masks):
            adm = np.bitwise_count(A & _u(m)) >= need
            pat |= adm.astype(np.int64) << k
        out[ell] = pat
    return out


def covering_number_estimate(
    census: CensusResult,
    n_faces: int,
    eps: float,
    constants: GeometryConstants,
    ell_max: int = 3,
    r: int = 1,
) -> dict:
    """Covering-number table for the size class |gamma| = n and its Dudley
    integral, evaluated as an upper Riemann sum over the dyadic radius ladder.

    N at radius 4 eps b3 2^(r l / 2) sqrt(n) is bounded by the number of
    distinct admissible-cube regions B_l over the class; N at radius zero is
    the number of distinct interiors.
    """
    sel = census.entry_faces == n_faces
    interiors = np.unique(census.entry_interior[sel])
    if len(interiors) == 0:
        return {"n": n_faces, "table": [], "dudley_integral": 0.0, "n_interiors": 0}
    pats = census_admissible_patterns(census, range(0, ell_max + 1), r)
    n0 = len(interiors)
    table = [{"ell": 0, "radius": 0.0, "n_cover": int(n0)}]
    radii = []
    counts = []
    for ell in range(1, ell_max + 1):
        radius = 4.0 * eps * constants.b3 * 2.0 ** (r * ell / 2.0) * math.sqrt(n_faces)
        distinct = len(np.unique(pats[ell][interiors]))
        table.append({"ell": ell, "radius": radius, "n_cover": int(distinct)})
        radii.append(radius)
        counts.append(distinct)
    # upper Riemann sum: integrand sqrt(log N) is flat between ladder radii
    integral = radii[0] * math.sqrt(math.log(max(n0, 1)))
    for k in range(1, len(radii)):
        integral += (radii[k] - radii[k - 1]) * math.sqrt(math.log(max(counts[k - 1], 1)))
    return {
        "n": n_faces,
        "n_interiors": int(n0),
        "table": table,
        "dudley_integral": float(integral),
    }


def partial_volume(a: Region, r: int, ell: int) -> int:
    """V_r^ell(a) = sum of minimal covering sizes |C_(r n)(a)| for n from ell
    to ceil(log_{2^r}(diam a)); single points use the n_r = 0 convention."""
    if r < 1 or ell < 0:
        raise ValueError("need r >= 1 and ell >= 0")
    if not len(a):
        return 0
    diam = a.diameter("linf")
    n_r = 0 if diam <= 1 else math.ceil(math.log(diam, 2 ** r))
    total = 0
    for n in range(ell, n_r + 1):
        total += len(min_cube_covering(a, r * n))
    return total


def subordinated_count(outer: CubeCollection, inner_scale: int, v: int, d: int) -> int:
    """Number of collections of inner_scale-cubes subordinated to ``outer``
    with exactly v cubes: binom(2^((m-n) d) |outer|, v)."""
    if inner_scale > outer.m:
        raise ValueError("inner scale must not exceed the outer scale")
    if v < 0:
        raise ValueError("v must be non-negative")
    slots = (1 << ((outer.m - inner_scale) * d)) * len(outer)
    return math.comb(slots, v)
