"""Disorder machinery: field sampling, sign-flip maps, Delta_A concentration
audits, greedy lattice animals, and the joint-measure Peierls estimate.

Field samples are reproducible: values are drawn from a Philox generator keyed
by the seed, in region point order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .lattice import Point, Region, edge_boundary, exterior_boundary, inner_boundary, neighbors
from .model import (
    BoundaryCondition,
    FieldSample,
    FieldSpec,
    InteractionSpec,
    ModelInstance,
    PLUS,
)
from .exact import CapacityError, ExactState, delta_ensemble

WILSON_Z = 2.5758293035489004  # two-sided 99%


def sample_field(region: Region, dist: str = "gaussian", eps: float = 1.0, seed: int = 0) -> FieldSample:
    """I.i.d. field values on the region: standard Gaussian or symmetric +-1."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    n = len(region)
    if dist == "gaussian":
        vals = rng.standard_normal(n)
    elif dist == "bernoulli":
        vals = rng.choice((-1.0, 1.0), size=n)
    else:
        raise ValueError(f"unknown field distribution {dist!r}")
    return FieldSample(region, tuple(float(v) for v in vals), dist=dist, strength=eps, seed=seed)


def field_matrix(region: Region, dist: str, n_samples: int, seed: int) -> np.ndarray:
    """(n_samples, |region|) matrix of raw field values, one Philox draw."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    if dist == "gaussian":
        return rng.standard_normal((n_samples, len(region)))
    if dist == "bernoulli":
        return rng.choice((-1.0, 1.0), size=(n_samples, len(region)))
    raise ValueError(f"unknown field distribution {dist!r}")


def flip_field(sample: FieldSample, a: Region) -> FieldSample:
    """tau_A: negate the field on A (an involution; tau_A tau_B = tau_{A xor B})."""
    aset = a.point_set
    vals = tuple(
        -v if p in aset else v for p, v in zip(sample.region.points, sample.values)
    )
    return FieldSample(sample.region, vals, sample.dist, sample.strength, sample.seed)


def wilson_upper(successes: int, n: int, z: float = WILSON_Z) -> float:
    """Upper end of the Wilson score interval for a binomial proportion."""
    if n == 0:
        return 1.0
    p = successes / n
    denom = 1.0 + z * z / n
    center = p + z * z / (2 * n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return (center + half) / denom


def delta_tail_audit(
    region: Region,
    a: Region,
    a_prime: Region,
    eps: float = 0.5,
    n_samples: int = 10_000,
    beta: float = 1.0,
    J: float = 1.0,
    bc: BoundaryCondition = PLUS,
    seed: int = 0,
    lambdas: Sequence[float] = (0.5, 1.0, 2.0),
    ci_slack: float = 0.01,
) -> dict:
    """Empirical audit of the Gaussian concentration consequences for Delta_A.

    Checks the centered mean, the tail bound
    ``P(|Delta_A| >= t) <= 2 exp(-t^2 / (8 eps^2 |A|))`` against Wilson upper
    confidence limits, and the distributional identity of
    ``Delta_A - Delta_A'`` with ``Delta_{A xor A'}`` by a two-sample KS test on
    independent ensembles.
    """
    inter = InteractionSpec(J=J)
    H1 = field_matrix(region, "gaussian", n_samples, seed)
    H2 = field_matrix(region, "gaussian", n_samples, seed + 1)
    sym = a.union(a_prime).difference(a.intersection(a_prime))
    d1 = delta_ensemble(region, inter, bc, beta, eps, [a, a_prime], H1)
    d2 = delta_ensemble(region, inter, bc, beta, eps, [sym], H2)
    delta_a = d1[0]
    mean = float(delta_a.mean())
    se = float(delta_a.std(ddof=1) / math.sqrt(n_samples))
    tails = []
    for t in lambdas:
        k = int((np.abs(delta_a) >= t).sum())
        bound = 2.0 * math.exp(-(t * t) / (8.0 * eps * eps * len(a)))
        upper = wilson_upper(k, n_samples)
        tails.append(
            {
                "lambda": t,
                "empirical": k / n_samples,
                "wilson_upper": upper,
                "bound": bound,
                "passed": upper <= bound + ci_slack,
            }
        )
    ks = stats.ks_2samp(d1[0] - d1[1], d2[0])
    return {
        "mean": mean,
        "mean_se": se,
        "mean_centered": abs(mean) <= WILSON_Z * se,
        "tails": tails,
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "n_samples": n_samples,
        "passed": all(t["passed"] for t in tails),
    }


# -- greedy lattice animals ----------------------------------------------------


@dataclass
class AnimalResult:
    best_set: Region
    best_ratio: float
    k_max: int
    boundary_kind: str
    n_sets: int


def _boundary_size(a: Region, kind: str) -> int:
    if kind == "edge":
        return len(edge_boundary(a))
    if kind == "exterior":
        return len(exterior_boundary(a))
    if kind == "inner":
        return len(inner_boundary(a))
    raise ValueError(f"unknown boundary kind {kind!r}")


def _animal_capacity(k_max: int, d: int):
    if (d == 2 and k_max > 10) or (d == 3 and k_max > 7) or d > 3:
        raise CapacityError("animal enumeration capped at k_max 10 (d=2) / 7 (d=3)")


_ANIMAL_CACHE: dict = {}


def connected_sets_bfs(d: int, k_max: int) -> list[tuple[Point, ...]]:
    """All NN-connected sets containing the origin with at most k_max cells,
    by breadth-first growth with canonical (sorted-tuple) deduplication."""
    _animal_capacity(k_max, d)
    cached = _ANIMAL_CACHE.get((d, k_max))
    if cached is not None:
        return cached
    origin = tuple([0] * d)
    current = {(origin,)}
    out = [(origin,)]
    for _ in range(k_max - 1):
        nxt = set()
        for s in current:
            sset = set(s)
            for p in s:
                for q in neighbors(p):
                    if q in sset:
                        continue
                    grown = tuple(sorted(sset | {q}))
                    if grown not in nxt:
                        nxt.add(grown)
        out.extend(sorted(nxt))
        current = nxt
    _ANIMAL_CACHE[(d, k_max)] = out
    return out


def connected_sets_exclusion(d: int, k_max: int) -> list[tuple[Point, ...]]:
    """Independent enumerator: rooted depth-first scan with an exclusion set,
    which generates each connected origin set exactly once without hashing."""
    _animal_capacity(k_max, d)
    origin = tuple([0] * d)
    out = []

    def rec(s: list, ext: list, banned: frozenset):
        out.append(tuple(sorted(s)))
        if len(s) == k_max:
            return
        local_ban = set(banned)
        for i, v in enumerate(ext):
            new_ext = ext[i + 1 :] + [
                q for q in sorted(neighbors(v)) if q not in local_ban and q not in s and q not in ext
            ]
            rec(s + [v], [q for q in new_ext if q not in local_ban], frozenset(local_ban))
            local_ban.add(v)

    rec([origin], sorted(neighbors(origin)), frozenset([origin]))
    return out


_BOUNDARY_CACHE: dict = {}


def _sets_with_boundaries(d: int, k_max: int, boundary_kind: str, enumerator):
    key = (d, k_max, boundary_kind, enumerator.__name__)
    cached = _BOUNDARY_CACHE.get(key)
    if cached is not None:
        return cached
    out = []
    for s in enumerator(d, k_max):
        reg = Region.from_points(s, d)
        out.append((s, _boundary_size(reg, boundary_kind)))
    _BOUNDARY_CACHE[key] = out
    return out


def greedy_animal(
    sample: FieldSample,
    k_max: int,
    boundary_kind: str = "edge",
    enumerator=connected_sets_bfs,
) -> AnimalResult:
    """Exact sup over connected origin sets A with |A| <= k_max of
    sum_{x in A} h_x / |boundary(A)|."""
    d = sample.region.dim
    values = {p: v for p, v in zip(sample.region.points, sample.values)}
    best = None
    sets = _sets_with_boundaries(d, k_max, boundary_kind, enumerator)
    for s, bsize in sets:
        try:
            total = sum(values[p] for p in s)
        except KeyError as e:
            raise ValueError(f"field sample does not cover site {e}") from None
        ratio = total / bsize
        if best is None or ratio > best[0]:
            best = (ratio, s)
    return AnimalResult(
        best_set=Region.from_points(best[1], d),
        best_ratio=best[0],
        k_max=k_max,
        boundary_kind=boundary_kind,
        n_sets=len(sets),
    )


def animal_field_region(k_max: int, d: int = 2) -> Region:
    """The l1 ball the animals can reach: radius k_max - 1 around the origin."""
    pts = []

    def rec(prefix, budget):
        if len(prefix) == d:
            pts.append(tuple(prefix))
            return
        for c in range(-budget, budget + 1):
            rec(prefix + [c], budget - abs(c))

    rec([], k_max - 1)
    return Region.from_points(pts, d)


# -- joint-measure estimates ------------------------------------------------------


def joint_peierls_estimate(
    region: Region,
    eps: float,
    beta: float,
    n_fields: int = 200,
    J: float = 1.0,
    interaction: InteractionSpec | None = None,
    seed: int = 0,
    c_ref: float | None = None,
    origin: Point | None = None,
) -> dict:
    """E_h[ mu^+_{Lambda; beta, eps h}(sigma_0 = -1) ] over a field ensemble.

    The reference value ``exp(-C beta) + exp(-C / eps^2)`` is reported, never
    asserted; with eps = 0 a single exact evaluation is returned.
    """
    inter = interaction if interaction is not None else InteractionSpec(J=J)
    if origin is None:
        origin = tuple([0] * region.dim)
    idx = region.points.index(origin)

    def q_minus(field_spec: FieldSpec) -> float:
        m = ModelInstance(region, inter, field_spec, PLUS, beta)
        return 0.5 * (1.0 - ExactState(m).magnetizations()[idx])

    if eps == 0.0:
        q = q_minus(FieldSpec(kind="zero"))
        out = {"q_minus": q, "se": 0.0, "n_fields": 1}
    else:
        H = field_matrix(region, "gaussian", n_fields, seed)
        vals = []
        for row in H:
            sample = FieldSample(region, tuple(eps * v for v in row), "gaussian", 1.0, seed)
            vals.append(q_minus(FieldSpec(kind="sampled", sample=sample)))
        vals = np.asarray(vals)
        out = {
            "q_minus": float(vals.mean()),
            "se": float(vals.std(ddof=1) / math.sqrt(n_fields)),
            "n_fields": n_fields,
        }
    if c_ref is not None:
        ref = math.exp(-c_ref * beta)
        ref += math.exp(-c_ref / (eps * eps)) if eps > 0 else 0.0
        out["reference_bound"] = ref
    return out


def bad_event_estimate(
    census,
    region: Region,
    eps: float,
    c: float,
    beta: float = 1.0,
    J: float = 1.0,
    n_fields: int = 500,
    seed: int = 0,
    threshold: float = 0.25,
) -> dict:
    """Empirical probability of sup_gamma |Delta_I(gamma)| / (c |gamma|) over
    a census corpus exceeding the threshold, with a Wilson upper limit.

    Only the cavity-free entry per interior matters: nested contours share the
    interior and have more faces, so they never attain the supremum.
    """
    if eps < 0 or c <= 0:
        raise ValueError("need eps >= 0 and c > 0")
    interiors = [Region.from_points(pts, 2) for pts in census.iter_interiors()]
    for reg in interiors:
        for p in reg.points:
            if p not in region.point_set:
                raise ValueError("census corpus leaves the model region")
    sizes = np.asarray(census.interior_faces, dtype=float)
    if eps == 0.0:
        return {"p_bad": 0.0, "wilson_upper": wilson_upper(0, n_fields),
                "n_fields": n_fields, "sup_values": []}
    H = field_matrix(region, "gaussian", n_fields, seed)
    deltas = delta_ensemble(region, InteractionSpec(J=J), PLUS, beta, eps, interiors, H)
    ratios = np.abs(deltas) / (c * sizes[:, None])
    sup = ratios.max(axis=0)
    k = int((sup > threshold).sum())
    return {
        "p_bad": k / n_fields,
        "wilson_upper": wilson_upper(k, n_fields),
        "n_fields": n_fields,
        "sup_mean": float(sup.mean()),
        "sup_max": float(sup.max()),
    }
