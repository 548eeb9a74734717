"""Correlation-inequality audits: GKS, FKG, duplicated-variable inequalities,
extremality, nested-volume monotonicity, and their consequences.

Every audit reports the minimum slack (oriented so that >= 0 means the
inequality holds) together with the witness instance attaining it, instead of
a bare boolean.  Hypothesis-violating instances are never generated; the
drawing helpers bake the hypotheses in.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .lattice import Point, Region, build_rect, neighbors
from .model import (
    BoundaryCondition,
    FieldSample,
    FieldSpec,
    InteractionSpec,
    ModelInstance,
    FREE,
    MINUS,
    PLUS,
)
from .exact import (
    DuplicatedState,
    ExactState,
    duplicated_from_bcs,
    spin_matrix,
)

SLACK_TOL = -1e-10


@dataclass
class InequalityReport:
    name: str
    min_slack: float
    witness: dict
    n_instances: int
    skipped: int = 0

    def passed(self, tol: float = SLACK_TOL) -> bool:
        return self.n_instances > 0 and self.min_slack >= tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "min_slack": self.min_slack,
            "witness": self.witness,
            "n_instances": self.n_instances,
            "skipped": self.skipped,
        }


def _rng(seed: int, tag: str) -> np.random.Generator:
    tag_key = sum(ord(c) * 131 ** k for k, c in enumerate(tag)) % (1 << 63)
    return np.random.Generator(np.random.Philox(key=[seed, tag_key]))


def _sampled_field(region: Region, values) -> FieldSpec:
    sample = FieldSample(region, tuple(float(v) for v in values), dist="gaussian",
                         strength=1.0, seed=0)
    return FieldSpec(kind="sampled", sample=sample)


class _Tracker:
    """Keeps the minimum slack plus the instance that attained it."""

    def __init__(self, name: str):
        self.name = name
        self.min_slack = np.inf
        self.witness: dict = {}
        self.count = 0
        self.skipped = 0

    def update(self, slack: float, **witness):
        self.count += 1
        if slack < self.min_slack:
            self.min_slack = float(slack)
            self.witness = witness

    def update_array(self, slacks: np.ndarray, describe, **extra):
        """Track the minimum of an array; `describe(flat_index)` labels it."""
        self.count += slacks.size
        k = int(np.argmin(slacks))
        v = float(slacks.flat[k])
        if v < self.min_slack:
            self.min_slack = v
            self.witness = dict(describe(k), **extra)

    def report(self) -> InequalityReport:
        slack = self.min_slack if self.count else np.nan
        return InequalityReport(self.name, float(slack), self.witness, self.count, self.skipped)


def _draw_common(rng) -> tuple[float, float]:
    J = float(rng.uniform(0.1, 2.0))
    beta = float(rng.uniform(0.2, 1.5))
    return J, beta


def _mask_sites(region: Region, mask: int) -> list[Point]:
    return [p for i, p in enumerate(region.points) if mask >> i & 1]


# -- GKS ---------------------------------------------------------------------


def audit_gks(box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    """GKS1 <sigma_A> >= 0 and GKS2 <sigma_A sigma_B> >= <sigma_A><sigma_B>
    with non-negative field, plus or free boundary condition."""
    rng = _rng(seed, "gks")
    n = len(box)
    t1, t2 = _Tracker("GKS1"), _Tracker("GKS2")
    subs = np.arange(1, 1 << n)
    sym = subs[:, None] ^ subs[None, :]
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        h = rng.uniform(0.0, 1.5, size=n)
        bc = PLUS if rng.integers(2) else FREE
        model = ModelInstance(box, InteractionSpec(J=J), _sampled_field(box, h), bc, beta)
        mono = ExactState(model).all_monomials()
        inst = {"draw": k, "J": J, "beta": beta, "bc": bc.kind}
        m = mono[subs]
        t1.update_array(m, lambda i: {"A": int(subs[i]), **inst})
        slack2 = mono[sym] - np.outer(m, m)
        t2.update_array(
            slack2,
            lambda i: {"A": int(subs[i // len(subs)]), "B": int(subs[i % len(subs)]), **inst},
        )
    return [t1.report(), t2.report()]


# -- FKG ----------------------------------------------------------------------


def audit_fkg(box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    """FKG over all pairs of cylinder up-events 1{sigma = +1 on A}: arbitrary
    field sign, arbitrary boundary condition."""
    rng = _rng(seed, "fkg")
    n = len(box)
    if n > 9:
        raise ValueError("FKG indicator audit is exhaustive only up to 9 sites")
    tr = _Tracker("FKG")
    masks = np.arange(1 << n)
    union = masks[:, None] | masks[None, :]
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        h = rng.uniform(-1.5, 1.5, size=n)
        bc_kind = rng.integers(4)
        if bc_kind == 0:
            bc = PLUS
        elif bc_kind == 1:
            bc = MINUS
        elif bc_kind == 2:
            bc = FREE
        else:
            ext = _random_exterior(box, rng)
            bc = BoundaryCondition(kind="explicit", spins=ext)
        model = ModelInstance(box, InteractionSpec(J=J), _sampled_field(box, h), bc, beta)
        p = ExactState(model).upset_probabilities()
        slack = p[union] - np.outer(p, p)
        inst = {"draw": k, "J": J, "beta": beta, "bc": bc.kind}
        tr.update_array(
            slack, lambda i: {"A": int(masks[i // len(masks)]), "B": int(masks[i % len(masks)]), **inst}
        )
    return [tr.report()]


def _random_exterior(box: Region, rng) -> dict:
    spins = {}
    inside = box.point_set
    for p in box.points:
        for q in neighbors(p):
            if q not in inside and q not in spins:
                spins[q] = int(rng.choice((-1, 1)))
    return spins


# -- duplicated-variable inequalities -----------------------------------------


def _st_moment_tables(ds: DuplicatedState) -> tuple[np.ndarray, np.ndarray]:
    """T[A] and S[B] product tables over the joint configurations, flattened."""
    n = ds.n
    S1 = ds.S[:, None, :]
    S2 = ds.S[None, :, :]
    t = (S1 - S2).reshape(-1, n)
    s = (S1 + S2).reshape(-1, n)
    T = np.ones((1 << n, t.shape[0]))
    P = np.ones((1 << n, t.shape[0]))
    for a in range(1, 1 << n):
        i = (a & -a).bit_length() - 1
        T[a] = T[a & (a - 1)] * t[:, i]
        P[a] = P[a & (a - 1)] * s[:, i]
    return T, P


def _dvi_slacks(ds: DuplicatedState):
    """min slacks of DVI.1 (both sides), DVI.2 and DVI.3 over all A,B."""
    T, P = _st_moment_tables(ds)
    w = ds.w.reshape(-1)
    mt = T @ w  # <t_A>
    ms = P @ w  # <s_B>
    mts = (T * w) @ P.T  # <t_A s_B>
    mtt = (T * w) @ T.T
    mss = (P * w) @ P.T
    slack1_lower = mts
    slack1_upper = np.outer(mt, ms) - mts
    slack2 = mtt - np.outer(mt, mt)
    slack3 = mss - np.outer(ms, ms)
    return slack1_lower, slack1_upper, slack2, slack3


def audit_dvi(box: Region, n_draws: int, seed: int, plus_eta: bool = False) -> list[InequalityReport]:
    """Duplicated-variable inequalities over all monomial pairs.

    ``plus_eta=False`` audits the free-free theorem under ``h_i +- h'_i >= 0``;
    ``plus_eta=True`` audits the corollary for the (+, eta) pair with a common
    non-negative field and eta drawn from {plus, minus, free, random}.
    """
    suffix = "+" if plus_eta else ""
    rng = _rng(seed, "dvi" + suffix)
    names = [f"DVI1{suffix}", f"DVI2{suffix}", f"DVI3{suffix}"]
    trackers = [_Tracker(nm) for nm in names]
    n = len(box)
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        inter = InteractionSpec(J=J)
        if plus_eta:
            h = rng.uniform(0.0, 1.5, size=n)
            field = _sampled_field(box, h)
            eta_kind = int(rng.integers(4))
            if eta_kind == 0:
                bc2 = PLUS
            elif eta_kind == 1:
                bc2 = MINUS
            elif eta_kind == 2:
                bc2 = FREE
            else:
                bc2 = BoundaryCondition(kind="explicit", spins=_random_exterior(box, rng))
            dm = duplicated_from_bcs(box, inter, field, PLUS, bc2, beta)
            inst = {"draw": k, "J": J, "beta": beta, "eta": bc2.kind}
        else:
            h = rng.uniform(0.0, 1.5, size=n)
            h2 = h * rng.uniform(-1.0, 1.0, size=n)  # |h'| <= h pointwise
            m1 = ModelInstance(box, inter, _sampled_field(box, h), FREE, beta)
            from .exact import DuplicatedModel

            dm = DuplicatedModel(m1, field2=_sampled_field(box, h2), bc2=FREE)
            inst = {"draw": k, "J": J, "beta": beta}
        ds = DuplicatedState(dm)
        s1lo, s1hi, s2, s3 = _dvi_slacks(ds)
        sz = s1lo.shape[0]

        def loc(i):
            return {"A": int(i // sz), "B": int(i % sz), **inst}

        trackers[0].update_array(np.minimum(s1lo, s1hi), loc)
        trackers[1].update_array(s2, loc)
        trackers[2].update_array(s3, loc)
    return [t.report() for t in trackers]


# -- extremality and volume monotonicity ---------------------------------------


def audit_extremality(box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    """<f>^- <= <f>^eta <= <f>^+ for cylinder up-events and random eta."""
    rng = _rng(seed, "extremality")
    n = len(box)
    if n > 6:
        raise ValueError("extremality audit is exhaustive only up to 6 sites")
    tr = _Tracker("extremality")
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        h = rng.uniform(-1.0, 1.0, size=n)
        field = _sampled_field(box, h)
        inter = InteractionSpec(J=J)
        p_plus = ExactState(ModelInstance(box, inter, field, PLUS, beta)).upset_probabilities()
        p_minus = ExactState(ModelInstance(box, inter, field, MINUS, beta)).upset_probabilities()
        eta = BoundaryCondition(kind="explicit", spins=_random_exterior(box, rng))
        p_eta = ExactState(ModelInstance(box, inter, field, eta, beta)).upset_probabilities()
        inst = {"draw": k, "J": J, "beta": beta}
        tr.update_array(p_eta - p_minus, lambda i: {"A": int(i), "side": "minus<=eta", **inst})
        tr.update_array(p_plus - p_eta, lambda i: {"A": int(i), "side": "eta<=plus", **inst})
    return [tr.report()]


def _sub_boxes(box: Region) -> list[Region]:
    """All proper sub-rectangles of a rectangular region."""
    lo, hi = box.bounding_box()
    d = box.dim
    out = []

    def rec(k, lo_acc, hi_acc):
        if k == d:
            sub = build_rect(tuple(lo_acc), tuple(hi_acc))
            if len(sub) < len(box):
                out.append(sub)
            return
        for a in range(lo[k], hi[k] + 1):
            for b in range(a, hi[k] + 1):
                rec(k + 1, lo_acc + [a], hi_acc + [b])

    rec(0, [], [])
    return out


def audit_state_monotonicity(box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    """<f>^+ non-increasing in the volume for up-events (any field sign)."""
    rng = _rng(seed, "nested")
    tr = _Tracker("state-monotonicity")
    subs = _sub_boxes(box)
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        h = rng.uniform(-1.0, 1.0, size=len(box))
        field_big = _sampled_field(box, h)
        inter = InteractionSpec(J=J)
        big = ExactState(ModelInstance(box, inter, field_big, PLUS, beta))
        p_big = big.upset_probabilities()
        hmap = dict(zip(box.points, h))
        for sub in subs:
            vals = [hmap[p] for p in sub.points]
            small = ExactState(
                ModelInstance(sub, inter, _sampled_field(sub, vals), PLUS, beta)
            )
            p_small = small.upset_probabilities()
            # embed sub-box masks into big-box masks
            pos = [box.points.index(p) for p in sub.points]
            for a in range(1, 1 << len(sub)):
                big_mask = 0
                for i in range(len(sub)):
                    if a >> i & 1:
                        big_mask |= 1 << pos[i]
                tr.update(
                    p_small[a] - p_big[big_mask],
                    draw=k, J=J, beta=beta, sub=str(sub.bounding_box()), A=a,
                )
    return [tr.report()]


def audit_correlation_monotonicity(box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    """GKS-regime volume monotonicity: <sigma_A>^+ down, <sigma_A>^f up."""
    rng = _rng(seed, "corrmono")
    tr = _Tracker("correlation-monotonicity")
    subs = _sub_boxes(box)
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        h = rng.uniform(0.0, 1.0, size=len(box))
        inter = InteractionSpec(J=J)
        hmap = dict(zip(box.points, h))
        mono_big = {
            "plus": ExactState(ModelInstance(box, inter, _sampled_field(box, h), PLUS, beta)).all_monomials(),
            "free": ExactState(ModelInstance(box, inter, _sampled_field(box, h), FREE, beta)).all_monomials(),
        }
        for sub in subs:
            vals = [hmap[p] for p in sub.points]
            pos = [box.points.index(p) for p in sub.points]
            for bc_kind, sign in (("plus", 1.0), ("free", -1.0)):
                bc = PLUS if bc_kind == "plus" else FREE
                mono_small = ExactState(
                    ModelInstance(sub, inter, _sampled_field(sub, vals), bc, beta)
                ).all_monomials()
                for a in range(1, 1 << len(sub)):
                    big_mask = 0
                    for i in range(len(sub)):
                        if a >> i & 1:
                            big_mask |= 1 << pos[i]
                    slack = sign * (mono_small[a] - mono_big[bc_kind][big_mask])
                    tr.update(slack, draw=k, J=J, beta=beta, bc=bc_kind,
                              sub=str(sub.bounding_box()), A=a)
    return [tr.report()]


# -- consequences of the DVI ----------------------------------------------------


def audit_consequence_dvi(box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    """Plus/minus comparison of pair correlations in the semi-infinite regime:
    <s_i s_j>^- <= <s_i s_j>^+ and truncated correlations ordered the other way."""
    rng = _rng(seed, "consequence")
    t1 = _Tracker("consequence-dvi")
    for k in range(n_draws):
        J, beta = _draw_common(rng)
        lam = float(rng.uniform(0.0, 1.5))
        h = rng.uniform(0.0, 1.0, size=len(box))
        wall = min(p[-1] for p in box.points)
        vals = [hv + (lam if p[-1] == wall else 0.0) for hv, p in zip(h, box.points)]
        inter = InteractionSpec(J=J)
        field = _sampled_field(box, vals)
        plus = ExactState(ModelInstance(box, inter, field, PLUS, beta))
        minus = ExactState(ModelInstance(box, inter, field, MINUS, beta))
        cp, cm = plus.pair_correlations(), minus.pair_correlations()
        mp, mm = plus.magnetizations(), minus.magnetizations()
        inst = {"draw": k, "J": J, "beta": beta, "lam": lam}
        n = len(box)
        for i in range(n):
            for j in range(i + 1, n):
                t1.update(cp[i, j] - cm[i, j], kind="raw", i=i, j=j, **inst)
                trunc_minus = cm[i, j] - mm[i] * mm[j]
                trunc_plus = cp[i, j] - mp[i] * mp[j]
                t1.update(trunc_minus - trunc_plus, kind="truncated", i=i, j=j, **inst)
    return [t1.report()]


# -- chain inequality ------------------------------------------------------------


def chain_inequality_audit(
    box: Region,
    i: Point,
    j: Point,
    J: float = 1.0,
    beta: float = 1.0,
    h: Sequence[float] | None = None,
    seed: int = 0,
) -> dict:
    """The uniqueness-chain step for the (+,-) duplicated pair at neighboring
    sites: <t_i> >= (1/4) <t_i t_j^2> >= (1/4) <t_i t_j> <t_j>, and
    <t_i t_j> > 0."""
    i, j = tuple(i), tuple(j)
    if sum(abs(a - b) for a, b in zip(i, j)) != 1:
        raise ValueError("chain audit needs l1-adjacent sites")
    n = len(box)
    if h is None:
        h = [0.0] * n
    if any(v < 0 for v in h):
        raise ValueError("chain audit requires a non-negative field")
    inter = InteractionSpec(J=J)
    field = _sampled_field(box, h)
    dm = duplicated_from_bcs(box, inter, field, PLUS, MINUS, beta)
    ds = DuplicatedState(dm)
    ti = ds.st_moment([i], [])
    tj = ds.st_moment([j], [])
    titj = ds.st_moment([i, j], [])
    titj2 = ds.st_moment([i, j, j], [])
    return {
        "t_i": ti,
        "t_j": tj,
        "t_i_t_j": titj,
        "slack_first": ti - 0.25 * titj2,
        "slack_second": 0.25 * titj2 - 0.25 * titj * tj,
        "positivity": titj,
    }


def two_site_duplicated_titj(J: float, beta: float, f1_i: float, f1_j: float,
                             f2_i: float, f2_j: float) -> float:
    """<t_i t_j> of a duplicated two-site system with per-layer effective
    fields, by the closed 16-term sum."""
    vals = []
    w = []
    for si in (-1, 1):
        for sj in (-1, 1):
            for ti_ in (-1, 1):
                for tj_ in (-1, 1):
                    e = -J * (si * sj + ti_ * tj_)
                    e -= f1_i * si + f1_j * sj + f2_i * ti_ + f2_j * tj_
                    w.append(np.exp(-beta * e))
                    vals.append((si - ti_) * (sj - tj_))
    w = np.array(w)
    return float((w * np.array(vals)).sum() / w.sum())


def two_site_chain_value(d: int, J: float, beta: float, h_i: float = 0.0, h_j: float = 0.0) -> float:
    """<t_i t_j> for the two-site (+,+) duplicated pair deep inside Z^d (all
    2d - 1 outside neighbors pinned to +1 in both layers): the large-field
    limit of the chain comparison for an interior pair."""
    c = (2 * d - 1) * J
    return two_site_duplicated_titj(J, beta, h_i + c, h_j + c, h_i + c, h_j + c)


# -- suite driver -----------------------------------------------------------------


SUITES = {
    "gks": audit_gks,
    "fkg": audit_fkg,
    "dvi": lambda box, n, seed: audit_dvi(box, n, seed, plus_eta=False),
    "dvi-corollary": lambda box, n, seed: audit_dvi(box, n, seed, plus_eta=True),
    "extremality": audit_extremality,
    "state-monotonicity": audit_state_monotonicity,
    "correlation-monotonicity": audit_correlation_monotonicity,
    "consequence-dvi": audit_consequence_dvi,
}


def run_suite(names: Iterable[str], box: Region, n_draws: int, seed: int) -> list[InequalityReport]:
    reports = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown inequality suite {name!r}")
        reports.extend(SUITES[name](box, n_draws, seed))
    return reports
