"""Exact finite-volume Gibbs states by exhaustive enumeration.

Configurations of an N-site region are indexed by the integers 0..2^N-1; bit i
set means spin +1 at the i-th region point (region points are sorted, so the
indexing is reproducible).  Reductions are chunked in fixed index order, which
keeps every result bit-stable for a given chunk size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .lattice import Point, Region
from .model import (
    BoundaryCondition,
    CompiledModel,
    FieldSpec,
    FieldSample,
    InteractionSpec,
    ModelInstance,
    FREE,
    MINUS,
    PLUS,
)

DEFAULT_MAX_EXACT_SITES = 24
_MATERIALIZE_LIMIT = 20  # cache weights below this many spins
_spin_matrix_cache: dict[int, np.ndarray] = {}


class CapacityError(ValueError):
    """Raised when a region is too large for exhaustive enumeration."""


def spin_matrix(n: int, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """(hi-lo, n) matrix of +-1 spins for configuration indices lo..hi-1."""
    if hi is None:
        hi = 1 << n
    if lo == 0 and hi == (1 << n) and n <= 16:
        cached = _spin_matrix_cache.get(n)
        if cached is not None:
            return cached
    idx = np.arange(lo, hi, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    S = (2 * bits - 1).astype(np.int8)
    if lo == 0 and hi == (1 << n) and n <= 16:
        _spin_matrix_cache[n] = S
    return S


def _logsumexp(values: Sequence[float]) -> float:
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


class ExactState:
    """Exhaustively enumerated Gibbs state for one model instance."""

    def __init__(self, model: ModelInstance, max_exact_sites: int = DEFAULT_MAX_EXACT_SITES,
                 chunk_bits: int = 16):
        self.model = model
        self.n = len(model.region)
        if self.n > max_exact_sites:
            raise CapacityError(
                f"region has {self.n} sites, exhaustive cap is {max_exact_sites}"
            )
        self.compiled = CompiledModel(model)
        self.chunk = 1 << chunk_bits
        self._log_z = None
        self._weights = None  # normalized, only materialized for small n

    # -- internals ---------------------------------------------------------

    def _chunks(self):
        total = 1 << self.n
        step = min(self.chunk, total)
        for lo in range(0, total, step):
            yield lo, min(lo + step, total)

    def _chunk_log_weights(self, lo, hi):
        S = spin_matrix(self.n, lo, hi)
        return -self.model.beta * self.compiled.energies(S), S

    def log_partition(self) -> float:
        if self._log_z is None:
            parts = []
            for lo, hi in self._chunks():
                lw, _ = self._chunk_log_weights(lo, hi)
                m = float(np.max(lw))
                parts.append(m + math.log(float(np.exp(lw - m).sum())))
            self._log_z = _logsumexp(parts)
        return self._log_z

    def weights(self) -> np.ndarray:
        """Normalized Boltzmann weights over all 2^n configurations."""
        if self._weights is None:
            if self.n > _MATERIALIZE_LIMIT:
                raise CapacityError("weights vector too large to materialize")
            lz = self.log_partition()
            out = np.empty(1 << self.n)
            for lo, hi in self._chunks():
                lw, _ = self._chunk_log_weights(lo, hi)
                out[lo:hi] = np.exp(lw - lz)
            self._weights = out
        return self._weights

    # -- observables -------------------------------------------------------

    def expectation(self, obs) -> float:
        """<obs>; obs is a set of points (monomial sigma_A), ("upset", A) for
        the indicator of {sigma = +1 on A}, or a callable S -> values."""
        fn = self._observable(obs)
        lz = self.log_partition()
        acc = 0.0
        for lo, hi in self._chunks():
            lw, S = self._chunk_log_weights(lo, hi)
            acc += float(np.sum(np.exp(lw - lz) * fn(S)))
        return acc

    def _observable(self, obs) -> Callable:
        if callable(obs):
            return obs
        if isinstance(obs, tuple) and len(obs) == 2 and obs[0] == "upset":
            cols = self._columns(obs[1])
            return lambda S: np.all(S[:, cols] == 1, axis=1).astype(float) if cols else np.ones(len(S))
        cols = self._columns(obs)
        if not cols:
            return lambda S: np.ones(len(S))
        return lambda S: np.prod(S[:, cols], axis=1).astype(float)

    def _columns(self, sites: Iterable[Point]) -> list[int]:
        idx = self.compiled.index
        cols = []
        for p in sites:
            p = tuple(p)
            if p not in idx:
                raise KeyError(f"site {p} outside the region")
            cols.append(idx[p])
        return sorted(cols)

    def magnetizations(self) -> np.ndarray:
        """<sigma_i> for every region site, in region point order."""
        lz = self.log_partition()
        acc = np.zeros(self.n)
        for lo, hi in self._chunks():
            lw, S = self._chunk_log_weights(lo, hi)
            acc += np.exp(lw - lz) @ S
        return acc

    def pair_correlations(self) -> np.ndarray:
        """<sigma_i sigma_j> matrix (diagonal = 1)."""
        lz = self.log_partition()
        acc = np.zeros((self.n, self.n))
        for lo, hi in self._chunks():
            lw, S = self._chunk_log_weights(lo, hi)
            Sf = S.astype(float)
            acc += (Sf * np.exp(lw - lz)[:, None]).T @ Sf
        return acc

    def upset_probabilities(self) -> np.ndarray:
        """P(sigma = +1 on A) for every A, indexed by the site bitmask A.

        Superset-sum (zeta) transform of the weight vector: configurations are
        +1 exactly on the bits set in their index.
        """
        p = self.weights().copy()
        for i in range(self.n):
            bit = 1 << i
            idx = np.arange(1 << self.n)
            lower = (idx & bit) == 0
            p[lower] += p[idx[lower] | bit]
        return p

    def all_monomials(self) -> np.ndarray:
        """<sigma_A> for every A (indexed by bitmask), via a Walsh transform."""
        v = self.weights().copy()
        for i in range(self.n):
            bit = 1 << i
            idx = np.arange(1 << self.n)
            lo = (idx & bit) == 0
            a = v[idx[lo]]
            b = v[idx[lo] | bit]
            # spin at bit i is -1 on the low half, +1 on the high half
            v[idx[lo]], v[idx[lo] | bit] = a + b, b - a
        return v


def log_partition(model: ModelInstance, **kw) -> float:
    return ExactState(model, **kw).log_partition()


def expectation(model: ModelInstance, obs, **kw) -> float:
    return ExactState(model, **kw).expectation(obs)


# -- duplicated-variable systems -------------------------------------------


@dataclass(frozen=True)
class DuplicatedModel:
    """Two independent layers sharing region, interaction and beta.

    Boundary conditions act through the altered external field
    ``h^eta_i = h_i + sum_{j ~ i, j outside} J_ij eta_j``, so each layer is a
    free-boundary system with its own effective field.
    """

    base: ModelInstance
    field2: FieldSpec
    bc2: BoundaryCondition = FREE

    def layer_models(self) -> tuple[ModelInstance, ModelInstance]:
        m = self.base
        m1 = m
        m2 = ModelInstance(m.region, m.interaction, self.field2, self.bc2, m.beta)
        return m1, m2


class DuplicatedState:
    """Joint state of the two layers; exposes moments of s_A = prod (s_i) and
    t_A with s_i = sigma_i + sigma'_i, t_i = sigma_i - sigma'_i."""

    def __init__(self, dm: DuplicatedModel, max_exact_sites: int = DEFAULT_MAX_EXACT_SITES):
        m1, m2 = dm.layer_models()
        n = len(m1.region)
        if 2 * n > max_exact_sites:
            raise CapacityError(f"duplicated system has {2*n} spins, cap {max_exact_sites}")
        self.n = n
        self.dm = dm
        c1, c2 = CompiledModel(m1), CompiledModel(m2)
        beta = m1.beta
        S = spin_matrix(n).astype(float)
        e1 = c1.energies(S)
        e2 = c2.energies(S)
        lw = (-beta * e1)[:, None] + (-beta * e2)[None, :]
        lw -= lw.max()
        w = np.exp(lw)
        w /= w.sum()
        self.w = w  # (cfg1, cfg2)
        self.S = S

    def st_moment(self, t_sites: Iterable[Point], s_sites: Iterable[Point]) -> float:
        """< t_A s_B > for site collections A (t factors) and B (s factors)."""
        idx = {p: i for i, p in enumerate(self.dm.base.region.points)}
        S = self.S
        f1 = np.ones((len(S), len(S)))
        for p in t_sites:
            i = idx[tuple(p)]
            f1 *= S[:, i][:, None] - S[:, i][None, :]
        for p in s_sites:
            i = idx[tuple(p)]
            f1 *= S[:, i][:, None] + S[:, i][None, :]
        return float(np.sum(self.w * f1))

    def layer_marginal(self, sites: Iterable[Point], layer: int = 0) -> float:
        """< sigma_A > computed in the joint system for one layer."""
        idx = {p: i for i, p in enumerate(self.dm.base.region.points)}
        S = self.S
        prod = np.ones(len(S))
        for p in sites:
            prod = prod * S[:, idx[tuple(p)]]
        if layer == 0:
            return float(np.sum(self.w.sum(axis=1) * prod))
        return float(np.sum(self.w.sum(axis=0) * prod))


def field_with_bc(model: ModelInstance) -> FieldSpec:
    """Fold a non-free boundary condition into an explicit per-site field.

    Returns the sampled-field spec whose value at p is
    ``field(p) + sum_{j outside} J_pj eta_j`` (exactly the corollary device
    that turns an eta-boundary layer into a free-boundary one).
    """
    cm = CompiledModel(model)
    vals = tuple(float(v) for v in cm.lin)
    sample = FieldSample(model.region, vals, dist="gaussian", strength=1.0, seed=0)
    return FieldSpec(kind="sampled", sample=sample)


def duplicated_from_bcs(region, interaction, field, bc1, bc2, beta=1.0) -> DuplicatedModel:
    """Duplicated system whose marginals are the bc1- and bc2-states."""
    m1 = ModelInstance(region, interaction, field, bc1, beta)
    m2 = ModelInstance(region, interaction, field, bc2, beta)
    f1 = field if bc1.is_free else field_with_bc(m1)
    f2 = field if bc2.is_free else field_with_bc(m2)
    base = ModelInstance(region, interaction, f1, FREE, beta)
    return DuplicatedModel(base, field2=f2, bc2=FREE)


# -- wall and interface free energies ----------------------------------------


def semi_infinite_box(width: int, height: int, d: int = 2, base: int = 1) -> Region:
    """Box ``[0, width)^{d-1} x [base, base+height)`` used for wall quantities."""
    pts = [()]
    for _ in range(d - 1):
        pts = [p + (c,) for p in pts for c in range(width)]
    pts = [p + (h,) for p in pts for h in range(base, base + height)]
    return Region.from_points(pts, d)


def wall_weight(field_kind: str, delta: float, p: Point, base: int = 1) -> float:
    """d h_p / d lambda for the wall field families."""
    if field_kind == "wall":
        return 1.0 if p[-1] == base else 0.0
    if field_kind == "wall_decaying":
        return p[-1] ** (-delta)
    raise ValueError(f"unsupported wall field kind {field_kind!r}")


def wall_free_energy_exact(
    width: int,
    height: int,
    lam_grid: Sequence[float],
    d: int = 2,
    J: float = 1.0,
    beta: float = 1.0,
    field_kind: str = "wall",
    delta: float = 1.0,
    base: int = 1,
    max_exact_sites: int = DEFAULT_MAX_EXACT_SITES,
) -> dict:
    """Finite-volume wall free energy on a lambda grid, with its integral check.

    Returns tau_n(lambda) = -ln(Z^-/Z^+)/|W|, the magnetization-difference
    integrand, the cumulative Simpson integral of the integrand, and the
    maximal deviation between the two (which is pure quadrature error).
    """
    region = semi_infinite_box(width, height, d, base)
    n_wall = width ** (d - 1)
    inter = InteractionSpec(kind="uniform", J=J)
    lam_grid = list(lam_grid)
    taus, integrand = [], []
    weights = np.array([wall_weight(field_kind, delta, p, base) for p in region.points])
    for lam in lam_grid:
        if field_kind == "wall":
            fld = FieldSpec(kind="wall", lam=lam, wall_layer=base)
        else:
            fld = FieldSpec(kind="wall_decaying", lam=lam, delta=delta)
        plus = ExactState(
            ModelInstance(region, inter, fld, PLUS, beta, half_space_base=base),
            max_exact_sites,
        )
        minus = ExactState(
            ModelInstance(region, inter, fld, MINUS, beta, half_space_base=base),
            max_exact_sites,
        )
        taus.append(-(minus.log_partition() - plus.log_partition()) / n_wall)
        diff = plus.magnetizations() - minus.magnetizations()
        # the lambda-derivative of -(1/|W|) ln(Z^-/Z^+) is beta * this sum
        integrand.append(beta * float(weights @ diff) / n_wall)
    from scipy.integrate import cumulative_simpson

    cum = cumulative_simpson(np.array(integrand), x=np.array(lam_grid), initial=0.0)
    cum = cum + taus[0]
    resid = float(np.max(np.abs(cum - np.array(taus)))) if len(lam_grid) > 1 else 0.0
    return {
        "lam_grid": lam_grid,
        "tau": taus,
        "integrand": integrand,
        "integral": cum.tolist(),
        "quadrature_residual": resid,
        "wall_sites": n_wall,
    }


def interface_free_energy_finite(
    J: float,
    m: int,
    n: int,
    d: int = 2,
    beta: float = 1.0,
    max_exact_sites: int = DEFAULT_MAX_EXACT_SITES,
) -> float:
    """-(1/|W|) ln(Q^-+ / Q^+) on the box [-m,m]^{d-1} x [-n,n]."""
    from .lattice import build_rect

    lo = tuple([-m] * (d - 1) + [-n])
    hi = tuple([m] * (d - 1) + [n])
    region = build_rect(lo, hi)
    inter = InteractionSpec(kind="uniform", J=J)
    fld = FieldSpec(kind="zero")
    mixed = BoundaryCondition(kind="mixed", split=0)
    q_mixed = ExactState(ModelInstance(region, inter, fld, mixed, beta), max_exact_sites)
    q_plus = ExactState(ModelInstance(region, inter, fld, PLUS, beta), max_exact_sites)
    n_wall = (2 * m + 1) ** (d - 1)
    return -(q_mixed.log_partition() - q_plus.log_partition()) / n_wall


# -- random-field log-ratio ---------------------------------------------------


def delta_exact(model: ModelInstance, a: Region, max_exact_sites: int = DEFAULT_MAX_EXACT_SITES) -> float:
    """Delta_A(h) = -(1/beta) ln[ Z(h) / Z(tau_A h) ] for a sampled field."""
    if model.field.kind != "sampled":
        raise ValueError("delta_exact needs a sampled random field")
    if model.beta == 0:
        raise ValueError("delta_exact needs beta > 0")
    for p in a.points:
        if p not in model.region.point_set:
            raise ValueError("flip set must be contained in the region")
    sample = model.field.sample
    flipped_vals = list(sample.values)
    aset = a.point_set
    for i, p in enumerate(model.region.points):
        if p in aset:
            flipped_vals[i] = -flipped_vals[i]
    flipped = FieldSample(sample.region, tuple(flipped_vals), sample.dist,
                          sample.strength, sample.seed)
    m_flip = ModelInstance(model.region, model.interaction,
                           FieldSpec(kind="sampled", sample=flipped), model.bc, model.beta)
    lz = ExactState(model, max_exact_sites).log_partition()
    lz_flip = ExactState(m_flip, max_exact_sites).log_partition()
    return -(lz - lz_flip) / model.beta


def delta_ensemble(
    region: Region,
    interaction: InteractionSpec,
    bc: BoundaryCondition,
    beta: float,
    eps: float,
    flip_sets: Sequence[Region],
    field_matrix: np.ndarray,
    max_exact_sites: int = DEFAULT_MAX_EXACT_SITES,
) -> np.ndarray:
    """Delta_A for many field samples at once: (n_sets, n_samples) array.

    ``field_matrix`` holds raw field values, one row per sample, columns in
    region point order; the effective field is ``eps * h``.
    """
    n = len(region)
    if n > max_exact_sites:
        raise CapacityError(f"{n} sites exceeds the exhaustive cap")
    zero = ModelInstance(region, interaction, FieldSpec(kind="zero"), bc, beta)
    cm = CompiledModel(zero)
    S = spin_matrix(n).astype(float)
    base_lw = -beta * cm.energies(S)  # field-free part, (2^n,)
    H = np.asarray(field_matrix, dtype=float)  # (n_samples, n)
    sign_rows = []
    for a in flip_sets:
        aset = a.point_set
        sign_rows.append([-1.0 if p in aset else 1.0 for p in region.points])
    signs = np.array(sign_rows)  # (n_sets, n)

    def log_z(fields):  # fields (n_samples, n) -> (n_samples,)
        lw = base_lw[None, :] + beta * eps * (fields @ S.T)
        m = lw.max(axis=1, keepdims=True)
        return (m[:, 0] + np.log(np.exp(lw - m).sum(axis=1)))

    lz_plain = log_z(H)
    out = np.empty((len(flip_sets), len(H)))
    for k in range(len(flip_sets)):
        lz_flip = log_z(H * signs[k][None, :])
        out[k] = -(lz_plain - lz_flip) / beta
    return out
