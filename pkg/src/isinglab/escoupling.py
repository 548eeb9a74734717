"""Edwards-Sokal coupling and random-cluster measures on tiny explicit graphs.

Everything here is exhaustively enumerated: a graph with n vertices and m edges
has 2^n spin configurations and 2^m edge configurations, and the coupling
weight of a pair (sigma, omega) is

    W(sigma, omega) = prod_{e open} [sigma agrees on e] (e^{2 beta J_e} - 1)
                      * prod_v e^{beta h_v sigma_v}.

The wired variant adds a ghost vertex frozen at +1; its edges belong to the
configuration space like any others.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np


@dataclass(frozen=True)
class SmallGraph:
    """A finite graph for coupling audits; vertices are 0..n-1.

    ``ghost_edges`` attach listed vertices to a frozen +1 exterior vertex with
    the given couplings (this is the wired setting); leave empty for free.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    J: tuple[float, ...]
    h: tuple[float, ...]
    ghost_edges: tuple[int, ...] = ()
    ghost_J: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.J) != len(self.edges) or len(self.h) != self.n:
            raise ValueError("coupling/field lengths must match the graph")
        if len(self.ghost_J) != len(self.ghost_edges):
            raise ValueError("one coupling per ghost edge required")

    @property
    def wired(self) -> bool:
        return bool(self.ghost_edges)

    def all_edges(self):
        """(u, v, J) with v = n standing for the ghost vertex."""
        out = [(u, v, j) for (u, v), j in zip(self.edges, self.J)]
        out.extend((u, self.n, j) for u, j in zip(self.ghost_edges, self.ghost_J))
        return out

    @classmethod
    def path(cls, n: int, J: float = 1.0, h: float = 0.0, beta_graph_wired: bool = False):
        edges = tuple((i, i + 1) for i in range(n - 1))
        ghost = tuple(range(n)) if beta_graph_wired else ()
        return cls(
            n,
            edges,
            (J,) * (n - 1),
            (h,) * n,
            ghost_edges=ghost,
            ghost_J=(J,) * len(ghost),
        )


def _clusters(n_total: int, open_edges) -> list[list[int]]:
    parent = list(range(n_total))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in open_edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, list[int]] = {}
    for v in range(n_total):
        groups.setdefault(find(v), []).append(v)
    return list(groups.values())


def es_weight_table(g: SmallGraph, beta: float) -> np.ndarray:
    """Unnormalized W(sigma, omega) as a (2^n, 2^m_total) array."""
    edges = g.all_edges()
    m = len(edges)
    n = g.n
    W = np.zeros((1 << n, 1 << m))
    for smask in range(1 << n):
        spins = [1 if smask >> i & 1 else -1 for i in range(n)] + [1]  # ghost +1
        field_w = math.exp(beta * sum(hv * sv for hv, sv in zip(g.h, spins)))
        for emask in range(1 << m):
            w = field_w
            ok = True
            for k, (u, v, J) in enumerate(edges):
                if emask >> k & 1:
                    if spins[u] != spins[v]:
                        ok = False
                        break
                    w *= math.exp(2 * beta * J) - 1.0
            if ok:
                W[smask, emask] = w
    return W


def ising_weights(g: SmallGraph, beta: float) -> np.ndarray:
    """Boltzmann weights of the spin model the coupling should marginalize to."""
    edges = g.all_edges()
    out = np.zeros(1 << g.n)
    for smask in range(1 << g.n):
        spins = [1 if smask >> i & 1 else -1 for i in range(g.n)] + [1]
        e = -sum(J * spins[u] * spins[v] for u, v, J in edges)
        e -= sum(hv * sv for hv, sv in zip(g.h, spins))
        out[smask] = math.exp(-beta * e)
    return out


def rc_weights(g: SmallGraph, beta: float) -> np.ndarray:
    """Random-cluster weights: B_J(omega) times the cluster field factors.

    Clusters not containing the ghost contribute ``2 cosh(beta sum h)``; the
    ghost cluster is pinned to +1 and contributes ``exp(beta sum h)``.
    """
    edges = g.all_edges()
    m = len(edges)
    out = np.zeros(1 << m)
    n_total = g.n + 1
    for emask in range(1 << m):
        b = 1.0
        open_pairs = []
        for k, (u, v, J) in enumerate(edges):
            if emask >> k & 1:
                b *= math.exp(2 * beta * J) - 1.0
                open_pairs.append((u, v))
        w = b
        for cluster in _clusters(n_total, open_pairs):
            hsum = sum(g.h[v] for v in cluster if v < g.n)
            if g.wired and g.n in cluster:
                w *= math.exp(beta * hsum)
            elif g.n in cluster:
                continue  # free graphs never connect to the ghost
            else:
                w *= 2.0 * math.cosh(beta * hsum)
        out[emask] = w
    return out


def _upset_probs(weights: np.ndarray, nbits: int) -> np.ndarray:
    p = weights / weights.sum()
    p = p.copy()
    for i in range(nbits):
        bit = 1 << i
        idx = np.arange(1 << nbits)
        lo = (idx & bit) == 0
        p[idx[lo]] += p[idx[lo] | bit]
    return p


def es_coupling_audit(g: SmallGraph, beta: float = 1.0) -> dict:
    """Exhaustive audit of the coupling on one small graph.

    Checks that the spin marginal reproduces the Ising measure and the edge
    marginal the random-cluster measure, and reports the minimum FKG slack of
    the RC measure over all pairs of increasing edge events.
    """
    if g.n > 4:
        raise ValueError("coupling audits are exhaustive only up to 4 vertices")
    W = es_weight_table(g, beta)
    Z = W.sum()
    spin_marg = W.sum(axis=1) / Z
    edge_marg = W.sum(axis=0) / Z
    ising = ising_weights(g, beta)
    ising /= ising.sum()
    rc = rc_weights(g, beta)
    rc /= rc.sum()
    m = len(g.all_edges())
    q = _upset_probs(rc, m)
    masks = np.arange(1 << m)
    fkg_slack = q[masks[:, None] | masks[None, :]] - np.outer(q, q)
    return {
        "spin_marginal_error": float(np.max(np.abs(spin_marg - ising))),
        "edge_marginal_error": float(np.max(np.abs(edge_marg - rc))),
        "fkg_min_slack": float(fkg_slack.min()),
        "open_probabilities": [float(q[1 << k]) for k in range(m)],
    }


def rc_open_probability(g: SmallGraph, beta: float, edge_index: int) -> float:
    rc = rc_weights(g, beta)
    rc /= rc.sum()
    m = len(g.all_edges())
    return float(sum(rc[mask] for mask in range(1 << m) if mask >> edge_index & 1))


def rc_monotone_in_J(g_small: SmallGraph, g_big: SmallGraph, beta: float = 1.0) -> float:
    """Minimum slack of phi_{J'}(A open) - phi_J(A open) over all up events,
    for two graphs identical except for pointwise-larger couplings."""
    if g_small.edges != g_big.edges or g_small.h != g_big.h:
        raise ValueError("graphs must differ only in couplings")
    m = len(g_small.all_edges())
    q_small = _upset_probs(rc_weights(g_small, beta), m)
    q_big = _upset_probs(rc_weights(g_big, beta), m)
    return float(np.min(q_big - q_small))
