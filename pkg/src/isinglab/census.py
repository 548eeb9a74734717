"""Exhaustive Peierls-contour census on small centered boxes with plus bc.

A contour of a plus-bc configuration on the box is determined by its minus
cell set M: the faces are the disagreement edges of "flip M", the interior is
the nearest-neighbor fill of M, and the contour is admissible exactly when its
face set is one corner-connected dual curve.  Enumerating over M therefore
yields every contour exactly once.  M decomposes as M = A \\ S with A = fill(M)
a hole-free corner-connected cell set and S a carving contained in the deep
core of A (cells all of whose neighbors stay in A), which is how the pipeline
below enumerates: interiors A by a rooted connected-set scan, carvings S per
core, and a vectorized dual-curve connectivity flood over all (A, S) pairs.

All per-mask arithmetic runs on uint64 bitboards: the box lives on a
(2 half + 1)^2 board, fill checks and boundary counts on the padded
(2 half + 3)^2 board (<= 49 bits for the 5x5 cap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import CapacityError
from .lattice import Point

U = np.uint64


def _u(x: int) -> np.uint64:
    return np.uint64(x)


class _Board:
    """Bit layouts for the census box: small board (cells) and padded board."""

    def __init__(self, half: int):
        self.half = half
        self.size = size = 2 * half + 1
        self.n = size * size
        self.pad = pad = size + 2
        if pad * pad > 64:
            raise CapacityError("census boxes are capped at 5x5")
        self.cells = [(x, y) for x in range(-half, half + 1) for y in range(-half, half + 1)]
        self.index = {c: i for i, c in enumerate(self.cells)}
        self.full_small = (1 << self.n) - 1
        self.full_pad = (1 << pad * pad) - 1
        self.small_not_last_col = sum(
            1 << (r * size + c) for r in range(size) for c in range(size) if c != size - 1
        )
        self.pad_not_first_col = self.full_pad & ~sum(1 << (r * pad) for r in range(pad))
        self.pad_not_last_col = self.full_pad & ~sum(
            1 << (r * pad + pad - 1) for r in range(pad)
        )
        self.inner_pad = sum(1 << self.pad_bit(x, y) for x, y in self.cells)
        self.border_pad = self.full_pad & ~self.inner_pad

    def pad_bit(self, x: int, y: int) -> int:
        return (x + self.half + 1) * self.pad + (y + self.half + 1)

    def small_to_pad(self, arr: np.ndarray) -> np.ndarray:
        """Embed small-board masks into the padded board (vectorized)."""
        size, pad = self.size, self.pad
        row_mask = _u((1 << size) - 1)
        out = np.zeros_like(arr)
        for r in range(size):
            rows = (arr >> _u(r * size)) & row_mask
            out |= rows.astype(U) << _u((r + 1) * pad + 1)
        return out

    def spread_pad(self, m: np.ndarray) -> np.ndarray:
        """One nearest-neighbor dilation step on the padded board."""
        pad = _u(self.pad)
        full = _u(self.full_pad)
        nf = _u(self.pad_not_first_col)
        nl = _u(self.pad_not_last_col)
        return (
            m
            | ((m << pad) & full)
            | (m >> pad)
            | ((m << _u(1)) & nf & full)
            | ((m >> _u(1)) & nl)
        )

    def reach_from_border(self, blocked: np.ndarray) -> np.ndarray:
        """Cells of the padded board reachable from the border ring avoiding
        ``blocked`` (vectorized flood to a fixpoint)."""
        comp = _u(self.full_pad) & ~blocked
        reach = _u(self.border_pad) & comp
        while True:
            nxt = self.spread_pad(reach) & comp
            if np.array_equal(nxt, reach):
                return reach
            reach = nxt

    def edge_counts(self, arr: np.ndarray) -> np.ndarray:
        """|edge boundary| of each small-board mask, exterior included."""
        size = _u(self.size)
        nlc = _u(self.small_not_last_col)
        internal = np.bitwise_count(arr & (arr >> size)) + np.bitwise_count(
            arr & (arr >> _u(1)) & nlc
        )
        return 4 * np.bitwise_count(arr) - 2 * internal


def _enumerate_rooted(board: _Board, require_origin: bool) -> list[int]:
    """Corner-connected subsets of the box, each exactly once.

    With ``require_origin`` the sets all contain the center cell; otherwise
    each set is rooted at its minimal cell.
    """
    n = board.n
    king = [0] * n
    for i, (x, y) in enumerate(board.cells):
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == dy == 0:
                    continue
                j = board.index.get((x + dx, y + dy))
                if j is not None:
                    king[i] |= 1 << j
    roots = [board.index[(0, 0)]] if require_origin else list(range(n))
    out: list[int] = []
    app = out.append
    for root in roots:
        banned0 = 0 if require_origin else (1 << root) - 1
        stack = [(1 << root, king[root] & ~(1 << root) & ~banned0, banned0)]
        while stack:
            S, ext, banned = stack.pop()
            ext &= ~banned & ~S
            if ext == 0:
                app(S)
                continue
            v = ext & -ext
            stack.append((S, ext & ~v, banned | v))
            stack.append((S | v, ext | (king[v.bit_length() - 1] & ~banned), banned))
    return out


def _filled_interiors(board: _Board, masks: list[int]):
    """Keep hole-free sets; return (small masks, pad masks, faces, ext cells)."""
    arr = np.array(masks, dtype=U)
    pad_m = board.small_to_pad(arr)
    reach = board.reach_from_border(pad_m)
    holes = _u(board.full_pad) & ~pad_m & ~reach
    keep = holes == 0
    arr, pad_m = arr[keep], pad_m[keep]
    faces = board.edge_counts(arr)
    ext = np.bitwise_count(board.spread_pad(pad_m) & ~pad_m)
    order = np.argsort(arr, kind="stable")
    return arr[order], pad_m[order], faces[order], ext[order]


def _core_masks(board: _Board, arr: np.ndarray) -> np.ndarray:
    """Cells of each set all of whose four neighbors stay in the set."""
    size = _u(board.size)
    nlc = _u(board.small_not_last_col)
    nfc = _u(
        sum(1 << (r * board.size + c) for r in range(board.size) for c in range(board.size) if c != 0)
    )
    has_up = (arr >> _u(1)) & nlc
    has_dn = (arr << _u(1)) & nfc & _u(board.full_small)
    has_rt = arr >> size
    has_lf = (arr << size) & _u(board.full_small)
    return arr & has_up & has_dn & has_rt & has_lf


def _curve_connected(board: _Board, pad_m: np.ndarray, chunk: int = 1 << 21) -> np.ndarray:
    """True where the disagreement faces of each mask form one dual curve.

    Corners live on the padded-board index grid; a corner step is allowed
    exactly across a disagreement face, and the curve is connected when a
    flood from the lowest active corner reaches every active corner.
    """
    pad = _u(board.pad)
    one = _u(1)
    full = _u(board.full_pad)
    nfc = _u(board.pad_not_first_col)
    nlc = _u(board.pad_not_last_col)
    out = np.empty(len(pad_m), dtype=bool)
    for lo in range(0, len(pad_m), chunk):
        m = pad_m[lo : lo + chunk]
        fx = m ^ (m >> pad)  # cells (r,c),(r+1,c) differ
        fy = (m ^ (m >> one)) & nlc  # cells (r,c),(r,c+1) differ
        # corner-edge masks: edge_c at corner (r,c) joins (r,c)-(r,c+1)
        edge_c = (fx << pad) & full
        edge_r = (fy << one) & nfc & full
        active = edge_c | ((edge_c << one) & full) | edge_r | ((edge_r << pad) & full)
        reach = active & (~active + one)  # lowest active corner
        while True:
            step = (
                reach
                | (((reach & edge_c) << one) & full)
                | ((reach >> one) & edge_c)
                | (((reach & edge_r) << pad) & full)
                | ((reach >> pad) & edge_r)
            )
            step &= active
            if np.array_equal(step, reach):
                break
            reach = step
        out[lo : lo + chunk] = reach == active
    return out


@dataclass
class CensusResult:
    """All contours with the origin in their interior, on the centered box.

    ``interiors`` holds the distinct interiors as small-board bitmasks (with
    per-interior minimal face count and exterior-boundary size); the census
    entries themselves are (interior index, face count) pairs, one per contour
    of the full plus-bc configuration space.
    """

    half: int
    cells: list
    interiors: np.ndarray
    interior_faces: np.ndarray
    interior_ext: np.ndarray
    entry_interior: np.ndarray
    entry_faces: np.ndarray
    nested: bool

    def __len__(self) -> int:
        return len(self.entry_faces)

    def n_interiors(self) -> int:
        return len(self.interiors)

    def counts_by_faces(self) -> dict:
        vals, counts = np.unique(self.entry_faces, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def counts_by_ext_boundary(self) -> dict:
        ext = self.interior_ext[self.entry_interior]
        vals, counts = np.unique(ext, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def decode(self, mask: int) -> list[Point]:
        return [self.cells[i] for i in range(len(self.cells)) if mask >> i & 1]

    def iter_interiors(self):
        for m in self.interiors.tolist():
            yield self.decode(int(m))

    def log_counts(self) -> dict:
        return {n: math.log(c) for n, c in self.counts_by_faces().items()}


def contour_census(half: int = 2, d: int = 2, include_nested: bool = True) -> CensusResult:
    """Census of the contours gamma with 0 in the interior and plus bc.

    ``include_nested=False`` keeps only the cavity-free contour per interior
    (the one of minimal size); every nested contour shares its interior with
    a cavity-free one and has strictly more faces.
    """
    if d != 2:
        raise CapacityError("the exhaustive census is implemented for d = 2")
    if half < 0 or 2 * half + 1 > 5:
        raise CapacityError("census boxes are capped at 5x5")
    board = _Board(half)
    raw = _enumerate_rooted(board, require_origin=True)
    arr, pad_m, faces, ext = _filled_interiors(board, raw)
    del raw

    if not include_nested:
        idx = np.arange(len(arr), dtype=np.int64)
        return CensusResult(half, board.cells, arr, faces, ext, idx, faces.copy(), False)

    core = _core_masks(board, arr)
    core_list = core.tolist()
    by_core: dict[int, list[int]] = {}
    for i, cm in enumerate(core_list):
        by_core.setdefault(cm, []).append(i)

    pair_idx_parts = [np.arange(len(arr), dtype=np.int64)]
    pair_m_parts = [pad_m]
    for cm, idxs in by_core.items():
        if cm == 0:
            continue
        bits = [b for b in range(board.n) if cm >> b & 1]
        idxs = np.asarray(idxs, dtype=np.int64)
        base_pad = pad_m[idxs]
        for s in range(1, 1 << len(bits)):
            s_small = 0
            for k, b in enumerate(bits):
                if s >> k & 1:
                    s_small |= 1 << b
            s_pad = int(board.small_to_pad(np.array([s_small], dtype=U))[0])
            pair_idx_parts.append(idxs)
            pair_m_parts.append(base_pad & ~_u(s_pad))
    entry_interior = np.concatenate(pair_idx_parts)
    entry_m = np.concatenate(pair_m_parts)
    del pair_idx_parts, pair_m_parts

    ok = _curve_connected(board, entry_m)
    entry_interior = entry_interior[ok]
    entry_m = entry_m[ok]
    pad = _u(board.pad)
    one = _u(1)
    fx = entry_m ^ (entry_m >> pad)
    fy = (entry_m ^ (entry_m >> one)) & _u(board.pad_not_last_col)
    entry_faces = np.bitwise_count(fx) + np.bitwise_count(fy)
    order = np.lexsort((entry_faces, entry_interior))
    return CensusResult(
        half,
        board.cells,
        arr,
        faces,
        ext,
        entry_interior[order],
        entry_faces[order],
        True,
    )
