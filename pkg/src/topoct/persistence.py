"""Persistence diagrams from filtered complexes.

A diagram is an (n, 2) float64 array of (birth, death) rows for one
homology dimension, canonically sorted by (birth, death); essential
classes carry death = inf and zero-persistence pairs are dropped. The
engine performs GF(2) column reduction per dimension, top down, with the
clearing optimization, and a union-find sweep for dimension 0. A slow
rank-based oracle computes the same diagrams along a completely separate
route for verification.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .errors import ConsistencyError
from .filtration import FilteredComplex, facet_positions, _lower_star_edges
from .imaging import _require_image

INF = np.inf


def canonical(points) -> np.ndarray:
    """Sort (birth, death) rows by (birth, death); drop zero persistence."""
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(arr):
        arr = arr[arr[:, 1] > arr[:, 0]]
        arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
    return arr


def diagrams_equal(a, b) -> bool:
    """Exact multiset equality of two canonical diagrams."""
    a, b = canonical(a), canonical(b)
    return a.shape == b.shape and bool(np.array_equal(a, b))


def _require_sorted(cx: FilteredComplex) -> None:
    if not cx.is_sorted:
        raise ConsistencyError("complex must come from sort_simplices")
    if len(cx) and np.any(np.diff(cx.values) < 0):
        raise ConsistencyError("filtration values are not non-decreasing")


def _zero_dim(cx: FilteredComplex):
    """Union-find sweep: dim-0 pairs, essential births, creator-edge mask."""
    v_idx = cx.dim_indices(0)
    e_idx = cx.dim_indices(1)
    if len(v_idx) != cx.vertex_count:
        raise ConsistencyError("vertex ids must be 0..vertex_count-1, each "
                               "present as a 0-simplex")
    vert_values = np.empty(cx.vertex_count)
    vert_values[cx.verts[v_idx, 0]] = cx.values[v_idx]
    eu = cx.verts[e_idx, 0].astype(np.int64)
    ev = cx.verts[e_idx, 1].astype(np.int64)
    births, deaths, creator, essential = backend.union_find_zero(
        vert_values, eu, ev, cx.values[e_idx])
    pairs = np.column_stack([births, deaths])
    ess = np.column_stack([essential, np.full(len(essential), INF)])
    dgm = canonical(np.vstack([pairs, ess]))
    return dgm, creator.astype(bool)


def compute_persistence(cx: FilteredComplex,
                        max_hom_dim: int = 2) -> list[np.ndarray]:
    """Persistence diagrams for dimensions 0..max_hom_dim.

    Standard GF(2) pairing: columns of each boundary matrix are reduced in
    filtration order, processing dimensions from the top down so pivot
    rows clear known-creator columns one dimension below. Dimension 0 uses
    the union-find fast path. Dimensions above ``cx.max_dim - 1`` come
    back empty.
    """
    _require_sorted(cx)
    empty = np.empty((0, 2))
    out = [empty] * (max_hom_dim + 1)
    top = min(cx.max_dim, max_hom_dim + 1)

    dgm0, creator_edges = _zero_dim(cx)
    out[0] = dgm0

    # reduce boundary_d for d = top..2; lows_by_dim[d][j] = pivot row of col j
    lows_by_dim: dict[int, np.ndarray] = {}
    cleared = np.zeros(len(cx.dim_indices(top)), dtype=np.uint8)
    for d in range(top, 1, -1):
        cols = cx.dim_indices(d)
        rows = cx.dim_indices(d - 1)
        if len(cols) == 0:
            cleared = np.zeros(len(cx.dim_indices(d - 1)), dtype=np.uint8)
            continue
        bnd = facet_positions(cx, d)
        indptr = np.arange(len(cols) + 1, dtype=np.int64) * (d + 1)
        indices = bnd.ravel().astype(np.int32)
        lows = backend.reduce_boundary(len(rows), indptr, indices, cleared)
        lows_by_dim[d] = lows
        nxt = np.zeros(len(rows), dtype=np.uint8)
        nxt[lows[lows >= 0]] = 1
        cleared = nxt

    # assemble diagrams for dims 1..min(max_hom_dim, declared_dim - 1)
    for d in range(1, min(max_hom_dim, cx.declared_dim - 1) + 1):
        rows = cx.dim_indices(d)
        if len(rows) == 0:
            out[d] = empty
            continue
        if d == 1:
            creators = creator_edges
        else:
            lows_d = lows_by_dim.get(d)
            if lows_d is None:     # nothing above was reduced: no creators known
                creators = np.zeros(len(rows), dtype=bool)
            else:
                creators = lows_d < 0
        destroyed = np.zeros(len(rows), dtype=bool)
        pairs = np.empty((0, 2))
        lows_up = lows_by_dim.get(d + 1)
        if lows_up is not None:
            cols_up = cx.dim_indices(d + 1)
            hit = lows_up >= 0
            destroyed[lows_up[hit]] = True
            pairs = np.column_stack([cx.values[rows[lows_up[hit]]],
                                     cx.values[cols_up[hit]]])
        ess_births = cx.values[rows[creators & ~destroyed]]
        ess = np.column_stack([ess_births, np.full(len(ess_births), INF)])
        out[d] = canonical(np.vstack([pairs, ess]))
    return out


def betti_at(cx: FilteredComplex, epsilon: float,
             diagrams: list[np.ndarray] | None = None) -> list[int]:
    """Betti numbers of the sublevel complex at ``epsilon``.

    beta_m counts diagram points with birth <= epsilon < death, for every
    dimension the engine computes (0..max_dim-1).
    """
    if diagrams is None:
        diagrams = compute_persistence(cx, max(cx.declared_dim - 1, 0))
    return [int(np.sum((d[:, 0] <= epsilon) & (epsilon < d[:, 1])))
            for d in diagrams]


def lsf_zero_diagram(img: np.ndarray) -> np.ndarray:
    """Dimension-0 diagram of the lower-star filtration, without
    materializing the complex.

    Equivalent to ``compute_persistence(build_lower_star(img), 0)[0]``:
    the union-find sweep processes edges in the same total order the
    sorted complex would use, so plateaus resolve identically.
    """
    img = _require_image(img)
    vert_values = img.ravel().astype(np.float64)
    eu, ev, evals = _lower_star_edges(img)
    order = np.lexsort((ev, eu, evals))
    births, deaths, _, essential = backend.union_find_zero(
        vert_values, eu[order].astype(np.int64), ev[order].astype(np.int64),
        evals[order])
    ess = np.column_stack([essential, np.full(len(essential), INF)])
    return canonical(np.vstack([np.column_stack([births, deaths]), ess]))


# ---------------------------------------------------------------------------
# Brute-force oracle: persistence from GF(2) ranks of sublevel boundary maps
# ---------------------------------------------------------------------------

def _rank_prefixes(columns: list[int]) -> np.ndarray:
    """rank of the matrix formed by the first j columns, for j = 0..m."""
    out = np.zeros(len(columns) + 1, dtype=np.int64)
    pivots: dict[int, int] = {}
    rank = 0
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            other = pivots.get(low)
            if other is None:
                pivots[low] = col
                rank += 1
                break
            col ^= other
        out[j + 1] = rank
    return out


class _OracleDim:
    """Rank tables for one boundary matrix, sliced by filtration prefixes."""

    def __init__(self, columns: list[int], row_count_at: np.ndarray):
        # row_count_at[s] = rows present in the sublevel at critical index s
        self.columns = columns
        self.row_count_at = row_count_at
        self.full = _rank_prefixes(columns)
        self._high_cache: dict[int, np.ndarray] = {}

    def rank(self, ncols: int) -> int:
        return int(self.full[ncols])

    def rank_high_rows(self, s: int, ncols: int) -> int:
        """rank of the first ncols columns restricted to rows >= row_count_at[s]."""
        tbl = self._high_cache.get(s)
        if tbl is None:
            cut = int(self.row_count_at[s])
            masked = [c >> cut for c in self.columns]
            tbl = _rank_prefixes(masked)
            self._high_cache[s] = tbl
        return int(tbl[ncols])


def oracle_persistence(cx: FilteredComplex, max_hom_dim: int | None = None,
                       max_simplices: int = 300) -> list[np.ndarray]:
    """Persistence by persistent-Betti rank differences (slow, independent).

    For every pair of distinct filtration values the rank of the map
    H_p(K_a) -> H_p(K_b) is computed from ranks of boundary submatrices,
    and interval multiplicities follow by inclusion-exclusion. O(values^2)
    rank sweeps: refuses complexes larger than ``max_simplices``.
    """
    _require_sorted(cx)
    if len(cx) > max_simplices:
        raise ValueError(
            f"oracle refuses {len(cx)} simplices (> {max_simplices})")
    if max_hom_dim is None:
        max_hom_dim = max(cx.declared_dim - 1, 0)

    values = cx.values
    distinct = np.unique(values)
    # prefix[s] = number of simplices with value <= distinct[s-1]; prefix[0] = 0
    prefix = np.concatenate(
        [[0], np.searchsorted(values, distinct, side="right")])
    nlev = len(distinct)

    # per-dimension column counts at each critical prefix, and bit columns
    dims = cx.dims
    dim_of = {d: cx.dim_indices(d) for d in range(cx.max_dim + 1)}
    count_at = {}
    for d, idx in dim_of.items():
        # how many d-simplices are among the first prefix[s] simplices
        count_at[d] = np.searchsorted(idx, prefix, side="left").astype(np.int64)

    tables: dict[int, _OracleDim] = {}
    for d in range(1, cx.max_dim + 1):
        if len(dim_of[d]) == 0:
            continue
        bnd = facet_positions(cx, d)
        cols = []
        for j in range(len(bnd)):
            c = 0
            for r in bnd[j]:
                c |= 1 << int(r)
            cols.append(c)
        tables[d] = _OracleDim(cols, count_at[d - 1])

    def persistent_betti(p: int, s: int, t: int) -> int:
        """rank of H_p(K_s) -> H_p(K_t), s <= t, via submatrix ranks."""
        n_p = int(count_at[p][s])
        if n_p == 0:
            return 0
        r_low = tables[p].rank(n_p) if p in tables else 0
        if p + 1 in tables:
            n_q = int(count_at[p + 1][t])
            r_up = tables[p + 1].rank(n_q)
            r_corner = tables[p + 1].rank_high_rows(s, n_q)
        else:
            r_up = r_corner = 0
        return n_p - r_low - r_up + r_corner

    out = []
    for p in range(max_hom_dim + 1):
        if p > cx.max_dim:
            out.append(np.empty((0, 2)))
            continue
        birth_levels = [s for s in range(1, nlev + 1)
                        if count_at[p][s] > count_at[p][s - 1]]
        death_levels = [t for t in range(1, nlev + 1)
                        if p + 1 <= cx.max_dim
                        and count_at[p + 1][t] > count_at[p + 1][t - 1]]
        pts = []
        for s in birth_levels:
            for t in death_levels:
                if t <= s:
                    continue
                mult = (persistent_betti(p, s, t - 1)
                        - persistent_betti(p, s, t)
                        - persistent_betti(p, s - 1, t - 1)
                        + persistent_betti(p, s - 1, t))
                for _ in range(mult):
                    pts.append((distinct[s - 1], distinct[t - 1]))
            ess = (persistent_betti(p, s, nlev)
                   - persistent_betti(p, s - 1, nlev))
            for _ in range(ess):
                pts.append((distinct[s - 1], INF))
        out.append(canonical(pts))
    return out


def oracle_betti(cx: FilteredComplex, epsilon: float) -> list[int]:
    """Betti numbers at ``epsilon`` for all dimensions 0..max_dim, via the
    oracle diagrams (which, unlike the engine, include the top dimension)."""
    dgms = oracle_persistence(cx, max_hom_dim=cx.max_dim)
    return [int(np.sum((d[:, 0] <= epsilon) & (epsilon < d[:, 1])))
            for d in dgms]


# ---------------------------------------------------------------------------
# Diagram cache files: "dim birth death" lines, inf for essential deaths
# ---------------------------------------------------------------------------

def write_diagrams(path: str, diagrams: list[np.ndarray]) -> None:
    with open(path, "w") as fh:
        for dim, dgm in enumerate(diagrams):
            for birth, death in canonical(dgm):
                d = "inf" if np.isinf(death) else repr(float(death))
                fh.write(f"{dim} {float(birth)!r} {d}\n")


def read_diagrams(path: str) -> list[np.ndarray]:
    rows: dict[int, list[tuple[float, float]]] = {}
    max_dim = -1
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            dim = int(parts[0])
            birth = float(parts[1])
            death = INF if parts[2] == "inf" else float(parts[2])
            rows.setdefault(dim, []).append((birth, death))
            max_dim = max(max_dim, dim)
    return [canonical(rows.get(d, [])) for d in range(max_dim + 1)]

