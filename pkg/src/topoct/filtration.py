"""Filtered simplicial complexes: Vietoris-Rips and lower-star builders.

A FilteredComplex stores simplices column-compactly (vertex ids padded to
width 4 with -1) so that half-million-simplex complexes stay cheap. The
canonical total order used everywhere downstream is
(filtration value, dimension, lexicographic vertex tuple); it is stable,
deterministic, and puts every face before its cofaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import backend
from .errors import ConsistencyError
from .imaging import FeaturePointCloud, _require_image

VR = "vietoris-rips"
LOWER_STAR = "lower-star"


class Simplex(NamedTuple):
    vertices: tuple[int, ...]
    value: float
    dim: int


@dataclass
class FilteredComplex:
    """Simplices with filtration values and (after sorting) a total order.

    ``built_dim`` is the dimension the construction enumerated (-1 when
    unknown): a thresholded build may store no simplex of that dimension,
    yet their absence is information, so classes one dimension below are
    genuinely essential rather than unknown.
    """

    verts: np.ndarray            # (m, 4) int32, -1 padded, ascending per row
    values: np.ndarray           # (m,) float64
    dims: np.ndarray             # (m,) int8
    vertex_count: int
    kind: str = "generic"
    is_sorted: bool = False
    built_dim: int = -1
    _dim_index: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def max_dim(self) -> int:
        return int(self.dims.max()) if len(self.dims) else 0

    @property
    def declared_dim(self) -> int:
        return self.built_dim if self.built_dim >= 0 else self.max_dim

    def simplex(self, i: int) -> Simplex:
        row = self.verts[i]
        return Simplex(tuple(int(v) for v in row[row >= 0]),
                       float(self.values[i]), int(self.dims[i]))

    def __iter__(self) -> Iterator[Simplex]:
        return (self.simplex(i) for i in range(len(self)))

    def dim_indices(self, d: int) -> np.ndarray:
        """Positions of the d-simplices, in stored (filtration) order."""
        if d not in self._dim_index:
            self._dim_index[d] = np.flatnonzero(self.dims == d)
        return self._dim_index[d]

    @classmethod
    def from_simplices(cls, simplices, vertex_count: int | None = None,
                       kind: str = "generic") -> "FilteredComplex":
        """Build from an iterable of ((vertices...), value) pairs."""
        simplices = list(simplices)
        m = len(simplices)
        verts = np.full((m, 4), -1, dtype=np.int32)
        values = np.empty(m)
        dims = np.empty(m, dtype=np.int8)
        top = -1
        for i, (vs, val) in enumerate(simplices):
            vs = tuple(sorted(int(v) for v in vs))
            if not 1 <= len(vs) <= 4:
                raise ValueError(f"simplex of {len(vs)} vertices unsupported")
            if len(set(vs)) != len(vs):
                raise ValueError(f"repeated vertex in simplex {vs}")
            verts[i, :len(vs)] = vs
            values[i] = val
            dims[i] = len(vs) - 1
            top = max(top, vs[-1])
        if vertex_count is None:
            vertex_count = top + 1
        return cls(verts, values, dims, vertex_count, kind=kind)


def _pack_keys(verts: np.ndarray, vertex_count: int) -> np.ndarray:
    """Injective int64 key per simplex (vertex ids shifted by +1)."""
    v = verts.astype(np.int64) + 1
    if vertex_count < (1 << 15):
        return v[:, 0] | (v[:, 1] << 16) | (v[:, 2] << 32) | (v[:, 3] << 48)
    # wide ids only occur for edges/vertices (lower-star pixel graphs)
    if np.any(verts[:, 2] >= 0):
        raise ValueError("vertex ids too large for dimension > 1 packing")
    return v[:, 0] | (v[:, 1] << 31)


def _facet_keys(verts: np.ndarray, d: int, vertex_count: int) -> np.ndarray:
    """(m, d+1) int64 keys of the facets of each d-simplex."""
    m = len(verts)
    out = np.empty((m, d + 1), dtype=np.int64)
    for drop in range(d + 1):
        keep = [c for c in range(d + 1) if c != drop]
        facet = np.full((m, 4), -1, dtype=np.int32)
        facet[:, :d] = verts[:, keep]
        out[:, drop] = _pack_keys(facet, vertex_count)
    return out


def sort_simplices(cx: FilteredComplex) -> FilteredComplex:
    """Stable total order: (value, dimension, lexicographic vertex tuple).

    Validates closure on the way: every facet of every simplex must be
    present with a filtration value no greater than the simplex's own
    (which together with the sort key puts faces before cofaces).
    """
    order = np.lexsort((cx.verts[:, 3], cx.verts[:, 2], cx.verts[:, 1],
                        cx.verts[:, 0], cx.dims, cx.values))
    out = FilteredComplex(cx.verts[order], cx.values[order], cx.dims[order],
                          cx.vertex_count, kind=cx.kind, is_sorted=True,
                          built_dim=cx.built_dim)
    _validate_faces(out)
    return out


def _validate_faces(cx: FilteredComplex) -> None:
    for d in range(1, cx.max_dim + 1):
        rows = cx.dim_indices(d)
        faces = cx.dim_indices(d - 1)
        if len(rows) == 0:
            continue
        if len(faces) == 0:
            raise ConsistencyError(f"dimension {d} simplices with no faces")
        face_keys = _pack_keys(cx.verts[faces], cx.vertex_count)
        key_order = np.argsort(face_keys)
        sorted_keys = face_keys[key_order]
        want = _facet_keys(cx.verts[rows], d, cx.vertex_count)
        pos = np.searchsorted(sorted_keys, want)
        bad = (pos >= len(sorted_keys)) | (sorted_keys[np.minimum(
            pos, len(sorted_keys) - 1)] != want)
        if np.any(bad):
            i = int(np.flatnonzero(bad.any(axis=1))[0])
            raise ConsistencyError(
                f"missing facet of simplex {cx.simplex(rows[i]).vertices}")
        face_vals = cx.values[faces][key_order][pos]
        if np.any(face_vals > cx.values[rows][:, None] + 1e-12):
            i = int(np.flatnonzero(
                (face_vals > cx.values[rows][:, None] + 1e-12).any(axis=1))[0])
            raise ConsistencyError(
                f"facet enters after simplex {cx.simplex(rows[i]).vertices}")


def facet_positions(cx: FilteredComplex, d: int) -> np.ndarray:
    """Within-dimension row indices of each d-simplex's facets.

    Rows follow ``cx.dim_indices(d)`` order; columns are the d+1 facets as
    positions into ``cx.dim_indices(d-1)``, sorted ascending per row.
    Raises ConsistencyError when a facet is absent.
    """
    rows = cx.dim_indices(d)
    faces = cx.dim_indices(d - 1)
    face_keys = _pack_keys(cx.verts[faces], cx.vertex_count)
    key_order = np.argsort(face_keys)
    sorted_keys = face_keys[key_order]
    want = _facet_keys(cx.verts[rows], d, cx.vertex_count)
    pos = np.searchsorted(sorted_keys, want)
    ok = (pos < len(sorted_keys))
    if not np.all(ok) or np.any(sorted_keys[np.minimum(pos, len(sorted_keys) - 1)] != want):
        raise ConsistencyError("complex is not closed under faces")
    return np.sort(key_order[pos], axis=1).astype(np.int64)


def build_vr_filtration(points, max_dim: int = 3,
                        threshold: float = 500.0) -> FilteredComplex:
    """Filtered Vietoris-Rips complex on a point cloud (or FPC).

    Vertices enter at 0; the edge {a, b} enters at d(a, b) / 2; a higher
    simplex enters at the max of its edges (flag rule). Simplices whose
    value reaches ``threshold`` are omitted, which truncates the complex
    exactly where the strict d < 2*epsilon rule stops at the last scale.
    """
    if isinstance(points, FeaturePointCloud):
        points = points.vertices
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("need a nonempty (n, d) point cloud")
    if not 0 <= max_dim <= 3:
        raise ValueError("max_dim must be in 0..3")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    n = len(pts)
    if n == 1:
        vm = np.zeros((1, 1))
    else:
        vm = squareform(pdist(pts)) * 0.5
    adj = vm < threshold
    np.fill_diagonal(adj, False)

    iu, ju = np.triu_indices(n, k=1)
    keep = adj[iu, ju]
    eu, ev, evals = iu[keep], ju[keep], vm[iu[keep], ju[keep]]

    verts0 = np.full((n, 4), -1, dtype=np.int32)
    verts0[:, 0] = np.arange(n)
    verts1 = np.full((len(eu), 4), -1, dtype=np.int32)
    verts1[:, 0] = eu
    verts1[:, 1] = ev
    vert_list = [verts0, verts1]
    val_list = [np.zeros(n), evals]
    dim_list = [np.zeros(n, dtype=np.int8), np.ones(len(eu), dtype=np.int8)]

    if max_dim >= 2 and n >= 3:
        tri, tri_v, tet, tet_v = backend.vr_cliques(vm, adj, max_dim)
        if len(tri):
            vt = np.full((len(tri), 4), -1, dtype=np.int32)
            vt[:, :3] = tri
            vert_list.append(vt)
            val_list.append(tri_v)
            dim_list.append(np.full(len(tri), 2, dtype=np.int8))
        if max_dim >= 3 and len(tet):
            vert_list.append(tet)
            val_list.append(tet_v)
            dim_list.append(np.full(len(tet), 3, dtype=np.int8))

    cx = FilteredComplex(np.vstack(vert_list), np.concatenate(val_list),
                         np.concatenate(dim_list), n, kind=VR,
                         built_dim=max_dim)
    return sort_simplices(cx)


def _lower_star_edges(img: np.ndarray):
    """8-neighbor pixel edges (u < v by row-major id) and their max values."""
    h, w = img.shape
    ids = np.arange(h * w).reshape(h, w)
    vals = img.astype(np.float64)
    pairs = []
    for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
        r1, c1 = max(0, -dr), max(0, -dc)
        r2, c2 = h - max(0, dr), w - max(0, dc)
        a = ids[r1:r2, c1:c2].ravel()
        b = ids[r1 + dr:r2 + dr, c1 + dc:c2 + dc].ravel()
        v = np.maximum(vals[r1:r2, c1:c2].ravel(),
                       vals[r1 + dr:r2 + dr, c1 + dc:c2 + dc].ravel())
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        pairs.append((lo, hi, v))
    eu = np.concatenate([p[0] for p in pairs])
    ev = np.concatenate([p[1] for p in pairs])
    evals = np.concatenate([p[2] for p in pairs])
    return eu, ev, evals


def build_lower_star(img: np.ndarray) -> FilteredComplex:
    """Lower-star filtration of the 8-connected pixel graph.

    One vertex per pixel at its intensity; one edge per neighbor pair at
    the max of the endpoint intensities. Dimension stops at 1: cells of
    dimension >= 2 cannot change 0-dimensional persistence, the only part
    consumed downstream.
    """
    img = _require_image(img)
    h, w = img.shape
    n = h * w
    eu, ev, evals = _lower_star_edges(img)
    m = n + len(eu)
    verts = np.full((m, 4), -1, dtype=np.int32)
    verts[:n, 0] = np.arange(n)
    verts[n:, 0] = eu
    verts[n:, 1] = ev
    values = np.concatenate([img.ravel().astype(np.float64), evals])
    dims = np.concatenate([np.zeros(n, dtype=np.int8),
                           np.ones(len(eu), dtype=np.int8)])
    cx = FilteredComplex(verts, values, dims, n, kind=LOWER_STAR,
                         built_dim=1)
    return sort_simplices(cx)


def write_complex(path: str, cx: FilteredComplex) -> None:
    """Debug export: one 'dim value v0 v1 [v2 [v3]]' line per simplex."""
    with open(path, "w") as fh:
        for s in cx:
            vs = " ".join(str(v) for v in s.vertices)
            fh.write(f"{s.dim} {s.value!r} {vs}\n")
