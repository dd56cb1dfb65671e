"""Pure-Python kernels: boundary reduction, clique expansion, union-find.

Same contracts as the compiled module ``topoct._accel``; ``topoct.backend``
picks whichever is available (or this one when TOPOCT_PURE=1). Boundary
columns are Python integers used as GF(2) bit vectors, so column addition
is a single XOR and the pivot is ``bit_length() - 1``.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"


def reduce_boundary(n_rows, indptr, indices, cleared):
    """Left-to-right GF(2) column reduction of one boundary matrix.

    Columns are given CSC-style (``indices[indptr[j]:indptr[j+1]]`` are the
    sorted row indices of column j) and must already be in filtration order.
    Columns flagged in ``cleared`` are known creators (pivot rows of the
    next-higher boundary matrix) and are skipped.

    Returns an int64 array ``lows`` with the pivot row of each reduced
    column, or -1 where the column reduced to zero.
    """
    m = len(indptr) - 1
    lows = np.full(m, -1, dtype=np.int64)
    pivot_owner = {}
    stored = {}
    indptr = np.asarray(indptr)
    indices = np.asarray(indices)
    for j in range(m):
        if cleared[j]:
            continue
        col = 0
        for r in indices[indptr[j]:indptr[j + 1]]:
            col |= 1 << int(r)
        while col:
            low = col.bit_length() - 1
            owner = pivot_owner.get(low)
            if owner is None:
                pivot_owner[low] = j
                stored[j] = col
                lows[j] = low
                break
            col ^= stored[owner]
    return lows


def vr_cliques(values, adj, max_dim):
    """Enumerate VR triangles (and tetrahedra) from an edge-value matrix.

    ``values`` is the symmetric (n, n) matrix of edge filtration values and
    ``adj`` the boolean adjacency of edges that survive the threshold. A
    clique enters at the max of its edges. Vertices/edges are the caller's
    job; this returns ``(tri, tri_val, tet, tet_val)`` with vertex ids
    sorted ascending within each row.
    """
    n = adj.shape[0]
    tris: list[tuple[int, int, int]] = []
    tri_vals: list[float] = []
    tets: list[tuple[int, int, int, int]] = []
    tet_vals: list[float] = []
    if max_dim >= 2:
        idx = np.arange(n)
        for i in range(n):
            nbr_i = idx[i + 1:][adj[i, i + 1:]]
            for a, j in enumerate(nbr_i):
                later = nbr_i[a + 1:]
                common_ij = later[adj[j, later]]
                for b in range(len(common_ij)):
                    k = int(common_ij[b])
                    v3 = max(values[i, j], values[i, k], values[j, k])
                    tris.append((i, int(j), k))
                    tri_vals.append(float(v3))
                    if max_dim >= 3:
                        rest = common_ij[b + 1:]
                        common_ijk = rest[adj[k, rest]]
                        for l in common_ijk:
                            v4 = max(v3, values[i, l], values[j, l],
                                     values[k, l])
                            tets.append((i, int(j), k, int(l)))
                            tet_vals.append(float(v4))
    tri_arr = np.array(tris, dtype=np.int32).reshape(-1, 3)
    tet_arr = np.array(tets, dtype=np.int32).reshape(-1, 4)
    return (tri_arr, np.array(tri_vals, dtype=np.float64),
            tet_arr, np.array(tet_vals, dtype=np.float64))


def union_find_zero(vert_values, edges_u, edges_v, edge_values):
    """Dimension-0 persistence sweep with the elder rule.

    ``vert_values[i]`` is the filtration value of vertex i; edges arrive
    pre-sorted in filtration order. When an edge merges two components the
    younger one (larger (birth value, creator id)) dies at the edge value.

    Returns ``(pair_births, pair_deaths, creator_mask, essential_births)``.
    Zero-persistence pairs are included; callers filter. ``creator_mask``
    marks edges that closed a cycle instead of merging.
    """
    nv = len(vert_values)
    ne = len(edges_u)
    parent = np.arange(nv, dtype=np.int64)
    # birth vertex id of the component rooted at r
    birth_of = np.arange(nv, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    births = []
    deaths = []
    creator = np.zeros(ne, dtype=np.uint8)
    for e in range(ne):
        ru = find(int(edges_u[e]))
        rv = find(int(edges_v[e]))
        if ru == rv:
            creator[e] = 1
            continue
        bu, bv = birth_of[ru], birth_of[rv]
        # elder = smaller (value, creator id)
        if (vert_values[bu], bu) <= (vert_values[bv], bv):
            elder_root, young_root = ru, rv
            young_birth = bv
        else:
            elder_root, young_root = rv, ru
            young_birth = bu
        births.append(float(vert_values[young_birth]))
        deaths.append(float(edge_values[e]))
        parent[young_root] = elder_root
    essential = sorted(float(vert_values[birth_of[find(v)]])
                       for v in range(nv) if find(v) == v)
    return (np.array(births, dtype=np.float64),
            np.array(deaths, dtype=np.float64),
            creator,
            np.array(essential, dtype=np.float64))
