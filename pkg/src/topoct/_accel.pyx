# distutils: language = c++
"""Compiled kernels: GF(2) boundary reduction, VR clique expansion, and the
dimension-0 union-find sweep. Contracts match ``topoct._pure``."""

import numpy as np

from libc.stdint cimport int64_t, uint32_t
from libcpp.vector cimport vector


BACKEND_NAME = "accel"


cdef void _symdiff(vector[uint32_t]& a, vector[uint32_t]& b,
                   vector[uint32_t]& out) noexcept:
    cdef size_t i = 0, j = 0
    out.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            out.push_back(a[i]); i += 1
        elif b[j] < a[i]:
            out.push_back(b[j]); j += 1
        else:
            i += 1; j += 1
    while i < a.size():
        out.push_back(a[i]); i += 1
    while j < b.size():
        out.push_back(b[j]); j += 1


def reduce_boundary(n_rows, indptr, indices, cleared):
    """See topoct._pure.reduce_boundary."""
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef unsigned char[::1] cl = np.ascontiguousarray(cleared, dtype=np.uint8)
    cdef Py_ssize_t m = ip.shape[0] - 1
    lows_arr = np.full(m, -1, dtype=np.int64)
    cdef long long[::1] lows = lows_arr
    cdef vector[int64_t] pivot_owner = vector[int64_t](n_rows, -1)
    cdef vector[vector[uint32_t]] stored = vector[vector[uint32_t]](m)
    cdef vector[uint32_t] col, tmp
    cdef Py_ssize_t j
    cdef long long t, owner
    cdef uint32_t low
    for j in range(m):
        if cl[j]:
            continue
        col.clear()
        for t in range(ip[j], ip[j + 1]):
            col.push_back(<uint32_t>ix[t])
        while col.size() > 0:
            low = col.back()
            owner = pivot_owner[low]
            if owner < 0:
                pivot_owner[low] = j
                stored[j] = col
                lows[j] = <long long>low
                break
            _symdiff(col, stored[owner], tmp)
            col.swap(tmp)
    return lows_arr


def vr_cliques(values, adj, max_dim):
    """See topoct._pure.vr_cliques."""
    cdef double[:, ::1] vm = np.ascontiguousarray(values, dtype=np.float64)
    cdef unsigned char[:, ::1] A = np.ascontiguousarray(
        np.asarray(adj).astype(np.uint8))
    cdef Py_ssize_t n = vm.shape[0]
    cdef int want_tets = 1 if max_dim >= 3 else 0
    cdef vector[int] tri_v
    cdef vector[double] tri_w
    cdef vector[int] tet_v
    cdef vector[double] tet_w
    cdef vector[int] nbr, common_ij, common_ijk
    cdef Py_ssize_t i, a, b, c
    cdef int j, k, l
    cdef double v3, v4
    if max_dim >= 2:
        for i in range(n):
            nbr.clear()
            for j in range(<int>i + 1, <int>n):
                if A[i, j]:
                    nbr.push_back(j)
            for a in range(<Py_ssize_t>nbr.size()):
                j = nbr[a]
                common_ij.clear()
                for b in range(a + 1, <Py_ssize_t>nbr.size()):
                    k = nbr[b]
                    if A[j, k]:
                        common_ij.push_back(k)
                for b in range(<Py_ssize_t>common_ij.size()):
                    k = common_ij[b]
                    v3 = vm[i, j]
                    if vm[i, k] > v3:
                        v3 = vm[i, k]
                    if vm[j, k] > v3:
                        v3 = vm[j, k]
                    tri_v.push_back(<int>i)
                    tri_v.push_back(j)
                    tri_v.push_back(k)
                    tri_w.push_back(v3)
                    if want_tets:
                        for c in range(b + 1, <Py_ssize_t>common_ij.size()):
                            l = common_ij[c]
                            if not A[k, l]:
                                continue
                            v4 = v3
                            if vm[i, l] > v4:
                                v4 = vm[i, l]
                            if vm[j, l] > v4:
                                v4 = vm[j, l]
                            if vm[k, l] > v4:
                                v4 = vm[k, l]
                            tet_v.push_back(<int>i)
                            tet_v.push_back(j)
                            tet_v.push_back(k)
                            tet_v.push_back(l)
                            tet_w.push_back(v4)
    tri = np.empty(tri_v.size(), dtype=np.int32)
    cdef int[::1] tri_mv = tri
    for a in range(<Py_ssize_t>tri_v.size()):
        tri_mv[a] = tri_v[a]
    tw = np.empty(tri_w.size(), dtype=np.float64)
    cdef double[::1] tw_mv = tw
    for a in range(<Py_ssize_t>tri_w.size()):
        tw_mv[a] = tri_w[a]
    tet = np.empty(tet_v.size(), dtype=np.int32)
    cdef int[::1] tet_mv = tet
    for a in range(<Py_ssize_t>tet_v.size()):
        tet_mv[a] = tet_v[a]
    qw = np.empty(tet_w.size(), dtype=np.float64)
    cdef double[::1] qw_mv = qw
    for a in range(<Py_ssize_t>tet_w.size()):
        qw_mv[a] = tet_w[a]
    return tri.reshape(-1, 3), tw, tet.reshape(-1, 4), qw


def union_find_zero(vert_values, edges_u, edges_v, edge_values):
    """See topoct._pure.union_find_zero."""
    cdef double[::1] vv = np.ascontiguousarray(vert_values, dtype=np.float64)
    cdef long long[::1] eu = np.ascontiguousarray(edges_u, dtype=np.int64)
    cdef long long[::1] ev = np.ascontiguousarray(edges_v, dtype=np.int64)
    cdef double[::1] ew = np.ascontiguousarray(edge_values, dtype=np.float64)
    cdef Py_ssize_t nv = vv.shape[0]
    cdef Py_ssize_t ne = eu.shape[0]
    parent_arr = np.arange(nv, dtype=np.int64)
    birth_arr = np.arange(nv, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef long long[::1] birth_of = birth_arr
    creator_arr = np.zeros(ne, dtype=np.uint8)
    cdef unsigned char[::1] creator = creator_arr
    cdef vector[double] births, deaths
    cdef Py_ssize_t e, v
    cdef long long ru, rv, x, nxt, elder_root, young_root, bu, bv, yb

    for e in range(ne):
        x = eu[e]
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        ru = x
        x = ev[e]
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        rv = x
        if ru == rv:
            creator[e] = 1
            continue
        bu = birth_of[ru]
        bv = birth_of[rv]
        if vv[bu] < vv[bv] or (vv[bu] == vv[bv] and bu <= bv):
            elder_root = ru; young_root = rv; yb = bv
        else:
            elder_root = rv; young_root = ru; yb = bu
        births.push_back(vv[yb])
        deaths.push_back(ew[e])
        parent[young_root] = elder_root

    cdef vector[double] essential
    for v in range(nv):
        x = v
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        if x == v:
            essential.push_back(vv[birth_of[v]])

    b_out = np.empty(births.size(), dtype=np.float64)
    d_out = np.empty(deaths.size(), dtype=np.float64)
    e_out = np.empty(essential.size(), dtype=np.float64)
    cdef double[::1] b_mv = b_out
    cdef double[::1] d_mv = d_out
    cdef double[::1] e_mv = e_out
    for e in range(<Py_ssize_t>births.size()):
        b_mv[e] = births[e]
        d_mv[e] = deaths[e]
    for e in range(<Py_ssize_t>essential.size()):
        e_mv[e] = essential[e]
    e_out.sort()
    return b_out, d_out, creator_arr, e_out
