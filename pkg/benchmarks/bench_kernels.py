#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot kernels (VR clique expansion, GF(2) boundary
reduction, dimension-0 union-find) on representative inputs, plus one
end-to-end persistence computation routed through each backend.

Usage: python benchmarks/bench_kernels.py [--points N] [--image N]
"""

import argparse
import time

import numpy as np

from topoct import _pure
from topoct.backend import get_backend


def timeit(fn, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_vr(impl, vm, adj):
    return timeit(lambda: impl.vr_cliques(vm, adj, 3))


def bench_reduce(impl, n_rows, indptr, indices):
    cleared = np.zeros(len(indptr) - 1, dtype=np.uint8)
    return timeit(lambda: impl.reduce_boundary(n_rows, indptr, indices,
                                               cleared))


def bench_uf(impl, vv, eu, ev, ew):
    return timeit(lambda: impl.union_find_zero(vv, eu, ev, ew))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=55,
                    help="VR cloud size (tetrahedra grow as n^4)")
    ap.add_argument("--image", type=int, default=256,
                    help="side of the random image for the union-find sweep")
    args = ap.parse_args()

    try:
        accel = get_backend("accel")
    except ImportError:
        print("compiled backend not built; run pip install -e . first")
        return

    rng = np.random.default_rng(0)
    rows = []

    # VR clique expansion
    pts = rng.uniform(0, 10, (args.points, 3))
    vm = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)) / 2
    adj = vm < np.inf
    np.fill_diagonal(adj, False)
    tp, (tri, triw, tet, tetw) = bench_vr(_pure, vm, adj)
    ta, _ = bench_vr(accel, vm, adj)
    rows.append((f"vr_cliques n={args.points} "
                 f"({len(tri)} tris, {len(tet)} tets)", tp, ta))

    # boundary reduction of the tetrahedron boundary matrix
    from topoct.filtration import build_vr_filtration, facet_positions
    cx = build_vr_filtration(pts, max_dim=3)
    cols = cx.dim_indices(3)
    bnd = facet_positions(cx, 3)
    indptr = np.arange(len(cols) + 1, dtype=np.int64) * 4
    indices = bnd.ravel().astype(np.int32)
    n_rows = len(cx.dim_indices(2))
    rp, _ = bench_reduce(_pure, n_rows, indptr, indices)
    ra, _ = bench_reduce(accel, n_rows, indptr, indices)
    rows.append((f"reduce_boundary {len(cols)}x{n_rows}", rp, ra))

    # union-find on a random image's lower-star edges
    from topoct.filtration import _lower_star_edges
    img = rng.integers(0, 256, (args.image, args.image)).astype(np.uint8)
    vv = img.ravel().astype(np.float64)
    eu, ev, ew = _lower_star_edges(img)
    order = np.lexsort((ev, eu, ew))
    eu, ev, ew = eu[order].astype(np.int64), ev[order].astype(np.int64), ew[order]
    up, _ = bench_uf(_pure, vv, eu, ev, ew)
    ua, _ = bench_uf(accel, vv, eu, ev, ew)
    rows.append((f"union_find {args.image}x{args.image} image "
                 f"({len(eu)} edges)", up, ua))

    # end-to-end persistence through each backend
    import topoct.backend as bk
    from topoct.persistence import compute_persistence

    saved = (bk.reduce_boundary, bk.vr_cliques, bk.union_find_zero)
    times = {}
    for name in ("pure", "accel"):
        impl = get_backend(name)
        bk.reduce_boundary = impl.reduce_boundary
        bk.vr_cliques = impl.vr_cliques
        bk.union_find_zero = impl.union_find_zero
        t, _ = timeit(lambda: compute_persistence(
            build_vr_filtration(pts, max_dim=3), 2), repeat=1)
        times[name] = t
    bk.reduce_boundary, bk.vr_cliques, bk.union_find_zero = saved
    rows.append((f"full VR persistence n={args.points}",
                 times["pure"], times["accel"]))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'pure':>10}  {'accel':>10}  {'speedup':>8}")
    for name, tp, ta in rows:
        print(f"{name:<{width}}  {tp:>9.4f}s  {ta:>9.4f}s  {tp / ta:>7.1f}x")


if __name__ == "__main__":
    main()
