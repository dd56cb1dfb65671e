"""Cross-check the compiled kernels against the pure-Python fallback."""

import numpy as np
import pytest

from topoct import _pure
from topoct.backend import BACKEND_NAME, get_backend

try:
    from topoct import _accel
except ImportError:
    _accel = None

needs_accel = pytest.mark.skipif(_accel is None,
                                 reason="compiled kernels not built")


def random_boundary(rng, n_rows=40, n_cols=60, width=3):
    cols = [np.sort(rng.choice(n_rows, size=width, replace=False))
            for _ in range(n_cols)]
    indptr = np.arange(n_cols + 1, dtype=np.int64) * width
    indices = np.concatenate(cols).astype(np.int32)
    cleared = (rng.random(n_cols) < 0.2).astype(np.uint8)
    return n_rows, indptr, indices, cleared


@needs_accel
def test_reduce_boundary_matches():
    rng = np.random.default_rng(0)
    for _ in range(20):
        args = random_boundary(rng)
        assert np.array_equal(_pure.reduce_boundary(*args),
                              _accel.reduce_boundary(*args))


@needs_accel
def test_vr_cliques_matches():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(3, 14))
        pts = rng.uniform(0, 5, (n, 3))
        vm = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)) / 2
        adj = vm < float(rng.uniform(0.5, 2.5))
        np.fill_diagonal(adj, False)
        for max_dim in (2, 3):
            tri_p, tw_p, tet_p, qw_p = _pure.vr_cliques(vm, adj, max_dim)
            tri_a, tw_a, tet_a, qw_a = _accel.vr_cliques(vm, adj, max_dim)
            assert np.array_equal(tri_p, tri_a)
            assert np.array_equal(tw_p, tw_a)
            assert np.array_equal(tet_p, tet_a)
            assert np.array_equal(qw_p, qw_a)


@needs_accel
def test_union_find_matches():
    rng = np.random.default_rng(2)
    for _ in range(20):
        nv = int(rng.integers(2, 30))
        vv = rng.integers(0, 10, nv).astype(np.float64)
        ne = int(rng.integers(1, 60))
        eu = rng.integers(0, nv - 1, ne)
        ev = (eu + rng.integers(1, np.maximum(nv - eu, 2))).clip(max=nv - 1)
        keep = eu < ev
        eu, ev = eu[keep].astype(np.int64), ev[keep].astype(np.int64)
        ew = np.maximum(vv[eu], vv[ev])
        order = np.lexsort((ev, eu, ew))
        args = (vv, eu[order], ev[order], ew[order])
        out_p = _pure.union_find_zero(*args)
        out_a = _accel.union_find_zero(*args)
        for a, b in zip(out_p, out_a):
            assert np.array_equal(np.asarray(a), np.asarray(b))


def test_get_backend():
    assert get_backend().BACKEND_NAME == BACKEND_NAME
    assert get_backend("pure").BACKEND_NAME == "pure"
    with pytest.raises(ValueError):
        get_backend("nope")


@needs_accel
def test_full_persistence_same_on_both_backends(monkeypatch):
    import topoct.backend as bk
    import topoct.filtration as F
    import topoct.persistence as P

    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 6, (12, 3))

    def run():
        cx = F.build_vr_filtration(pts, max_dim=3, threshold=3.0)
        return P.compute_persistence(cx, 2)

    results = {}
    for name in ("pure", "accel"):
        impl = get_backend(name)
        monkeypatch.setattr(bk, "reduce_boundary", impl.reduce_boundary)
        monkeypatch.setattr(bk, "vr_cliques", impl.vr_cliques)
        monkeypatch.setattr(bk, "union_find_zero", impl.union_find_zero)
        results[name] = run()
    for d in range(3):
        assert P.diagrams_equal(results["pure"][d], results["accel"][d])
