import numpy as np
import pytest

from topoct.errors import ConsistencyError
from topoct.filtration import (FilteredComplex, build_lower_star,
                               build_vr_filtration, sort_simplices,
                               write_complex)


def equilateral(scale=1.0):
    return scale * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])


def test_vr_three_points_seven_simplices():
    cx = build_vr_filtration(equilateral(), max_dim=2)
    assert len(cx) == 7
    by_dim = {d: [s for s in cx if s.dim == d] for d in range(3)}
    assert len(by_dim[0]) == 3 and len(by_dim[1]) == 3 and len(by_dim[2]) == 1
    assert all(s.value == 0.0 for s in by_dim[0])
    assert all(abs(s.value - 0.5) < 1e-12 for s in by_dim[1])
    assert abs(by_dim[2][0].value - 0.5) < 1e-12


def test_vr_single_point():
    cx = build_vr_filtration(np.zeros((1, 3)), max_dim=3)
    assert len(cx) == 1
    assert cx.simplex(0) == ((0,), 0.0, 0)


def test_vr_threshold_cut_is_strict():
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    cx = build_vr_filtration(pts, max_dim=1, threshold=1.0)
    assert len(cx) == 2                      # d = 2*threshold: no edge
    cx2 = build_vr_filtration(pts, max_dim=1, threshold=1.0 + 1e-9)
    assert len(cx2) == 3


def test_vr_empty_cloud_rejected():
    with pytest.raises(ValueError):
        build_vr_filtration(np.empty((0, 3)))


def test_vr_monotone_nested_and_clique_rule():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 4, (8, 3))
    cx = build_vr_filtration(pts, max_dim=2, threshold=3.0)
    edge_val = {}
    for s in cx:
        if s.dim == 1:
            edge_val[s.vertices] = s.value
    for s in cx:
        if s.dim == 2:
            i, j, k = s.vertices
            edges = [edge_val[(i, j)], edge_val[(i, k)], edge_val[(j, k)]]
            assert s.value == max(edges)
    # nested sublevels
    vals = cx.values
    for e1, e2 in [(0.5, 1.0), (1.0, 2.0)]:
        assert np.sum(vals <= e1) <= np.sum(vals <= e2)


def test_vr_scaling_scales_values():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 3, (7, 2))
    a = build_vr_filtration(pts, max_dim=2)
    b = build_vr_filtration(2.5 * pts, max_dim=2)
    assert len(a) == len(b)
    assert np.allclose(b.values, 2.5 * a.values)


def test_lower_star_two_pixels():
    cx = build_lower_star(np.array([[5, 9]], dtype=np.uint8))
    simps = list(cx)
    assert simps[0] == ((0,), 5.0, 0)
    assert simps[1] == ((1,), 9.0, 0)
    assert simps[2] == ((0, 1), 9.0, 1)


def test_lower_star_constant_image():
    cx = build_lower_star(np.full((3, 4), 7, dtype=np.uint8))
    assert np.all(cx.values == 7.0)
    # 12 vertices + edges of the 8-connected 3x4 grid
    assert np.sum(cx.dims == 0) == 12
    assert np.sum(cx.dims == 1) == 9 + 8 + 6 + 6


def test_lower_star_center_zero_ring_255():
    img = np.full((3, 3), 255, dtype=np.uint8)
    img[1, 1] = 0
    cx = build_lower_star(img)
    center = 4   # row-major id of (1, 1)
    for s in cx:
        if s.dim == 0 and s.vertices == (center,):
            assert s.value == 0.0
        elif s.dim == 1 and center in s.vertices:
            assert s.value == 255.0


def test_lower_star_values_within_byte_range():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (6, 7)).astype(np.uint8)
    cx = build_lower_star(img)
    assert len(np.unique(cx.values)) <= 256
    assert cx.values.min() >= 0 and cx.values.max() <= 255


def test_sort_tie_breaks():
    cx = FilteredComplex.from_simplices(
        [((1,), 0.0), ((0,), 0.0)], vertex_count=2)
    srt = sort_simplices(cx)
    assert srt.simplex(0).vertices == (0,)
    cx2 = FilteredComplex.from_simplices(
        [((0, 1, 2), 0.5), ((0,), 0.0), ((1,), 0.0), ((2,), 0.0),
         ((0, 1), 0.5), ((0, 2), 0.2), ((1, 2), 0.5)])
    srt2 = sort_simplices(cx2)
    dims = [s.dim for s in srt2]
    values = [s.value for s in srt2]
    assert values == sorted(values)
    # at value 0.5 the edges precede the triangle
    tied = [s for s in srt2 if s.value == 0.5]
    assert [s.dim for s in tied] == [1, 1, 2]


def test_sorted_faces_before_cofaces_random():
    rng = np.random.default_rng(3)
    for _ in range(10):
        pts = rng.uniform(0, 3, (6, 2))
        cx = build_vr_filtration(pts, max_dim=3)
        seen = set()
        for s in cx:
            if s.dim > 0:
                for drop in range(len(s.vertices)):
                    face = s.vertices[:drop] + s.vertices[drop + 1:]
                    assert face in seen
            seen.add(s.vertices)


def test_sort_missing_face_raises():
    cx = FilteredComplex.from_simplices([((0,), 0.0), ((0, 1), 1.0)])
    with pytest.raises(ConsistencyError):
        sort_simplices(cx)


def test_sort_face_after_coface_raises():
    cx = FilteredComplex.from_simplices(
        [((0,), 0.0), ((1,), 2.0), ((0, 1), 1.0)])
    with pytest.raises(ConsistencyError):
        sort_simplices(cx)


def test_debug_export_format(tmp_path):
    cx = build_vr_filtration(equilateral(), max_dim=2)
    path = tmp_path / "cx.txt"
    write_complex(str(path), cx)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 7
    first = lines[0].split()
    assert first[0] == "0" and float(first[1]) == 0.0
    last = lines[-1].split()
    assert last[0] == "2" and len(last) == 5
