import numpy as np
import pytest

from topoct.riemannian import (GridSpec, explained_ratio,
                               gaussian_mixture, karcher_mean, load_pga,
                               pd_to_density, pga_fit, pga_project,
                               pga_reconstruct, save_pga, sphere_distance,
                               sphere_exp, sphere_log, sqrt_embed)

GRID = GridSpec(0.0, 530.0, 5.0)


def random_sphere_point(rng, dim=60):
    v = np.abs(rng.normal(size=dim))
    return v / np.linalg.norm(v)


def test_grid_side():
    assert GridSpec(0, 530, 0.5).side == 1061
    assert GRID.side == 107
    with pytest.raises(ValueError):
        GridSpec(0, 530, 0.3)


def test_single_point_peak_value():
    mix = gaussian_mixture([(100.0, 200.0)], GRID)
    assert abs(mix.max() - 1.0 / (2 * np.pi * 0.2)) < 1e-12


def test_density_normalization_and_clamping():
    d = pd_to_density([(10.0, np.inf)], GRID)
    assert abs(d.integral() - 1.0) < 1e-6
    # the clamped essential death puts mass at the grid max
    peak = np.unravel_index(np.argmax(d.values), d.values.shape)
    assert GRID.axis()[peak[1]] == 530.0


def test_empty_diagram_uniform():
    d = pd_to_density(np.empty((0, 2)), GRID)
    assert np.allclose(d.values, d.values[0, 0])
    assert abs(d.integral() - 1.0) < 1e-12


def test_duplicate_point_cancels_under_normalization():
    a = pd_to_density([(1.0, 2.0)], GRID)
    b = pd_to_density([(1.0, 2.0), (1.0, 2.0)], GRID)
    assert np.allclose(a.values, b.values)


def test_sqrt_embed_unit_norm():
    rng = np.random.default_rng(0)
    for _ in range(10):
        pts = rng.uniform(0, 500, (rng.integers(1, 30), 2))
        pts = np.column_stack([pts.min(axis=1), pts.max(axis=1)])
        x = sqrt_embed(pd_to_density(pts, GRID))
        assert abs(np.linalg.norm(x) - 1.0) < 1e-9
        assert np.all(x >= 0)


def test_far_apart_diagrams_nearly_orthogonal():
    a = sqrt_embed(pd_to_density([(10.0, 20.0)], GridSpec(0, 530, 0.5)))
    b = sqrt_embed(pd_to_density([(400.0, 420.0)], GridSpec(0, 530, 0.5)))
    assert float(a @ b) < 1e-6


def test_sphere_distance_properties():
    rng = np.random.default_rng(1)
    x = random_sphere_point(rng)
    assert sphere_distance(x, x) == 0.0
    e1 = np.zeros(4)
    e1[0] = 1.0
    e2 = np.zeros(4)
    e2[1] = 1.0
    assert abs(sphere_distance(e1, e2) - np.pi / 2) < 1e-15
    for _ in range(20):
        a, b = random_sphere_point(rng), random_sphere_point(rng)
        assert sphere_distance(a, b) == sphere_distance(b, a)
    with pytest.raises(ValueError):
        sphere_distance(x, 2.0 * x)


def test_exp_log_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = random_sphere_point(rng), random_sphere_point(rng)
        t = sphere_log(a, b)
        assert abs(np.linalg.norm(t) - sphere_distance(a, b)) < 1e-12
        assert np.linalg.norm(sphere_exp(a, t) - b) < 1e-6
    assert np.allclose(sphere_log(a, a), 0.0)
    assert np.allclose(sphere_exp(a, np.zeros_like(a)), a)


def test_log_antipodal_rejected():
    e = np.zeros(5)
    e[0] = 1.0
    with pytest.raises(ValueError):
        sphere_log(e, -e)


def test_karcher_mean_basics():
    rng = np.random.default_rng(3)
    p = random_sphere_point(rng)
    assert np.allclose(karcher_mean(np.tile(p, (4, 1))), p)
    a, b = random_sphere_point(rng), random_sphere_point(rng)
    mid = karcher_mean(np.vstack([a, b]))
    assert abs(sphere_distance(mid, a) - sphere_distance(mid, b)) < 1e-6
    skew = karcher_mean(np.vstack([a, a, b]))
    assert sphere_distance(skew, a) < sphere_distance(skew, b)


def test_pga_geodesic_data():
    rng = np.random.default_rng(4)
    base = random_sphere_point(rng)
    d = np.abs(rng.normal(size=base.size))
    d -= (d @ base) * base
    d /= np.linalg.norm(d)
    pts = np.vstack([sphere_exp(base, s * d)
                     for s in np.linspace(-0.5, 0.5, 15)])
    model = pga_fit(pts, 2)
    assert explained_ratio(model)[0] >= 0.999
    assert np.allclose(pga_project(model, model.base), 0.0)


def test_pga_basis_orthonormal_and_tangent():
    rng = np.random.default_rng(5)
    pts = np.vstack([random_sphere_point(rng, 40) for _ in range(12)])
    model = pga_fit(pts, 6)
    gram = model.basis @ model.basis.T
    assert np.allclose(gram, np.eye(model.k), atol=1e-8)
    assert np.max(np.abs(model.basis @ model.base)) < 1e-8


def test_pga_reconstruction_monotone():
    rng = np.random.default_rng(6)
    pts = np.vstack([random_sphere_point(rng, 30) for _ in range(10)])
    errs = []
    for k in range(1, 8):
        model = pga_fit(pts, k)
        err = np.mean([sphere_distance(
            p, pga_reconstruct(model, pga_project(model, p))) for p in pts])
        errs.append(err)
    assert all(errs[i + 1] <= errs[i] + 1e-9 for i in range(len(errs) - 1))


def test_pga_k_too_large_rejected():
    rng = np.random.default_rng(7)
    pts = np.vstack([random_sphere_point(rng, 10) for _ in range(5)])
    with pytest.raises(ValueError):
        pga_fit(pts, 5)           # k > n - 1


def test_pga_model_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    pts = np.vstack([random_sphere_point(rng, 25) for _ in range(8)])
    model = pga_fit(pts, 4, grid=GRID)
    path = tmp_path / "m.pga"
    save_pga(str(path), model)
    back = load_pga(str(path))
    assert np.array_equal(back.base, model.base)
    assert np.array_equal(back.basis, model.basis)
    assert np.array_equal(back.variances, model.variances)
    assert back.grid == GRID
    with pytest.raises(ValueError):
        load_pga(__file__)


def test_diagram_sensitivity():
    a = sqrt_embed(pd_to_density([(50.0, 60.0)], GRID))
    b = sqrt_embed(pd_to_density([(50.0, 85.0)], GRID))   # moved 5 grid units
    assert sphere_distance(a, b) > 0.0


def test_feature_determinism():
    pts = [(12.0, 40.0), (100.0, 130.0), (7.0, np.inf)]
    a = sqrt_embed(pd_to_density(pts, GRID))
    b = sqrt_embed(pd_to_density(list(pts), GRID))
    assert np.array_equal(a, b)
