import numpy as np
import pytest

from topoct.classifier import (FoldMetrics, MetricsReport, compute_metrics,
                               concat_features, cv_loss, decision_function,
                               hyperparam_search, kfold_evaluate, load_model,
                               pca_fit, pca_transform, predict, save_model,
                               stratified_folds, svm_train)
from topoct.errors import DataError


def blobs(rng, n=30, gap=5.0, dim=2):
    X = np.vstack([rng.normal(0, 0.6, (n, dim)),
                   rng.normal(gap, 0.6, (n, dim))])
    y = np.array([1] * n + [0] * n)
    return X, y


def test_concat_features():
    out = concat_features([1, 2], [3, 4], [5, 6], [7, 8])
    assert out.tolist() == [1, 2, 3, 4, 5, 6, 7, 8]
    assert concat_features(*[np.zeros(3)] * 4).tolist() == [0.0] * 12
    swapped = concat_features([3, 4], [1, 2], [5, 6], [7, 8])
    assert not np.array_equal(out, swapped)
    with pytest.raises(ValueError):
        concat_features([1], [1, 2], [1], [1])


def test_pca_exact_low_rank():
    rng = np.random.default_rng(0)
    basis2 = rng.normal(size=(2, 10))
    X = rng.normal(size=(40, 2)) @ basis2 + rng.normal(size=10)
    pca = pca_fit(X, 2)
    Z = pca_transform(pca, X)
    recon = Z @ pca.components + pca.mean
    assert np.max(np.abs(recon - X)) < 1e-8
    assert np.allclose(pca_transform(pca, pca.mean), 0.0)
    # distances preserved for rank-<=d data
    d_orig = np.linalg.norm(X[0] - X[1])
    d_red = np.linalg.norm(Z[0] - Z[1])
    assert abs(d_orig - d_red) < 1e-8


def test_pca_explained_variance_decreasing():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 50)) * np.linspace(5, 0.1, 50)
    pca = pca_fit(X, 10)
    assert np.all(np.diff(pca.variances) <= 1e-12)
    with pytest.raises(ValueError):
        pca_fit(X, 21)


def test_pca_gram_route_matches_cov_route():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(12, 30))      # n < p: Gram route
    Xt = np.vstack([X] * 3)            # n > p: covariance route
    a = pca_fit(X, 3)
    b = pca_fit(Xt, 3)
    # same subspace: projections of centered rows agree up to sign
    pa = pca_transform(a, X)
    pb = pca_transform(b, X) - pca_transform(b, X).mean(axis=0)
    for j in range(3):
        assert (np.allclose(pa[:, j], pb[:, j], atol=1e-6)
                or np.allclose(pa[:, j], -pb[:, j], atol=1e-6))


def test_svm_separable_blobs():
    rng = np.random.default_rng(3)
    X, y = blobs(rng)
    m = svm_train(X, y, C=10.0, scale=2.0)
    assert np.all(predict(m, X) == y)
    assert m.kkt_residual <= 1e-3
    assert np.all(np.abs(m.dual_coef) <= m.C + 1e-12)


def test_svm_xor():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([1, 1, 0, 0])
    m = svm_train(X, y, C=100.0, scale=0.5)
    assert np.all(predict(m, X) == y)
    assert m.kkt_residual <= 1e-3


def test_svm_duplication_invariance():
    rng = np.random.default_rng(4)
    X, y = blobs(rng, n=20)
    m1 = svm_train(X, y, C=5.0, scale=2.0)
    m2 = svm_train(np.vstack([X, X]), np.concatenate([y, y]),
                   C=5.0, scale=2.0)
    probe = rng.uniform(-2, 7, (100, 2))
    assert np.all(predict(m1, probe) == predict(m2, probe))


def test_svm_single_class_rejected():
    with pytest.raises(ValueError):
        svm_train(np.zeros((4, 2)), np.ones(4), 1.0, 1.0)


def test_svm_kernel_scale_convention():
    # K(u, v) = exp(-||(u - v)/scale||^2), no extra 1/2 factor
    from topoct.classifier import _kernel_matrix
    u = np.array([[0.0, 0.0]])
    v = np.array([[3.0, 4.0]])
    k = _kernel_matrix(u, v, 5.0)[0, 0]
    assert abs(k - np.exp(-1.0)) < 1e-12


def test_metrics_examples():
    perfect = compute_metrics([1, 1, 0, 0], [1, 1, 0, 0])
    assert all(getattr(perfect, n) == 100.0 for n in
               ("accuracy", "precision", "recall", "specificity", "f1"))
    half = compute_metrics([1, 1, 0, 0], [1, 0, 1, 0])
    assert all(getattr(half, n) == 50.0 for n in
               ("accuracy", "precision", "recall", "specificity", "f1"))
    none_pos = compute_metrics([0, 0, 0], [1, 1, 0])
    assert none_pos.precision == 0.0 and "precision" in none_pos.degenerate
    assert none_pos.recall == 0.0
    with pytest.raises(ValueError):
        compute_metrics([1], [1, 0])


def test_metrics_always_positive_predictor():
    pred = np.ones(10, dtype=int)
    labels = np.array([1] * 5 + [0] * 5)
    m = compute_metrics(pred, labels)
    assert m.recall == 100.0 and m.specificity == 0.0 and m.accuracy == 50.0


def test_f1_is_harmonic_mean_per_fold():
    rng = np.random.default_rng(5)
    for _ in range(10):
        pred = rng.integers(0, 2, 30)
        labels = rng.integers(0, 2, 30)
        m = compute_metrics(pred, labels)
        if m.precision + m.recall > 0:
            want = 2 * m.precision * m.recall / (m.precision + m.recall)
            assert abs(m.f1 - want) < 1e-9


def test_stratified_folds():
    y = np.array([1] * 7 + [0] * 9)
    folds = stratified_folds(y, 3, seed=0)
    assert sorted(np.concatenate(folds).tolist()) == list(range(16))
    for f in folds:
        assert 0 < y[f].sum() < len(f)
    again = stratified_folds(y, 3, seed=0)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    with pytest.raises(DataError):
        stratified_folds(np.array([1, 0, 0, 0]), 2, seed=0)


def test_hyperparam_search_argmin_and_determinism():
    rng = np.random.default_rng(6)
    X, y = blobs(rng, n=12)
    pick = hyperparam_search(X, y, seed=9, grid=3)
    assert pick == hyperparam_search(X, y, seed=9, grid=3)
    folds = stratified_folds(y, 3, 9)
    axis = np.logspace(-3, 3, 3)
    losses = {(float(c), float(s)): cv_loss(X, y, float(c), float(s), folds)
              for c in axis for s in axis}
    assert losses[pick] == min(losses.values())
    # seeded random-search mode
    r1 = hyperparam_search(X, y, budget=5, seed=4)
    r2 = hyperparam_search(X, y, budget=5, seed=4)
    assert r1 == r2


def test_search_separable_reaches_high_cv_accuracy():
    rng = np.random.default_rng(7)
    X, y = blobs(rng, n=15, gap=8.0)
    c, s = hyperparam_search(X, y, seed=0)
    folds = stratified_folds(y, 3, 0)
    assert cv_loss(X, y, c, s, folds) <= 0.01


def test_kfold_perfect_classifier():
    rng = np.random.default_rng(8)
    X, y = blobs(rng, n=25, gap=10.0)
    rep = kfold_evaluate(X, y, k=5, seed=2, pca_d=2)
    for name in ("accuracy", "precision", "recall", "specificity", "f1"):
        assert rep.mean(name) == 100.0
        assert rep.std(name) == 0.0


def test_kfold_determinism():
    rng = np.random.default_rng(9)
    X, y = blobs(rng, n=10, gap=3.0)
    a = kfold_evaluate(X, y, k=5, seed=3, pca_d=2)
    b = kfold_evaluate(X, y, k=5, seed=3, pca_d=2)
    assert a.to_text() == b.to_text()
    assert a.hyperparams == b.hyperparams


def test_report_text_and_json():
    folds = [FoldMetrics(90.0, 80.0, 70.0, 60.0, 74.66666666666667)]
    rep = MetricsReport(folds, [(1.0, 2.0)], seed=5)
    text = rep.to_text()
    assert "fold0.accuracy = 90.0" in text
    assert "mean.accuracy = 90.0" in text
    import json
    payload = json.loads(rep.to_json())
    assert payload["mean"]["precision"] == 80.0
    assert payload["folds"][0]["kernel_scale"] == 2.0


def test_model_file_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    X, y = blobs(rng, n=15)
    m = svm_train(X, y, C=3.0, scale=1.5)
    m.pca = pca_fit(X, 2)
    path = tmp_path / "model.bin"
    save_model(str(path), m)
    back = load_model(str(path))
    assert np.array_equal(back.support_vectors, m.support_vectors)
    assert np.array_equal(back.dual_coef, m.dual_coef)
    assert back.bias == m.bias and back.C == m.C and back.scale == m.scale
    assert np.array_equal(back.pca.components, m.pca.components)
    probe = rng.uniform(-2, 7, (20, 2))
    assert np.allclose(decision_function(back, pca_transform(m.pca, probe)),
                       decision_function(m, pca_transform(m.pca, probe)))
