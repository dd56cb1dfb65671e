"""RBF-kernel SVM (SMO), PCA reduction, metrics, and k-fold evaluation.

The kernel follows the convention that the scale divides the inputs
before the Gram matrix: K(u, v) = exp(-||(u - v)/scale||^2), i.e. no
extra 1/2 factor. The dual is solved by sequential minimal optimization
with an error cache and deterministic working-set selection, so a fixed
seed reproduces every number downstream bit for bit.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)


def concat_features(h0, h1, h2, lsf) -> np.ndarray:
    """Fixed-order concatenation (H0, H1, H2, LSF) of equal-length vectors."""
    parts = [np.asarray(v, dtype=np.float64) for v in (h0, h1, h2, lsf)]
    k = parts[0].shape[-1]
    if any(p.shape[-1] != k for p in parts):
        raise ValueError("feature blocks must have equal length")
    return np.concatenate(parts, axis=-1)


# ---------------------------------------------------------------------------
# PCA (Gram-matrix route when samples < features)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray          # (p,)
    components: np.ndarray    # (d_eff, p) orthonormal rows
    variances: np.ndarray     # (d_eff,) decreasing

    @property
    def d(self) -> int:
        return len(self.components)


def pca_fit(X: np.ndarray, d: int, rank_tol: float = 1e-12) -> PcaBasis:
    """Top-d principal components of centered X.

    Uses the n x n Gram matrix when n < p so the p x p covariance is never
    formed. Directions with negligible variance are dropped, so rank-
    deficient data yields fewer than d rows.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    if not 1 <= d <= min(n, p):
        raise ValueError(f"d = {d} outside 1..min(n={n}, p={p})")
    mean = X.mean(axis=0)
    Xc = X - mean
    if n < p:
        gram = Xc @ Xc.T
        eigval, eigvec = np.linalg.eigh(gram)
        order = np.argsort(eigval)[::-1][:d]
        eigval, eigvec = eigval[order], eigvec[:, order]
        floor = max(eigval[0], 0.0) * rank_tol if len(eigval) else 0.0
        keep = eigval > max(floor, 1e-300)
        eigval, eigvec = eigval[keep], eigvec[:, keep]
        comps = (Xc.T @ eigvec) / np.sqrt(eigval)[None, :]
        comps = comps.T
    else:
        cov = Xc.T @ Xc
        eigval, eigvec = np.linalg.eigh(cov)
        order = np.argsort(eigval)[::-1][:d]
        eigval, eigvec = eigval[order], eigvec[:, order]
        floor = max(eigval[0], 0.0) * rank_tol if len(eigval) else 0.0
        keep = eigval > max(floor, 1e-300)
        eigval, eigvec = eigval[keep], eigvec[:, keep]
        comps = eigvec.T
    for i in range(len(comps)):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return PcaBasis(mean, np.ascontiguousarray(comps),
                    eigval / max(n - 1, 1))


def pca_transform(basis: PcaBasis, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return (x - basis.mean) @ basis.components.T


# ---------------------------------------------------------------------------
# SMO solver
# ---------------------------------------------------------------------------

@dataclass
class SvmModel:
    support_vectors: np.ndarray   # (n_sv, d)
    dual_coef: np.ndarray         # (n_sv,) alpha_i * y_i, in [-C, C]
    bias: float
    scale: float
    C: float
    converged: bool = True
    kkt_residual: float = 0.0
    pca: PcaBasis | None = None


def _kernel_matrix(A: np.ndarray, B: np.ndarray, scale: float) -> np.ndarray:
    a = A / scale
    b = B / scale
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    return np.exp(-np.maximum(sq, 0.0))


def svm_train(X, y, C: float, scale: float, tol: float = 1e-3,
              max_sweeps: int = 2000) -> SvmModel:
    """Soft-margin dual via SMO (Platt-style, deterministic order).

    ``y`` may be 0/1 or -1/+1. Terminates when a full sweep finds no
    KKT violation beyond ``tol``; the residual is measured on the final
    iterate, and non-convergence is reported on the model rather than
    raised.
    """
    X = np.asarray(X, dtype=np.float64)
    yy = np.where(np.asarray(y) > 0, 1.0, -1.0)
    if C <= 0 or scale <= 0:
        raise ValueError("C and scale must be positive")
    n = len(X)
    if len(np.unique(yy)) < 2:
        raise ValueError("training data must contain both classes")
    K = _kernel_matrix(X, X, scale)
    alpha = np.zeros(n)
    bias = 0.0
    errors = -yy.copy()   # E_i = f(x_i) - y_i with f == 0 initially

    def take_step(i1: int, i2: int) -> bool:
        nonlocal bias
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = yy[i1], yy[i2]
        e1, e2 = errors[i1], errors[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if lo >= hi:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(max(a2_new, lo), hi)
        else:
            # flat direction: evaluate the dual objective at both clip ends;
            # g_i = contribution of all other points to f(x_i)
            g1 = y1 * (e1 + y1 - bias) - a1 * k11 - s * a2 * k12
            g2 = y2 * (e2 + y2 - bias) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            obj_lo = (l1 * g1 + lo * g2 + 0.5 * l1 * l1 * k11
                      + 0.5 * lo * lo * k22 + s * lo * l1 * k12 - l1 - lo)
            obj_hi = (h1 * g1 + hi * g2 + 0.5 * h1 * h1 * k11
                      + 0.5 * hi * hi * k22 + s * hi * h1 * k12 - h1 - hi)
            if obj_lo < obj_hi - 1e-12:
                a2_new = lo
            elif obj_lo > obj_hi + 1e-12:
                a2_new = hi
            else:
                return False
        if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        d1 = y1 * (a1_new - a1)
        d2 = y2 * (a2_new - a2)
        b1 = bias - e1 - d1 * k11 - d2 * k12
        b2 = bias - e2 - d1 * k12 - d2 * k22
        if 0 < a1_new < C:
            bias_new = b1
        elif 0 < a2_new < C:
            bias_new = b2
        else:
            bias_new = 0.5 * (b1 + b2)
        errors[:] += d1 * K[i1] + d2 * K[i2] + (bias_new - bias)
        alpha[i1], alpha[i2] = a1_new, a2_new
        bias = bias_new
        return True

    def examine(i2: int) -> bool:
        y2, a2, e2 = yy[i2], alpha[i2], errors[i2]
        r2 = e2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return False
        non_bound = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(errors[non_bound] - e2))])
            if take_step(i1, i2):
                return True
        for i1 in non_bound:
            if take_step(int(i1), i2):
                return True
        for i1 in range(n):
            if take_step(i1, i2):
                return True
        return False

    examine_all = True
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        changed = 0
        if examine_all:
            # refresh the cache: incremental updates drift over long runs
            errors[:] = K @ (alpha * yy) + bias - yy
            for i in range(n):
                changed += examine(i)
        else:
            for i in np.flatnonzero((alpha > 0) & (alpha < C)):
                changed += examine(int(i))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    converged = sweeps < max_sweeps

    errors[:] = K @ (alpha * yy) + bias - yy
    margins = yy * (errors + yy)   # y_i * f(x_i)
    resid = 0.0
    for i in range(n):
        if alpha[i] < 1e-9:
            resid = max(resid, 1.0 - margins[i])
        elif alpha[i] > C - 1e-9:
            resid = max(resid, margins[i] - 1.0)
        else:
            resid = max(resid, abs(margins[i] - 1.0))
    resid = max(resid, 0.0)
    if resid > tol:
        log.debug("SMO stalled: KKT residual %.3g after %d sweeps",
                  resid, sweeps)

    sv = alpha > 1e-12
    return SvmModel(np.ascontiguousarray(X[sv]), alpha[sv] * yy[sv],
                    float(bias), float(scale), float(C),
                    converged=bool(converged and resid <= tol),
                    kkt_residual=float(resid))


def decision_function(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.pca is not None:
        X = pca_transform(model.pca, X)
    if len(model.support_vectors) == 0:
        return np.full(len(X), model.bias)
    K = _kernel_matrix(X, model.support_vectors, model.scale)
    return K @ model.dual_coef + model.bias


def predict(model: SvmModel, X) -> np.ndarray:
    """1 = positive class, 0 = negative class."""
    return (decision_function(model, X) >= 0).astype(np.int64)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldMetrics:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "specificity": self.specificity,
                "f1": self.f1}


METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "f1")


def compute_metrics(predictions, labels) -> FoldMetrics:
    """Five confusion-matrix metrics as percentages.

    Zero-denominator metrics come back 0 with their name recorded in
    ``degenerate``.
    """
    pred = np.asarray(predictions).astype(bool)
    lab = np.asarray(labels).astype(bool)
    if pred.shape != lab.shape or pred.size == 0:
        raise ValueError("predictions and labels must be equal, nonempty")
    tp = int(np.sum(pred & lab))
    tn = int(np.sum(~pred & ~lab))
    fp = int(np.sum(pred & ~lab))
    fn = int(np.sum(~pred & lab))
    flags = []

    def ratio(num, den, name):
        if den == 0:
            flags.append(name)
            return 0.0
        return 100.0 * num / den

    acc = ratio(tp + tn, tp + tn + fp + fn, "accuracy")
    prec = ratio(tp, tp + fp, "precision")
    rec = ratio(tp, tp + fn, "recall")
    spec = ratio(tn, tn + fp, "specificity")
    if prec + rec > 0:
        f1 = 2.0 * prec * rec / (prec + rec)
    else:
        flags.append("f1")
        f1 = 0.0
    return FoldMetrics(acc, prec, rec, spec, f1, tuple(flags))


@dataclass
class MetricsReport:
    folds: list[FoldMetrics]
    hyperparams: list[tuple[float, float]]   # (C, scale) per fold
    seed: int
    converged: bool = True
    pca_dims: list[int] = field(default_factory=list)

    def mean(self, name: str) -> float:
        return float(np.mean([getattr(f, name) for f in self.folds]))

    def std(self, name: str) -> float:
        vals = [getattr(f, name) for f in self.folds]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    def to_text(self) -> str:
        lines = []
        for i, f in enumerate(self.folds):
            c, s = self.hyperparams[i]
            for name in METRIC_NAMES:
                lines.append(f"fold{i}.{name} = {getattr(f, name)!r}")
            lines.append(f"fold{i}.box_constraint = {c!r}")
            lines.append(f"fold{i}.kernel_scale = {s!r}")
            if f.degenerate:
                lines.append(f"fold{i}.degenerate = {','.join(f.degenerate)}")
        for name in METRIC_NAMES:
            lines.append(f"mean.{name} = {self.mean(name)!r}")
            lines.append(f"std.{name} = {self.std(name)!r}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"converged = {self.converged}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "folds": [
                dict(f.as_dict(), degenerate=list(f.degenerate),
                     box_constraint=self.hyperparams[i][0],
                     kernel_scale=self.hyperparams[i][1])
                for i, f in enumerate(self.folds)
            ],
            "mean": {n: self.mean(n) for n in METRIC_NAMES},
            "std": {n: self.std(n) for n in METRIC_NAMES},
            "seed": self.seed,
            "converged": self.converged,
            "pca_dims": self.pca_dims,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Hyperparameter search and k-fold evaluation
# ---------------------------------------------------------------------------

def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified split: k index arrays, each with both classes."""
    lab = np.asarray(labels).astype(bool)
    if k < 2:
        raise ValueError("need k >= 2 folds")
    folds: list[list[int]] = [[] for _ in range(k)]
    rng = np.random.default_rng(seed)
    for cls in (True, False):
        idx = np.flatnonzero(lab == cls)
        if len(idx) < k:
            raise DataError(
                f"class {int(cls)} has {len(idx)} samples, fewer than "
                f"k = {k} folds")
        idx = rng.permutation(idx)
        for pos, i in enumerate(idx):
            folds[pos % k].append(int(i))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def cv_loss(X, y, C: float, scale: float,
            folds: list[np.ndarray]) -> float:
    """Mean misclassification rate across the given folds."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    losses = []
    all_idx = np.arange(len(X))
    for fold in folds:
        train = np.setdiff1d(all_idx, fold)
        model = svm_train(X[train], y[train], C, scale)
        pred = predict(model, X[fold])
        losses.append(float(np.mean(pred != (np.asarray(y)[fold] > 0))))
    return float(np.mean(losses))


def hyperparam_search(X, y, budget: int = 0, *, seed: int = 0,
                      folds: int = 3, bounds: tuple[float, float] = (1e-3, 1e3),
                      grid: int = 7) -> tuple[float, float]:
    """Pick (box constraint, kernel scale) minimizing CV loss.

    Candidates are a deterministic grid x grid log lattice over ``bounds``
    by default, or ``budget`` seeded log-uniform draws when budget > 0.
    Ties resolve to the earliest candidate, so a fixed seed is fully
    reproducible.
    """
    lo, hi = bounds
    if budget > 0:
        rng = np.random.default_rng(seed)
        draws = 10 ** rng.uniform(np.log10(lo), np.log10(hi), (budget, 2))
        candidates = [tuple(map(float, d)) for d in draws]
    else:
        axis = np.logspace(np.log10(lo), np.log10(hi), grid)
        candidates = [(float(c), float(s)) for c in axis for s in axis]
    fold_idx = stratified_folds(y, folds, seed)
    best = None
    best_loss = np.inf
    for cand in candidates:
        loss = cv_loss(X, y, cand[0], cand[1], fold_idx)
        if loss < best_loss - 1e-15:
            best, best_loss = cand, loss
    return best


def kfold_evaluate(X, y, *, k: int = 5, seed: int = 0, pca_d: int | None = None,
                   search_budget: int = 0, inner_folds: int = 3,
                   bounds: tuple[float, float] = (1e-3, 1e3),
                   grid: int = 7, standardize: bool = False) -> MetricsReport:
    """Leak-free k-fold protocol: per fold, fit PCA on the training side,
    search hyperparameters there, train, and score the held-out fold."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    folds = stratified_folds(y, k, seed)
    seeds = np.random.SeedSequence(seed).spawn(k)
    all_idx = np.arange(len(X))
    fold_metrics = []
    hypers = []
    dims = []
    converged = True
    for f, test in enumerate(folds):
        train = np.setdiff1d(all_idx, test)
        Xtr, Xte = X[train], X[test]
        if standardize:
            mu, sd = Xtr.mean(axis=0), Xtr.std(axis=0)
            sd[sd == 0] = 1.0
            Xtr, Xte = (Xtr - mu) / sd, (Xte - mu) / sd
        pca = None
        if pca_d is not None:
            d_eff = min(pca_d, len(Xtr) - 1, Xtr.shape[1])
            if d_eff < pca_d:
                log.warning("PCA dimension lowered %d -> %d (fold %d)",
                            pca_d, d_eff, f)
            pca = pca_fit(Xtr, d_eff)
            Xtr, Xte = pca_transform(pca, Xtr), pca_transform(pca, Xte)
            dims.append(pca.d)
        fold_seed = int(seeds[f].generate_state(1)[0])
        c, s = hyperparam_search(Xtr, y[train], search_budget,
                                 seed=fold_seed, folds=inner_folds,
                                 bounds=bounds, grid=grid)
        model = svm_train(Xtr, y[train], c, s)
        model.pca = None   # inputs already transformed
        converged &= model.converged
        pred = predict(model, Xte)
        fold_metrics.append(compute_metrics(pred, y[test] > 0))
        hypers.append((c, s))
    return MetricsReport(fold_metrics, hypers, seed, converged, dims)


# ---------------------------------------------------------------------------
# Model file: PCA basis + SVM parameters in one binary envelope
# ---------------------------------------------------------------------------

_SVM_MAGIC = b"TSVM"
_SVM_VERSION = 1


def save_model(path: str, model: SvmModel) -> None:
    with open(path, "wb") as fh:
        fh.write(_SVM_MAGIC)
        fh.write(struct.pack("<B", _SVM_VERSION))
        n_sv, dim = model.support_vectors.shape if len(
            model.support_vectors) else (0, 0)
        fh.write(struct.pack("<dddBdQQ", model.C, model.scale, model.bias,
                             int(model.converged), model.kkt_residual,
                             n_sv, dim))
        fh.write(model.support_vectors.astype("<f8").tobytes())
        fh.write(model.dual_coef.astype("<f8").tobytes())
        if model.pca is None:
            fh.write(struct.pack("<B", 0))
        else:
            p = model.pca.mean.shape[0]
            d = model.pca.d
            fh.write(struct.pack("<BQQ", 1, p, d))
            fh.write(model.pca.mean.astype("<f8").tobytes())
            fh.write(model.pca.components.astype("<f8").tobytes())
            fh.write(model.pca.variances.astype("<f8").tobytes())


def load_model(path: str) -> SvmModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _SVM_MAGIC:
            raise ValueError(f"{path}: not a model file")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != _SVM_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        C, scale, bias, conv, kkt, n_sv, dim = struct.unpack(
            "<dddBdQQ", fh.read(49))
        sv = np.frombuffer(fh.read(8 * n_sv * dim),
                           dtype="<f8").reshape(n_sv, dim).copy()
        coef = np.frombuffer(fh.read(8 * n_sv), dtype="<f8").copy()
        (has_pca,) = struct.unpack("<B", fh.read(1))
        pca = None
        if has_pca:
            p, d = struct.unpack("<QQ", fh.read(16))
            mean = np.frombuffer(fh.read(8 * p), dtype="<f8").copy()
            comps = np.frombuffer(fh.read(8 * d * p),
                                  dtype="<f8").reshape(d, p).copy()
            var = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
            pca = PcaBasis(mean, comps, var)
    return SvmModel(sv, coef, bias, scale, C, bool(conv), kkt, pca)
