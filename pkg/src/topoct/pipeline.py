"""End-to-end orchestration: ingest, features (with caching), train,
evaluate, ablate, and the region-masking experiment.

Feature computation is a two-stage cache: persistence diagrams are cached
per image under (content hash x diagram-stage config hash), so changing
the embedding grid or PGA settings never recomputes topology. All stages
are deterministic for a fixed config and seed; parallel workers only ever
fill independent slots.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, backend
from .classifier import (MetricsReport, SvmModel, compute_metrics,
                         concat_features, decision_function, hyperparam_search,
                         kfold_evaluate, load_model, pca_fit, pca_transform,
                         predict, save_model, svm_train)
from .config import PipelineConfig, save_config
from .errors import ConfigError, DataError, FormatError
from .filtration import build_vr_filtration
from .imaging import build_fpc_capped, load_grayscale, mask_region
from .persistence import (compute_persistence, lsf_zero_diagram,
                          read_diagrams, write_diagrams)
from .riemannian import (GridSpec, PgaModel, load_pga, pd_to_density,
                         pga_fit, pga_project, save_pga, sqrt_embed)

log = logging.getLogger(__name__)

FEATURE_NAMES = ("h0", "h1", "h2", "lsf")


# ---------------------------------------------------------------------------
# Ingest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetEntry:
    path: str      # relative to the dataset root
    label: int     # 1 positive, 0 negative
    digest: str    # sha256 of the file bytes


@dataclass
class DatasetIndex:
    root: str
    entries: list[DatasetEntry]
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int]:
        pos = sum(e.label == 1 for e in self.entries)
        return pos, len(self.entries) - pos

    def to_json(self) -> str:
        return json.dumps({
            "root": self.root,
            "entries": [[e.path, e.label, e.digest] for e in self.entries],
            "skipped": self.skipped,
        }, indent=1, sort_keys=True)


def ingest(root: str, cfg: PipelineConfig) -> DatasetIndex:
    """Scan root/<positive>/*, root/<negative>/*; hash every readable file."""
    entries = []
    skipped = []
    for sub, label in ((cfg.positive_dir, 1), (cfg.negative_dir, 0)):
        class_dir = os.path.join(root, sub)
        if not os.path.isdir(class_dir):
            raise ConfigError(f"missing class directory {class_dir}")
        files = []
        for dirpath, _, names in os.walk(class_dir):
            files.extend(os.path.join(dirpath, n) for n in names)
        files.sort(key=lambda p: os.path.relpath(p, root))
        count = 0
        for f in files:
            rel = os.path.relpath(f, root)
            try:
                digest = hashlib.sha256(open(f, "rb").read()).hexdigest()
            except OSError as exc:
                log.warning("skipping unreadable %s: %s", rel, exc)
                skipped.append((rel, str(exc)))
                continue
            entries.append(DatasetEntry(rel, label, digest))
            count += 1
        if count == 0:
            raise ConfigError(f"class directory {class_dir} has no "
                              "readable files")
    return DatasetIndex(root, entries, skipped)


# ---------------------------------------------------------------------------
# Diagrams per image, with the staged cache
# ---------------------------------------------------------------------------

def compute_image_diagrams(img: np.ndarray,
                           cfg: PipelineConfig) -> dict[str, np.ndarray]:
    """The four diagrams of one image: VR H0/H1/H2 plus lower-star H0."""
    fpc, bands = build_fpc_capped(img, cfg.cover_bands, cfg.fpc_cap,
                                  cfg.cover_overlap)
    pts = fpc.vertices if cfg.fpc_include_intensity else fpc.vertices[:, :2]
    cx = build_vr_filtration(pts, max_dim=cfg.vr_max_dim,
                             threshold=cfg.vr_threshold)
    hom = min(2, max(cfg.vr_max_dim - 1, 0))
    vr = compute_persistence(cx, hom)
    while len(vr) < 3:
        vr.append(np.empty((0, 2)))
    return {"h0": vr[0], "h1": vr[1], "h2": vr[2],
            "lsf": lsf_zero_diagram(img)}


def _cache_paths(cache_dir: str, digest: str, stage_key: str):
    base = os.path.join(cache_dir, "diagrams", f"{digest[:16]}-{stage_key}")
    return base + ".vr.txt", base + ".lsf.txt"


def _atomic_write(path: str, writer) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    writer(tmp)
    os.replace(tmp, path)


def _diagrams_job(args):
    """Worker: load image, hit or fill the diagram cache."""
    i, abs_path, digest, cfg, cache_dir = args
    stage = cfg.diagram_stage_key()
    vr_path, lsf_path = _cache_paths(cache_dir, digest, stage)
    if os.path.exists(vr_path) and os.path.exists(lsf_path):
        try:
            vr = read_diagrams(vr_path)
            lsf = read_diagrams(lsf_path)
            while len(vr) < 3:
                vr.append(np.empty((0, 2)))
            dgms = {"h0": vr[0], "h1": vr[1], "h2": vr[2],
                    "lsf": lsf[0] if lsf else np.empty((0, 2))}
            return i, "hit", dgms
        except Exception as exc:   # corrupt cache: recompute
            log.warning("corrupt cache for %s (%s); recomputing",
                        abs_path, exc)
    try:
        img = load_grayscale(abs_path)
    except (FormatError, OSError) as exc:
        return i, "skip", str(exc)
    dgms = compute_image_diagrams(img, cfg)
    os.makedirs(os.path.dirname(vr_path), exist_ok=True)
    _atomic_write(vr_path, lambda p: write_diagrams(
        p, [dgms["h0"], dgms["h1"], dgms["h2"]]))
    _atomic_write(lsf_path, lambda p: write_diagrams(p, [dgms["lsf"]]))
    return i, "miss", dgms


# ---------------------------------------------------------------------------
# Feature computation
# ---------------------------------------------------------------------------

@dataclass
class FeatureSet:
    blocks: dict[str, np.ndarray]        # name -> (N, k) PGA coordinates
    labels: np.ndarray                   # (N,) int8
    paths: list[str]
    pga: dict[str, PgaModel]
    config: PipelineConfig
    cache_hits: int = 0
    cache_misses: int = 0
    skipped: list = field(default_factory=list)

    @property
    def block_k(self) -> int:
        return next(iter(self.blocks.values())).shape[1]

    def matrix(self, names=FEATURE_NAMES) -> np.ndarray:
        if len(names) == 4:
            return concat_features(*[self.blocks[n] for n in names])
        return np.concatenate([self.blocks[n] for n in names], axis=1)


def compute_features(index: DatasetIndex, cfg: PipelineConfig,
                     cache_dir: str, jobs: int = 1,
                     pga_from: dict[str, PgaModel] | None = None,
                     block_k: int | None = None) -> FeatureSet:
    """Diagrams -> densities -> sphere points -> PGA coordinates.

    ``pga_from`` projects with previously fitted models instead of fitting
    new ones (required to featurize new images for a trained model);
    ``block_k`` then pins the padded block width to the training one.
    """
    tasks = [(i, os.path.join(index.root, e.path), e.digest, cfg, cache_dir)
             for i, e in enumerate(index.entries)]
    results: list = [None] * len(tasks)
    hits = misses = 0
    skipped: list[tuple[str, str]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = pool.map(_diagrams_job, tasks)
    else:
        out = map(_diagrams_job, tasks)
    for i, status, payload in out:
        if status == "skip":
            skipped.append((index.entries[i].path, payload))
            log.warning("skipping %s: %s", index.entries[i].path, payload)
            continue
        hits += status == "hit"
        misses += status == "miss"
        results[i] = payload
    keep = [i for i, r in enumerate(results) if r is not None]
    labels = np.array([index.entries[i].label for i in keep], dtype=np.int8)
    paths = [index.entries[i].path for i in keep]
    if len(np.unique(labels)) < 2:
        raise DataError("a class was emptied by skipped images")

    grid = GridSpec(cfg.grid_min, cfg.grid_max, cfg.grid_step)
    n = len(keep)
    sphere = {}
    for name in FEATURE_NAMES:
        mat = np.empty((n, grid.ambient_dim))
        for row, i in enumerate(keep):
            dens = pd_to_density(results[i][name], grid, cfg.gaussian_var)
            mat[row] = sqrt_embed(dens)
        sphere[name] = mat

    k_fit = min(cfg.pga_k, n - 1, grid.ambient_dim)
    if k_fit < cfg.pga_k:
        log.warning("PGA components lowered %d -> %d (N=%d)",
                    cfg.pga_k, k_fit, n)
    models: dict[str, PgaModel] = {}
    blocks: dict[str, np.ndarray] = {}
    if pga_from is not None:
        models = dict(pga_from)
        k_fit = block_k if block_k else max(m.k for m in models.values())
    elif cfg.pga_joint:
        joint = pga_fit(np.vstack([sphere[n_] for n_ in FEATURE_NAMES]),
                        min(cfg.pga_k, 4 * n - 1, grid.ambient_dim), grid)
        models = {name: joint for name in FEATURE_NAMES}
        k_fit = joint.k
    else:
        for name in FEATURE_NAMES:
            models[name] = pga_fit(sphere[name], k_fit, grid)
    for name in FEATURE_NAMES:
        model = models[name]
        proj = np.array([pga_project(model, p) for p in sphere[name]])
        blocks[name] = _pad_cols(proj, k_fit)
    return FeatureSet(blocks, labels, paths, models, cfg,
                      hits, misses, skipped)


def _pad_cols(mat: np.ndarray, k: int) -> np.ndarray:
    """Zero-pad projections to k columns (rank-deficient blocks project
    to zero along the missing directions)."""
    if mat.shape[1] == k:
        return mat
    out = np.zeros((mat.shape[0], k))
    out[:, :mat.shape[1]] = mat
    return out


def save_features(outdir: str, fs: FeatureSet) -> None:
    os.makedirs(outdir, exist_ok=True)
    np.savez(os.path.join(outdir, "features.npz"),
             labels=fs.labels, paths=np.array(fs.paths),
             **{f"block_{k}": v for k, v in fs.blocks.items()})
    for name, model in fs.pga.items():
        save_pga(os.path.join(outdir, f"pga_{name}.pga"), model)
    save_config(os.path.join(outdir, "config.txt"), fs.config)
    write_run_log(outdir, fs.config,
                  extra=[f"cache_hits = {fs.cache_hits}",
                         f"cache_misses = {fs.cache_misses}",
                         f"skipped = {len(fs.skipped)}"])


def load_features(outdir: str) -> FeatureSet:
    from .config import load_config
    data = np.load(os.path.join(outdir, "features.npz"), allow_pickle=False)
    cfg = load_config(os.path.join(outdir, "config.txt"))
    blocks = {name: data[f"block_{name}"] for name in FEATURE_NAMES}
    pga = {name: load_pga(os.path.join(outdir, f"pga_{name}.pga"))
           for name in FEATURE_NAMES}
    return FeatureSet(blocks, data["labels"],
                      [str(p) for p in data["paths"]], pga, cfg)


def write_run_log(outdir: str, cfg: PipelineConfig,
                  extra: list[str] | None = None) -> None:
    lines = [f"topoct = {__version__}",
             f"python = {sys.version.split()[0]}",
             f"numpy = {np.__version__}",
             f"backend = {backend.BACKEND_NAME}",
             f"seed = {cfg.seed}"]
    lines += cfg.echo_lines()
    lines += extra or []
    with open(os.path.join(outdir, "run.log"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        log.info("%s", line)


# ---------------------------------------------------------------------------
# Train / evaluate / ablate / mask
# ---------------------------------------------------------------------------

def train(fs: FeatureSet, cfg: PipelineConfig,
          outdir: str) -> tuple[MetricsReport, SvmModel]:
    """Cross-validated evaluation plus a final model fit on all data."""
    X = fs.matrix()
    y = fs.labels.astype(np.int64)
    report = kfold_evaluate(
        X, y, k=cfg.folds, seed=cfg.seed, pca_d=cfg.pca_d,
        search_budget=cfg.search_budget, inner_folds=cfg.inner_folds,
        bounds=(cfg.svm_bound_lo, cfg.svm_bound_hi), grid=cfg.svm_grid,
        standardize=cfg.standardize)

    d_eff = min(cfg.pca_d, len(X) - 1, X.shape[1])
    pca = pca_fit(X, d_eff)
    Xp = pca_transform(pca, X)
    c, s = hyperparam_search(Xp, y, cfg.search_budget, seed=cfg.seed,
                             folds=cfg.inner_folds,
                             bounds=(cfg.svm_bound_lo, cfg.svm_bound_hi),
                             grid=cfg.svm_grid)
    final = svm_train(Xp, y, c, s)
    final.pca = pca

    os.makedirs(outdir, exist_ok=True)
    save_model(os.path.join(outdir, "model.bin"), final)
    with open(os.path.join(outdir, "metrics.txt"), "w") as fh:
        fh.write(report.to_text())
    with open(os.path.join(outdir, "metrics.json"), "w") as fh:
        fh.write(report.to_json())
    for name, model in fs.pga.items():
        save_pga(os.path.join(outdir, f"pga_{name}.pga"), model)
    save_config(os.path.join(outdir, "config.txt"), cfg)
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump({"block_k": fs.block_k,
                   "feature_names": list(FEATURE_NAMES),
                   "final_box_constraint": c,
                   "final_kernel_scale": s}, fh, indent=1, sort_keys=True)
    write_run_log(outdir, cfg,
                  extra=[f"final_box_constraint = {c!r}",
                         f"final_kernel_scale = {s!r}",
                         f"converged = {report.converged and final.converged}"])
    return report, final


def evaluate(fs: FeatureSet, modeldir: str) -> dict:
    """Apply a saved model to a feature set (same featurization)."""
    model = load_model(os.path.join(modeldir, "model.bin"))
    X = fs.matrix()
    pred = predict(model, X)
    metrics = compute_metrics(pred, fs.labels > 0)
    return {"metrics": metrics, "predictions": pred,
            "decision": decision_function(model, X)}


def ablate(fs: FeatureSet, cfg: PipelineConfig,
           outdir: str | None = None) -> dict[str, MetricsReport]:
    """Single-feature models under the identical fold protocol."""
    reports = {}
    for name in FEATURE_NAMES:
        reports[name] = kfold_evaluate(
            fs.blocks[name], fs.labels.astype(np.int64), k=cfg.folds,
            seed=cfg.seed, pca_d=cfg.pca_d,
            search_budget=cfg.search_budget, inner_folds=cfg.inner_folds,
            bounds=(cfg.svm_bound_lo, cfg.svm_bound_hi), grid=cfg.svm_grid,
            standardize=cfg.standardize)
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "ablation.txt"), "w") as fh:
            fh.write(ablation_table(reports))
        for name, rep in reports.items():
            with open(os.path.join(outdir, f"metrics_{name}.json"), "w") as fh:
                fh.write(rep.to_json())
        write_run_log(outdir, cfg)
    return reports


def ablation_table(reports: dict[str, MetricsReport]) -> str:
    names = ("accuracy", "precision", "recall", "specificity", "f1")
    lines = ["feature " + " ".join(f"{n}(mean+-std)" for n in names)]
    for feat, rep in reports.items():
        cells = [f"{rep.mean(n):.3f}+-{rep.std(n):.3f}" for n in names]
        lines.append(f"{feat} " + " ".join(cells))
    return "\n".join(lines) + "\n"


def feature_vector_for_image(img: np.ndarray, cfg: PipelineConfig,
                             pga: dict[str, PgaModel],
                             block_k: int) -> np.ndarray:
    """Featurize one image with previously fitted PGA models."""
    dgms = compute_image_diagrams(img, cfg)
    grid = GridSpec(cfg.grid_min, cfg.grid_max, cfg.grid_step)
    parts = []
    for name in FEATURE_NAMES:
        emb = sqrt_embed(pd_to_density(dgms[name], grid, cfg.gaussian_var))
        parts.append(_pad_cols(pga_project(pga[name], emb)[None, :],
                               block_k)[0])
    return concat_features(*parts)


def load_model_bundle(modeldir: str):
    from .config import load_config
    cfg = load_config(os.path.join(modeldir, "config.txt"))
    model = load_model(os.path.join(modeldir, "model.bin"))
    with open(os.path.join(modeldir, "meta.json")) as fh:
        meta = json.load(fh)
    pga = {name: load_pga(os.path.join(modeldir, f"pga_{name}.pga"))
           for name in FEATURE_NAMES}
    return cfg, model, pga, meta


def mask_predict(modeldir: str, image_path: str,
                 rect: tuple[int, int, int, int], fill: int) -> dict:
    """Predict an image and its region-masked copy with a saved model."""
    cfg, model, pga, meta = load_model_bundle(modeldir)
    img = load_grayscale(image_path)
    masked = mask_region(img, rect, fill)
    out = {}
    for tag, im in (("original", img), ("masked", masked)):
        x = feature_vector_for_image(im, cfg, pga, meta["block_k"])
        dec = float(decision_function(model, x[None, :])[0])
        out[f"decision_{tag}"] = dec
        out[f"prediction_{tag}"] = int(dec >= 0)
    return out
