"""Pipeline configuration: defaults, flat key=value files, stage hashes.

Numeric defaults follow the reference protocol (isotropic Gaussian
variance 0.2, VR threshold 500, grid over [0, 530], 2400 geodesic
components, 4800 PCA dimensions, 5 folds, search bounds 1e-3..1e3) except
the grid step, which defaults to the desk-scale 5.0; ``--paper-fidelity``
restores step 0.5 together with the full 2400/4800 dimensions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError

_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


@dataclass(frozen=True)
class PipelineConfig:
    cover_bands: int = 32
    cover_overlap: float = 0.0
    fpc_cap: int = 600
    fpc_include_intensity: bool = True
    vr_max_dim: int = 3
    vr_threshold: float = 500.0
    grid_min: float = 0.0
    grid_max: float = 530.0
    grid_step: float = 5.0
    gaussian_var: float = 0.2
    pga_k: int = 2400
    pga_joint: bool = False
    pca_d: int = 4800
    svm_bound_lo: float = 1e-3
    svm_bound_hi: float = 1e3
    svm_grid: int = 7
    search_budget: int = 0
    inner_folds: int = 3
    folds: int = 5
    seed: int = 0
    standardize: bool = False
    positive_dir: str = "COVID"
    negative_dir: str = "non-COVID"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in ("int", "float") and v is not None and v < 0:
                raise ConfigError(f"{f.name} must be nonnegative, got {v}")
        if self.cover_bands < 1 or self.folds < 2 or self.inner_folds < 2:
            raise ConfigError("cover_bands >= 1, folds/inner_folds >= 2")
        if not 0 <= self.vr_max_dim <= 3:
            raise ConfigError("vr_max_dim must be 0..3")
        if self.grid_step <= 0 or self.grid_max <= self.grid_min:
            raise ConfigError("grid must have positive extent and step")
        if self.svm_bound_lo <= 0 or self.svm_bound_hi <= self.svm_bound_lo:
            raise ConfigError("svm bounds must satisfy 0 < lo < hi")

    def with_paper_fidelity(self) -> "PipelineConfig":
        return replace(self, grid_step=0.5, pga_k=2400, pca_d=4800)

    # stage-scoped hashes so upstream caches survive downstream edits
    def diagram_stage_key(self) -> str:
        return _digest(dict(
            cover_bands=self.cover_bands, cover_overlap=self.cover_overlap,
            fpc_cap=self.fpc_cap,
            fpc_include_intensity=self.fpc_include_intensity,
            vr_max_dim=self.vr_max_dim, vr_threshold=self.vr_threshold))

    def feature_stage_key(self) -> str:
        return _digest(dict(
            diagram=self.diagram_stage_key(), grid_min=self.grid_min,
            grid_max=self.grid_max, grid_step=self.grid_step,
            gaussian_var=self.gaussian_var, pga_k=self.pga_k,
            pga_joint=self.pga_joint))

    def echo_lines(self) -> list[str]:
        return [f"config.{k} = {v}" for k, v in sorted(asdict(self).items())]


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _coerce(name: str, kind, raw: str):
    try:
        if kind is bool:
            return _BOOL[raw.strip().lower()]
        return kind(raw.strip())
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


_KINDS = {"int": int, "float": float, "bool": bool, "str": str}


def load_config(path: str | None, overrides: dict | None = None,
                paper_fidelity: bool = False) -> PipelineConfig:
    """Read a flat 'key = value' file ('#' comments) and apply overrides."""
    kinds = {f.name: _KINDS[f.type] for f in fields(PipelineConfig)}
    kwargs: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for ln, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
            kwargs[key] = _coerce(key, kinds[key], raw)
    if overrides:
        kwargs.update(overrides)
    try:
        cfg = PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if paper_fidelity:
        cfg = cfg.with_paper_fidelity()
    return cfg


def save_config(path: str, cfg: PipelineConfig) -> None:
    with open(path, "w") as fh:
        for k, v in sorted(asdict(cfg).items()):
            fh.write(f"{k} = {v}\n")
