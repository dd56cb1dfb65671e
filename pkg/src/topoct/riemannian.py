"""Diagrams as square-root densities on the unit Hilbert sphere, plus PGA.

Each diagram becomes a Gaussian-mixture density sampled on a square grid
over [0, 530]^2 (isotropic variance 0.2 per point, essential deaths
clamped to the grid max); the entrywise square root of (density * step^2)
is a unit vector, so diagrams live on the sphere where geodesic distance,
exp and log have closed forms. Principal geodesic analysis is tangent PCA
at the Karcher mean, computed through the N x N Gram matrix so the
ambient covariance is never materialized.

Sphere points are plain 1-D unit-norm float64 arrays.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

_UNIT_ATOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    lo: float = 0.0
    hi: float = 530.0
    step: float = 0.5

    def __post_init__(self):
        if self.hi <= self.lo or self.step <= 0:
            raise ValueError("need lo < hi and step > 0")
        n = (self.hi - self.lo) / self.step
        if abs(n - round(n)) > 1e-9:
            raise ValueError("step must divide the grid extent")

    @property
    def side(self) -> int:
        return int(round((self.hi - self.lo) / self.step)) + 1

    @property
    def ambient_dim(self) -> int:
        return self.side * self.side

    def axis(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.side)


@dataclass(frozen=True)
class DensityGrid:
    grid: GridSpec
    values: np.ndarray   # (side, side), nonnegative

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.step ** 2)


def gaussian_mixture(points, grid: GridSpec, var: float = 0.2) -> np.ndarray:
    """Unnormalized sum of isotropic Gaussians centered at diagram points.

    Points are clamped into the grid square first (infinite deaths land on
    the grid max). Separability keeps this at O(points * side) exponentials
    plus one rank-1 accumulation per point.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pts = np.clip(pts, grid.lo, grid.hi)
    ax = grid.axis()
    out = np.zeros((grid.side, grid.side))
    norm = 1.0 / (2.0 * np.pi * var)
    for b, d in pts:
        gb = np.exp(-((ax - b) ** 2) / (2.0 * var))
        gd = np.exp(-((ax - d) ** 2) / (2.0 * var))
        out += norm * np.outer(gb, gd)
    return out


def pd_to_density(points, grid: GridSpec, var: float = 0.2) -> DensityGrid:
    """Normalized density for one diagram; empty diagrams become uniform."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    cell = grid.step ** 2
    if len(pts) == 0:
        values = np.full((grid.side, grid.side),
                         1.0 / (grid.ambient_dim * cell))
        return DensityGrid(grid, values)
    values = gaussian_mixture(pts, grid, var)
    mass = values.sum() * cell
    if mass <= 0:
        raise ValueError("degenerate density: all mass clipped away")
    return DensityGrid(grid, values / mass)


def sqrt_embed(density: DensityGrid) -> np.ndarray:
    """Flattened entrywise sqrt of (density * step^2): a unit vector."""
    cell = density.grid.step ** 2
    v = density.values * cell
    if np.any(v < 0):
        raise ValueError("negative density value")
    coords = np.sqrt(v).ravel()
    return coords / np.linalg.norm(coords)


def _check_unit(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x)
    if abs(n - 1.0) > _UNIT_ATOL:
        raise ValueError(f"expected a unit vector, |x| = {n}")
    return x


def sphere_distance(x, y) -> float:
    """Geodesic (arc) distance between unit vectors, in [0, pi]."""
    x, y = _check_unit(x), _check_unit(y)
    return float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))


def sphere_exp(base, tangent) -> np.ndarray:
    """Great-circle exponential map. The tangent is taken relative to
    ``base`` (any component along base is projected out first)."""
    base = _check_unit(base)
    t = np.asarray(tangent, dtype=np.float64)
    t = t - np.dot(t, base) * base
    theta = np.linalg.norm(t)
    if theta < 1e-15:
        return base.copy()
    out = np.cos(theta) * base + np.sin(theta) * (t / theta)
    return out / np.linalg.norm(out)


def sphere_log(base, y) -> np.ndarray:
    """Inverse of sphere_exp: tangent vector at base pointing to y, with
    norm equal to the geodesic distance. Undefined at the antipode."""
    base, y = _check_unit(base), _check_unit(y)
    c = float(np.clip(np.dot(base, y), -1.0, 1.0))
    v = y - c * base
    nv = np.linalg.norm(v)
    theta = np.arccos(c)
    if nv < 1e-15:
        if c < 0:
            raise ValueError("log undefined for antipodal points")
        return np.zeros_like(base)
    return v * (theta / nv)


def karcher_mean(points, tol: float = 1e-6, max_iter: int = 100) -> np.ndarray:
    """Fixed point of iterated tangent averaging (Frechet mean).

    Safe here because embedded diagrams live in the nonnegative orthant,
    a convex geodesic ball. Non-convergence logs a warning and returns the
    last iterate.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("need a nonempty (n, d) array of sphere points")
    mean = pts.sum(axis=0)
    norm = np.linalg.norm(mean)
    mean = pts[0].copy() if norm < 1e-15 else mean / norm
    for _ in range(max_iter):
        update = _logs(mean, pts).mean(axis=0)
        step = np.linalg.norm(update)
        mean = sphere_exp(mean, update)
        if step < tol:
            return mean
    log.warning("Karcher mean: no convergence after %d iterations "
                "(last update %.3g)", max_iter, step)
    return mean


def _logs(base, pts: np.ndarray) -> np.ndarray:
    """Row-wise sphere_log, vectorized."""
    c = np.clip(pts @ base, -1.0, 1.0)
    v = pts - c[:, None] * base[None, :]
    nv = np.linalg.norm(v, axis=1)
    theta = np.arccos(c)
    scale = np.where(nv > 1e-15, theta / np.maximum(nv, 1e-300), 0.0)
    return v * scale[:, None]


@dataclass(frozen=True)
class PgaModel:
    """Tangent-space principal directions at the Karcher mean.

    ``basis`` has min(k, tangent rank) orthonormal rows, each orthogonal
    to ``base``; ``variances`` are the matching tangent variances in
    decreasing order. ``grid`` records the embedding the model was fit on.
    """

    base: np.ndarray        # (ambient,)
    basis: np.ndarray       # (k_eff, ambient)
    variances: np.ndarray   # (k_eff,)
    grid: GridSpec | None = None

    @property
    def k(self) -> int:
        return len(self.basis)


def pga_fit(points, k: int, grid: GridSpec | None = None,
            rank_tol: float = 1e-12) -> PgaModel:
    """Tangent PCA at the Karcher mean via the N x N Gram matrix.

    Requires 2 <= N and k <= min(N - 1, ambient dim). Directions with
    tangent variance below ``rank_tol`` (relative to the largest) are
    dropped, so the returned basis may have fewer than k rows for
    degenerate data.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two sphere points")
    n, dim = pts.shape
    if not 1 <= k <= min(n - 1, dim):
        raise ValueError(f"k = {k} outside 1..min(n-1={n - 1}, dim={dim})")
    mean = karcher_mean(pts)
    tang = _logs(mean, pts)
    gram = tang @ tang.T
    eigval, eigvec = np.linalg.eigh(gram)
    order = np.argsort(eigval)[::-1][:k]
    eigval = eigval[order]
    eigvec = eigvec[:, order]
    floor = max(eigval[0], 0.0) * rank_tol if len(eigval) else 0.0
    keep = eigval > max(floor, 1e-300)
    eigval, eigvec = eigval[keep], eigvec[:, keep]
    basis = (tang.T @ eigvec) / np.sqrt(eigval)[None, :]
    # fix signs deterministically: largest-|entry| coordinate positive
    for i in range(basis.shape[1]):
        j = int(np.argmax(np.abs(basis[:, i])))
        if basis[j, i] < 0:
            basis[:, i] = -basis[:, i]
    return PgaModel(mean, np.ascontiguousarray(basis.T),
                    eigval / max(n - 1, 1), grid)


def pga_project(model: PgaModel, point) -> np.ndarray:
    """Coordinates of a sphere point in the model's tangent basis."""
    t = sphere_log(model.base, point)
    return model.basis @ t


def pga_reconstruct(model: PgaModel, coords) -> np.ndarray:
    """Map tangent coordinates back to the sphere."""
    coords = np.asarray(coords, dtype=np.float64)
    return sphere_exp(model.base, coords @ model.basis)


def explained_ratio(model: PgaModel) -> np.ndarray:
    total = model.variances.sum()
    if total <= 0:
        return np.zeros_like(model.variances)
    return model.variances / total


# ---------------------------------------------------------------------------
# Model file: magic + version byte + little-endian header, base, basis
# ---------------------------------------------------------------------------

_PGA_MAGIC = b"TPGA"
_PGA_VERSION = 1


def save_pga(path: str, model: PgaModel) -> None:
    grid = model.grid if model.grid is not None else GridSpec(0.0, 1.0, 1.0)
    with open(path, "wb") as fh:
        fh.write(_PGA_MAGIC)
        fh.write(struct.pack("<B", _PGA_VERSION))
        fh.write(struct.pack("<dddIQ", grid.lo, grid.hi, grid.step,
                             model.k, model.base.shape[0]))
        fh.write(model.base.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(model.basis).astype("<f8").tobytes())
        fh.write(model.variances.astype("<f8").tobytes())


def load_pga(path: str) -> PgaModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _PGA_MAGIC:
            raise ValueError(f"{path}: not a PGA model file")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != _PGA_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        lo, hi, step, k, ambient = struct.unpack("<dddIQ", fh.read(36))
        base = np.frombuffer(fh.read(8 * ambient), dtype="<f8").copy()
        basis = np.frombuffer(fh.read(8 * k * ambient),
                              dtype="<f8").reshape(k, ambient).copy()
        variances = np.frombuffer(fh.read(8 * k), dtype="<f8").copy()
    grid = GridSpec(lo, hi, step)
    return PgaModel(base, basis, variances, grid)
