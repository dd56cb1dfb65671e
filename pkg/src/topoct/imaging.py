"""Grayscale image loading, intensity covers, and feature point clouds.

Images are plain 2-D uint8 numpy arrays (row-major, values 0..255). The
feature point cloud (FPC) summarizes an image by the centroids of the
8-connected components of each intensity band's preimage: one vertex per
component, located at the mean of its (row, col, intensity) triples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import FormatError

EIGHT_CONN = np.ones((3, 3), dtype=bool)


def _require_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise FormatError(f"expected a nonempty 2-D image, got shape {img.shape}")
    if img.dtype != np.uint8:
        if np.any((img < 0) | (img > 255)):
            raise FormatError("intensities outside [0, 255]")
        img = img.astype(np.uint8)
    return img


def _read_pgm(path: str) -> np.ndarray:
    """Minimal PGM (P2 ascii / P5 binary) reader."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a P2/P5 PGM file")
    binary = data[:2] == b"P5"

    # header tokens: magic, width, height, maxval; '#' starts a comment
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3 and pos < len(data):
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 3:
        raise FormatError(f"{path}: truncated PGM header")
    width, height, maxval = (int(t) for t in tokens)
    if width < 1 or height < 1:
        raise FormatError(f"{path}: zero-dimension image")
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    if binary:
        pos += 1  # single whitespace after maxval
        if len(data) - pos < width * height:
            raise FormatError(f"{path}: truncated PGM raster")
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height,
                               offset=pos)
    else:
        raster = np.array(data[pos:].split(), dtype=np.int64)
        if raster.size != width * height:
            raise FormatError(f"{path}: PGM raster size mismatch")
        raster = raster.astype(np.uint8)
    if raster.size != width * height:
        raise FormatError(f"{path}: PGM raster size mismatch")
    return raster.reshape(height, width).copy()


def load_grayscale(path: str) -> np.ndarray:
    """Load an image file as a 2-D uint8 array.

    PNG/JPEG/BMP via Pillow, PGM (P2/P5) via the built-in reader. Color
    inputs are converted deterministically by the floor of the channel
    mean. Unreadable files raise OSError; files that do not decode as a
    nonempty 8-bit image raise FormatError.
    """
    if str(path).lower().endswith(".pgm"):
        return _read_pgm(str(path))
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "P":
                im = im.convert("RGB")
            arr = np.asarray(im)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if arr.ndim == 3:
        arr = (arr[:, :, :3].astype(np.uint32).sum(axis=2) // 3).astype(np.uint8)
    elif arr.ndim != 2:
        raise FormatError(f"{path}: unsupported image layout {arr.shape}")
    if arr.dtype != np.uint8:
        raise FormatError(f"{path}: only 8-bit images supported ({arr.dtype})")
    return _require_image(arr)


@dataclass(frozen=True)
class IntensityCover:
    """Ordered intensity bands covering [0, 255].

    Each band is [lo, hi) except the last, which is closed so 255 belongs
    to it. Bands may overlap when built with ``overlap > 0``.
    """

    bands: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.bands:
            raise ValueError("cover needs at least one band")
        for lo, hi in self.bands:
            if not lo < hi:
                raise ValueError(f"empty band [{lo}, {hi})")

    def __len__(self) -> int:
        return len(self.bands)

    def masks(self, img: np.ndarray):
        """Yield the boolean preimage of every band."""
        last = len(self.bands) - 1
        for b, (lo, hi) in enumerate(self.bands):
            if b == last:
                yield (img >= lo) & (img <= hi)
            else:
                yield (img >= lo) & (img < hi)


def make_cover(n_bands: int = 32, overlap: float = 0.0) -> IntensityCover:
    """Equal-width cover of [0, 255] with optional symmetric overlap."""
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    edges = np.linspace(0.0, 256.0, n_bands + 1)
    bands = []
    for b in range(n_bands):
        lo = max(0.0, edges[b] - overlap)
        hi = min(256.0, edges[b + 1] + overlap)
        if b == n_bands - 1:
            hi = 255.0
        bands.append((lo, hi))
    return IntensityCover(tuple(bands))


@dataclass(frozen=True)
class FeaturePointCloud:
    """Centroid vertices of band-component preimages.

    ``vertices`` is (n, 3) float64 with rows (row, col, intensity);
    ``counts`` the member-pixel count of each component.
    """

    vertices: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)


def image_to_point_cloud(img: np.ndarray) -> np.ndarray:
    """All (i, j, p) triples of an image, one row per pixel, row-major."""
    img = _require_image(img)
    h, w = img.shape
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel(),
                            img.ravel().astype(np.int64)]).astype(np.float64)


def build_fpc(img: np.ndarray, cover: IntensityCover) -> FeaturePointCloud:
    """Feature point cloud: one vertex per 8-connected band component.

    A band whose preimage is empty contributes nothing. Vertex order is
    (band index, component label), which is deterministic.
    """
    img = _require_image(img)
    h, w = img.shape
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    cols = np.tile(np.arange(w, dtype=np.float64), h)
    flat = img.ravel().astype(np.float64)
    verts = []
    counts = []
    for mask in cover.masks(img):
        labels, n = ndimage.label(mask, structure=EIGHT_CONN)
        if n == 0:
            continue
        lab = labels.ravel()
        sel = lab > 0
        cnt = np.bincount(lab[sel], minlength=n + 1)[1:]
        r = np.bincount(lab[sel], weights=rows[sel], minlength=n + 1)[1:]
        c = np.bincount(lab[sel], weights=cols[sel], minlength=n + 1)[1:]
        p = np.bincount(lab[sel], weights=flat[sel], minlength=n + 1)[1:]
        verts.append(np.column_stack([r / cnt, c / cnt, p / cnt]))
        counts.append(cnt)
    if verts:
        return FeaturePointCloud(np.vstack(verts),
                                 np.concatenate(counts).astype(np.int64))
    return FeaturePointCloud(np.empty((0, 3)), np.empty(0, dtype=np.int64))


def build_fpc_capped(img: np.ndarray, n_bands: int, cap: int,
                     overlap: float = 0.0) -> tuple[FeaturePointCloud, int]:
    """Build an FPC, halving the band count until the vertex cap is met.

    Bounds the VR complex size (dimension-3 expansion is O(n^4)). Returns
    the cloud and the band count actually used.
    """
    bands = n_bands
    while True:
        fpc = build_fpc(img, make_cover(bands, overlap))
        if len(fpc) <= cap or bands == 1:
            return fpc, bands
        bands = max(1, bands // 2)


def mask_region(img: np.ndarray, rect: tuple[int, int, int, int],
                fill: int) -> np.ndarray:
    """Copy of ``img`` with the half-open rectangle [r0,r1) x [c0,c1) filled.

    Zero-area rectangles (r0 == r1 or c0 == c1) return an unchanged copy.
    """
    img = _require_image(img)
    r0, c0, r1, c1 = rect
    h, w = img.shape
    if not (0 <= r0 <= r1 <= h and 0 <= c0 <= c1 <= w):
        raise ValueError(f"rectangle {rect} outside {h}x{w} image")
    if not 0 <= fill <= 255:
        raise ValueError(f"fill {fill} outside [0, 255]")
    out = img.copy()
    out[r0:r1, c0:c1] = fill
    return out


def write_fpc(path: str, fpc: FeaturePointCloud) -> None:
    """Flat text export: one '(row col intensity pixel_count)' record per vertex."""
    data = np.column_stack([fpc.vertices, fpc.counts.astype(np.float64)])
    np.savetxt(path, data, header="row col intensity pixel_count")


def read_fpc(path: str) -> FeaturePointCloud:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return FeaturePointCloud(np.empty((0, 3)), np.empty(0, dtype=np.int64))
    return FeaturePointCloud(data[:, :3].copy(),
                             data[:, 3].astype(np.int64))
