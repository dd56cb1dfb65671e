"""Synthetic ring-vs-blob dataset for end-to-end tests and demos.

Every image shares the same "anatomy": a smooth bright blob in the upper
left plus scattered bright dots. Positives additionally carry a ring of
separated dots in the lower left; the ring is a loop of feature-point-
cloud components, i.e. 1-dimensional signal. Masking the ring region of
a positive therefore leaves exactly a negative-looking image, while an
equal-area box in the quiet upper-right corner overlaps nothing.

Intensities sit inside intensity-cover bands (background near 20, dots
near 204) so each dot is one component rather than band-edge speckle.

Run ``python -m topoct.synthetic OUTDIR [N_PER_CLASS]`` to write a dataset.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np
from PIL import Image

BG_LEVEL = 20.0
DOT_LEVEL = 204.0


@dataclass(frozen=True)
class SyntheticMeta:
    name: str
    label: int                              # 1 = ring (positive), 0 = plain
    region: tuple[int, int, int, int]       # discriminative bbox (r0,c0,r1,c1)
    background: tuple[int, int, int, int]   # equal-area quiet bbox


def _canvas(rng, size: int) -> np.ndarray:
    noise = np.clip(rng.normal(0.0, 1.2, (size, size)), -3.0, 3.0)
    return BG_LEVEL + noise


def _stamp_dot(img: np.ndarray, r: float, c: float, level: float) -> None:
    size = img.shape[0]
    r0, r1 = max(0, int(r) - 1), min(size, int(r) + 2)
    c0, c1 = max(0, int(c) - 1), min(size, int(c) + 2)
    img[r0:r1, c0:c1] = level


def _dot_level(rng) -> float:
    return DOT_LEVEL + float(np.clip(rng.normal(0, 1.5), -2.9, 2.9))


def _add_anatomy(img: np.ndarray, rng, size: int, keep_out) -> None:
    """Shared structure: one smooth blob upper-left, scattered dots.

    Dots avoid the ``keep_out`` box (the ring site, real or phantom), so
    the two classes have identical scatter statistics and the ring loop
    is never short-circuited from inside.
    """
    cr = size * 0.25 + rng.uniform(-2, 2)
    cc = size * 0.25 + rng.uniform(-2, 2)
    sigma = rng.uniform(4.0, 5.5)
    peak = rng.uniform(150, 185)
    ii, jj = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    d2 = (ii - cr) ** 2 + (jj - cc) ** 2
    shape = np.exp(-d2 / (2 * sigma ** 2))
    support = d2 <= (2.2 * sigma) ** 2
    img[:] = np.where(support, BG_LEVEL + peak * shape, img)
    # scattered dots in the left band, clear of the quiet corner
    r0, c0, r1, c1 = keep_out
    placed = 0
    want = int(rng.integers(6, 10))
    while placed < want:
        rr = rng.uniform(2, size - 3)
        cc2 = rng.uniform(2, size * 0.5)
        if r0 - 2 <= rr <= r1 + 2 and c0 - 2 <= cc2 <= c1 + 2:
            continue
        _stamp_dot(img, rr, cc2, _dot_level(rng))
        placed += 1


def _ring_geometry(rng, size: int):
    cr = size * 0.72 + rng.uniform(-2, 2)
    cc = size * 0.30 + rng.uniform(-2, 2)
    radius = rng.uniform(8.5, 10.0)
    return cr, cc, radius


def _region_box(cr, cc, radius, size):
    pad = radius + 4
    return (max(0, int(cr - pad)), max(0, int(cc - pad)),
            min(size, int(cr + pad) + 1), min(size, int(cc + pad) + 1))


def ring_image(rng, size: int = 64):
    """Anatomy plus a ring of separated dots (the positive class)."""
    img = _canvas(rng, size)
    cr, cc, radius = _ring_geometry(rng, size)
    region = _region_box(cr, cc, radius, size)
    _add_anatomy(img, rng, size, region)
    n_dots = int(rng.integers(11, 15))
    phase = rng.uniform(0, 2 * np.pi)
    for t in range(n_dots):
        ang = phase + 2 * np.pi * t / n_dots + rng.normal(0, 0.04)
        rad = radius + rng.normal(0, 0.35)
        _stamp_dot(img, cr + rad * np.sin(ang), cc + rad * np.cos(ang),
                   _dot_level(rng))
    return np.clip(img, 0, 255).astype(np.uint8), region


def blob_image(rng, size: int = 64):
    """Anatomy only (the negative class). The reported region is the box
    a ring would have occupied, so masking experiments stay comparable."""
    img = _canvas(rng, size)
    cr, cc, radius = _ring_geometry(rng, size)
    region = _region_box(cr, cc, radius, size)
    _add_anatomy(img, rng, size, region)
    return np.clip(img, 0, 255).astype(np.uint8), region


def _background_box(region, size: int):
    """Equal-area box in the quiet upper-right corner."""
    r0, c0, r1, c1 = region
    h, w = r1 - r0, c1 - c0
    return (0, size - w, h, size)


def generate_dataset(outdir: str, n_per_class: int = 100, size: int = 64,
                     seed: int = 7, positive_dir: str = "COVID",
                     negative_dir: str = "non-COVID") -> list[SyntheticMeta]:
    """Write PNGs into two class directories plus a metadata JSON."""
    metas = []
    os.makedirs(os.path.join(outdir, positive_dir), exist_ok=True)
    os.makedirs(os.path.join(outdir, negative_dir), exist_ok=True)
    streams = np.random.SeedSequence(seed).spawn(2 * n_per_class)
    for i in range(n_per_class):
        for label, maker, sub in ((1, ring_image, positive_dir),
                                  (0, blob_image, negative_dir)):
            rng = np.random.default_rng(streams[2 * i + label])
            img, region = maker(rng, size)
            name = f"{sub}/img{i:04d}.png"
            Image.fromarray(img).save(os.path.join(outdir, name))
            metas.append(SyntheticMeta(name, label, region,
                                       _background_box(region, size)))
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump([asdict(m) for m in metas], fh, indent=1)
    return metas


def load_meta(outdir: str) -> list[SyntheticMeta]:
    with open(os.path.join(outdir, "meta.json")) as fh:
        raw = json.load(fh)
    return [SyntheticMeta(m["name"], m["label"], tuple(m["region"]),
                          tuple(m["background"])) for m in raw]


if __name__ == "__main__":
    import sys

    out = sys.argv[1] if len(sys.argv) > 1 else "synthetic-dataset"
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    generate_dataset(out, n)
    print(f"wrote {2 * n} images under {out}/")
