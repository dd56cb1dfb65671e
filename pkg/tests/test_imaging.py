import numpy as np
import pytest
from PIL import Image

from topoct.errors import FormatError
from topoct.imaging import (build_fpc, build_fpc_capped,
                            image_to_point_cloud, load_grayscale, make_cover,
                            mask_region, read_fpc, write_fpc)


def test_load_identity_decode(write_png):
    path = write_png(np.array([[0, 255], [128, 64]], dtype=np.uint8))
    img = load_grayscale(path)
    assert img.shape == (2, 2)
    assert img.tolist() == [[0, 255], [128, 64]]


def test_load_rgb_channel_mean_floor(tmp_path):
    rgb = np.zeros((1, 1, 3), dtype=np.uint8)
    rgb[0, 0] = (30, 60, 90)
    path = tmp_path / "rgb.png"
    Image.fromarray(rgb).save(path)
    assert load_grayscale(str(path))[0, 0] == 60
    # floor, not round
    rgb[0, 0] = (1, 1, 3)   # mean 5/3 -> 1
    Image.fromarray(rgb).save(path)
    assert load_grayscale(str(path))[0, 0] == 1


def test_load_empty_file_is_format_error(tmp_path):
    path = tmp_path / "empty.png"
    path.write_bytes(b"")
    with pytest.raises(FormatError):
        load_grayscale(str(path))


def test_load_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        load_grayscale(str(tmp_path / "nope.png"))


def test_load_pgm_ascii_and_binary(tmp_path):
    p2 = tmp_path / "a.pgm"
    p2.write_bytes(b"P2\n# comment\n3 2\n255\n0 1 2 3 4 5\n")
    img = load_grayscale(str(p2))
    assert img.shape == (2, 3) and img.ravel().tolist() == [0, 1, 2, 3, 4, 5]
    p5 = tmp_path / "b.pgm"
    p5.write_bytes(b"P5 3 2 255\n" + bytes(range(6)))
    assert np.array_equal(load_grayscale(str(p5)), img)


def test_load_pgm_rejects_truncated(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5 3 2 255\n\x00\x01")
    with pytest.raises(FormatError):
        load_grayscale(str(bad))


def test_image_to_point_cloud():
    assert image_to_point_cloud(np.array([[7]], np.uint8)).tolist() == [[0, 0, 7]]
    assert image_to_point_cloud(
        np.array([[3, 9]], np.uint8)).tolist() == [[0, 0, 3], [0, 1, 9]]
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    assert len(image_to_point_cloud(img)) == 12


def test_cover_partitions_intensities():
    cover = make_cover(32)
    img = np.arange(256, dtype=np.uint8).reshape(16, 16)
    total = np.zeros(img.shape, dtype=int)
    for mask in cover.masks(img):
        total += mask
    assert np.all(total == 1)


def test_fpc_constant_image():
    img = np.full((5, 7), 100, dtype=np.uint8)
    fpc = build_fpc(img, make_cover(1))
    assert len(fpc) == 1
    assert np.allclose(fpc.vertices[0], [2.0, 3.0, 100.0])
    assert fpc.counts[0] == 35


def test_fpc_two_dots_hand_enumeration():
    img = np.zeros((4, 4), dtype=np.uint8)
    img[0, 0] = 200
    img[3, 3] = 200
    from topoct.imaging import IntensityCover
    cover = IntensityCover(((0.0, 128.0), (128.0, 255.0)))
    fpc = build_fpc(img, cover)
    assert len(fpc) == 3
    rows = sorted(map(tuple, np.round(fpc.vertices, 6).tolist()))
    assert (0.0, 0.0, 200.0) in rows
    assert (3.0, 3.0, 200.0) in rows
    assert (1.5, 1.5, 0.0) in rows
    assert sorted(fpc.counts.tolist()) == [1, 1, 14]


def test_fpc_empty_band_contributes_nothing():
    img = np.zeros((3, 3), dtype=np.uint8)
    fpc = build_fpc(img, make_cover(4))
    assert len(fpc) == 1   # only the [0, 64) band is populated


def test_fpc_pixel_counts_partition_image():
    rng = np.random.default_rng(0)
    for _ in range(5):
        img = rng.integers(0, 256, (9, 11)).astype(np.uint8)
        fpc = build_fpc(img, make_cover(8))
        assert fpc.counts.sum() == 9 * 11


def test_fpc_band_order_only_permutes_vertices():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (8, 8)).astype(np.uint8)
    from topoct.imaging import IntensityCover
    cover = make_cover(4)
    flipped = IntensityCover(tuple(reversed(cover.bands[:-1]))
                             + (cover.bands[-1],))
    a = build_fpc(img, cover)
    b = build_fpc(img, flipped)
    key = lambda f: sorted(map(tuple, np.round(f.vertices, 9).tolist()))
    assert key(a) == key(b)


def test_fpc_translation_moves_centroids():
    img = np.zeros((12, 12), dtype=np.uint8)
    img[2:4, 3:5] = 200
    moved = np.zeros((12, 12), dtype=np.uint8)
    moved[5:7, 6:8] = 200
    cover = make_cover(2)
    a = build_fpc(img, cover)
    b = build_fpc(moved, cover)
    bright_a = a.vertices[a.vertices[:, 2] > 100][0]
    bright_b = b.vertices[b.vertices[:, 2] > 100][0]
    assert np.allclose(bright_b[:2] - bright_a[:2], [3.0, 3.0])
    assert bright_a[2] == bright_b[2]


def test_fpc_cap_halves_bands():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
    full = build_fpc(img, make_cover(32))
    capped, bands = build_fpc_capped(img, 32, max(2, len(full) // 4))
    assert bands < 32
    assert len(capped) <= max(2, len(full) // 4) or bands == 1


def test_mask_region_examples():
    img = np.arange(16, dtype=np.uint8).reshape(4, 4)
    assert np.all(mask_region(img, (0, 0, 4, 4), 0) == 0)
    assert np.array_equal(mask_region(img, (2, 2, 2, 3), 9), img)
    out = mask_region(img, (0, 0, 2, 2), 50)
    assert int(np.sum(out != img)) == 4
    # idempotent
    assert np.array_equal(mask_region(out, (0, 0, 2, 2), 50), out)


def test_mask_region_out_of_bounds():
    img = np.zeros((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError):
        mask_region(img, (0, 0, 5, 2), 0)
    with pytest.raises(ValueError):
        mask_region(img, (-1, 0, 2, 2), 0)


def test_fpc_roundtrip(tmp_path):
    img = np.random.default_rng(3).integers(0, 256, (6, 6)).astype(np.uint8)
    fpc = build_fpc(img, make_cover(4))
    path = tmp_path / "fpc.txt"
    write_fpc(str(path), fpc)
    back = read_fpc(str(path))
    assert np.allclose(back.vertices, fpc.vertices)
    assert np.array_equal(back.counts, fpc.counts)
