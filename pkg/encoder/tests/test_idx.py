import gzip
import struct

import numpy as np
import pytest

from mdlood_encoder import read_idx_images, read_idx_labels, write_idx_images


def test_image_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(7, 5, 4)).astype(np.float64) / 255.0
    path = tmp_path / "imgs.idx"
    write_idx_images(path, images)
    back = read_idx_images(path)
    assert back.shape == (7, 5, 4)
    assert np.abs(back - images).max() < 1 / 255.0 + 1e-12


def test_gzip_transparent(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, size=(3, 4, 4)).astype(np.float64) / 255.0
    plain = tmp_path / "imgs.idx"
    write_idx_images(plain, images)
    gz = tmp_path / "imgs.idx.gz"
    gz.write_bytes(gzip.compress(plain.read_bytes()))
    assert np.array_equal(read_idx_images(gz), read_idx_images(plain))


def test_labels(tmp_path):
    path = tmp_path / "labels.idx"
    labels = bytes([3, 1, 4, 1, 5])
    path.write_bytes(struct.pack(">II", 0x00000801, 5) + labels)
    assert read_idx_labels(path).tolist() == [3, 1, 4, 1, 5]


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(struct.pack(">IIII", 0xdeadbeef, 1, 2, 2) + bytes(4))
    with pytest.raises(ValueError, match="magic"):
        read_idx_images(path)


def test_truncated(tmp_path):
    path = tmp_path / "short.idx"
    path.write_bytes(struct.pack(">IIII", 0x00000803, 2, 3, 3) + bytes(5))
    with pytest.raises(ValueError, match="truncated"):
        read_idx_images(path)
