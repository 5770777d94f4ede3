"""Reader for the IDX image/label format (optionally gzip-compressed)."""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

_IMAGES_MAGIC = 0x00000803
_LABELS_MAGIC = 0x00000801


def _open(path: Path):
    raw = path.open("rb")
    head = raw.read(2)
    raw.seek(0)
    if head == b"\x1f\x8b":
        return gzip.open(raw)
    return raw


def read_idx_images(path) -> np.ndarray:
    """Images as (N, H, W) float64 scaled to [0, 1]."""
    path = Path(path)
    with _open(path) as fh:
        magic, n, h, w = struct.unpack(">IIII", fh.read(16))
        if magic != _IMAGES_MAGIC:
            raise ValueError(f"{path}: bad image magic 0x{magic:08x}")
        data = fh.read(n * h * w)
    if len(data) != n * h * w:
        raise ValueError(f"{path}: truncated image data")
    return np.frombuffer(data, dtype=np.uint8).reshape(n, h, w) / 255.0


def read_idx_labels(path) -> np.ndarray:
    path = Path(path)
    with _open(path) as fh:
        magic, n = struct.unpack(">II", fh.read(8))
        if magic != _LABELS_MAGIC:
            raise ValueError(f"{path}: bad label magic 0x{magic:08x}")
        data = fh.read(n)
    if len(data) != n:
        raise ValueError(f"{path}: truncated label data")
    return np.frombuffer(data, dtype=np.uint8).copy()


def write_idx_images(path, images: np.ndarray) -> None:
    """Inverse of ``read_idx_images`` (used by tests and fixtures)."""
    x = np.asarray(images)
    if x.ndim != 3:
        raise ValueError(f"images must be (N, H, W), got {x.shape}")
    scaled = np.clip(np.round(x * 255.0), 0, 255).astype(np.uint8)
    n, h, w = scaled.shape
    with Path(path).open("wb") as fh:
        fh.write(struct.pack(">IIII", _IMAGES_MAGIC, n, h, w))
        fh.write(scaled.tobytes())
