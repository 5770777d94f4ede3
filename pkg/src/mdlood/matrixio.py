"""Delimited text formats: matrix files and serialized detectors.

Both formats are decimal text for auditability. Floats are written with 17
significant digits, which round-trips every finite double exactly, and files
are written atomically (temp file, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .coder import TrainedDetector
from .errors import MatrixFormatError
from .gaussian import GaussianModel

MATRIX_FORMAT = "mdlood-matrix v1"
DETECTOR_FORMAT_VERSION = 1


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, values) -> None:
    """Write a 2-d array as a headered, comma-separated decimal file."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MatrixFormatError(f"matrix must be 2-d and nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MatrixFormatError("matrix contains non-finite values")
    rows, cols = arr.shape
    lines = [f"{MATRIX_FORMAT}, rows={rows}, cols={cols}"]
    for row in arr:
        lines.append(",".join(format(v, ".17g") for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    """Parse a matrix file, validating the header against the body."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixFormatError(f"{path}: cannot read: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    header = lines[0].strip()
    prefix = MATRIX_FORMAT + ", rows="
    if not header.startswith(prefix):
        raise MatrixFormatError(f"{path}: bad header {header!r}")
    try:
        rows_part, cols_part = header[len(prefix):].split(", cols=")
        rows, cols = int(rows_part), int(cols_part)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: bad header {header!r}") from exc
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows:
        raise MatrixFormatError(
            f"{path}: header declares {rows} rows, body has {len(body)}"
        )
    out = np.empty((rows, cols))
    for r, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != cols:
            raise MatrixFormatError(
                f"{path}: row {r + 1} has {len(cells)} cells, expected {cols}"
            )
        try:
            out[r] = [float(c) for c in cells]
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: row {r + 1}: {exc}") from exc
        if not np.all(np.isfinite(out[r])):
            raise MatrixFormatError(f"{path}: row {r + 1} contains a non-finite value")
    return out


def save_detector(path, det: TrainedDetector) -> None:
    """Serialize frozen training statistics as JSON."""
    payload = {
        "format_version": DETECTOR_FORMAT_VERSION,
        "latent_dim": det.latent_dim,
        "data_dim": det.data_dim,
        "residual_mean": det.residual_mean,
        "residual_var": det.residual_var,
        "lambda_star": det.lambda_star,
        "latent_covariance": [float(v) for v in det.latent_model.covariance.ravel()],
    }
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_detector(path) -> TrainedDetector:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MatrixFormatError(f"{path}: cannot parse detector file: {exc}") from exc
    try:
        version = payload["format_version"]
        if version != DETECTOR_FORMAT_VERSION:
            raise MatrixFormatError(
                f"{path}: unsupported format_version {version}"
            )
        m = int(payload["latent_dim"])
        n = int(payload["data_dim"])
        cov = np.array(payload["latent_covariance"], dtype=np.float64)
        if cov.size != m * m:
            raise MatrixFormatError(
                f"{path}: covariance has {cov.size} entries, expected {m * m}"
            )
        return TrainedDetector(
            latent_model=GaussianModel(np.zeros(m), cov.reshape(m, m)),
            residual_mean=float(payload["residual_mean"]),
            residual_var=float(payload["residual_var"]),
            data_dim=n,
            latent_dim=m,
            lambda_star=float(payload["lambda_star"]),
        )
    except KeyError as exc:
        raise MatrixFormatError(f"{path}: missing field {exc}") from exc
