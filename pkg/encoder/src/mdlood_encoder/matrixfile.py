"""Writer for the matrix-file interchange format consumed by the detector.

Format: header line ``mdlood-matrix v1, rows=M, cols=d`` followed by M
comma-separated rows; floats carry 17 significant digits so every double
round-trips exactly.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

MATRIX_FORMAT = "mdlood-matrix v1"


def write_matrix(path, values) -> None:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"matrix must be 2-d and nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite values")
    rows, cols = arr.shape
    lines = [f"{MATRIX_FORMAT}, rows={rows}, cols={cols}"]
    for row in arr:
        lines.append(",".join(format(v, ".17g") for v in row))
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
