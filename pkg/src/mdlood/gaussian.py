"""Core Gaussian machinery: data batches, validated models, empirical
covariance, exact codelengths, and seeded sampling.

Codelength convention
---------------------
All codelengths in this package are *differential* bits: the negative base-2
log of a density, with the quantization constants that a fixed-point coder
would add dropped everywhere. Those constants are identical for every coder
applied to the same data, so they cancel whenever two codelengths are
compared, which is the only use this package makes of them. Individual terms
may therefore be negative for sharply peaked densities.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatchError, InvalidDataError, ModelInvalidError

LOG2E = math.log2(math.e)
LOG2_TWO_PI = math.log2(2.0 * math.pi)

# Relative eigenvalue threshold below which a covariance is rejected as
# singular rather than jittered, so failures stay visible.
PD_EIG_RTOL = 1e-10
SYMMETRY_RTOL = 1e-10


class DataBatch:
    """An M x d matrix of samples, one row per sample.

    Values are validated (finite, nonempty) and frozen at construction;
    instances are safe to share across threads.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidDataError(
                f"batch must be a nonempty 2-d matrix, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise InvalidDataError(
                f"non-finite value at row {bad[0]}, column {bad[1]}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DataBatch is immutable")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __repr__(self):
        return f"DataBatch(rows={self.rows}, dim={self.dim})"


def concat_batches(a: DataBatch, b: DataBatch) -> DataBatch:
    """Stack two batches of equal dimension."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cannot concat dims {a.dim} and {b.dim}")
    return DataBatch(np.vstack([a.values, b.values]))


def _check_symmetric(matrix: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.abs(matrix).max()))
    if float(np.abs(matrix - matrix.T).max()) > SYMMETRY_RTOL * scale:
        raise ModelInvalidError(f"{name} is not symmetric")


class GaussianModel:
    """A multivariate Gaussian with validated covariance/precision pair.

    The covariance must be symmetric and strictly positive-definite
    (smallest eigenvalue above ``PD_EIG_RTOL`` times the largest); the
    precision is the cached inverse. Near-singular matrices are rejected,
    not repaired.
    """

    __slots__ = ("mean", "covariance", "precision", "chol", "log2_det_cov")

    def __init__(self, mean, covariance, precision=None):
        mean = np.ascontiguousarray(mean, dtype=np.float64).reshape(-1)
        cov = np.ascontiguousarray(covariance, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ModelInvalidError(f"covariance must be square, got {cov.shape}")
        d = cov.shape[0]
        if mean.shape[0] != d:
            raise DimensionMismatchError(
                f"mean has length {mean.shape[0]}, covariance is {d}x{d}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ModelInvalidError("mean/covariance contain non-finite values")
        _check_symmetric(cov, "covariance")

        eigvals = np.linalg.eigvalsh(cov)
        if eigvals[0] <= PD_EIG_RTOL * max(eigvals[-1], 0.0):
            raise ModelInvalidError(
                f"covariance is not positive-definite "
                f"(min eigenvalue {eigvals[0]:.3e}, max {eigvals[-1]:.3e})"
            )
        chol = np.linalg.cholesky(cov)
        if precision is None:
            precision = np.linalg.inv(cov)
            precision = (precision + precision.T) / 2.0
        else:
            precision = np.ascontiguousarray(precision, dtype=np.float64)
            _check_symmetric(precision, "precision")
        if float(np.abs(precision @ cov - np.eye(d)).max()) > 1e-8:
            raise ModelInvalidError(
                "precision is not the inverse of the covariance"
            )

        mean.flags.writeable = False
        cov.flags.writeable = False
        precision.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "precision", precision)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(
            self, "log2_det_cov", 2.0 * float(np.sum(np.log2(np.diag(chol))))
        )

    def __setattr__(self, name, value):
        raise AttributeError("GaussianModel is immutable")

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    @classmethod
    def standard(cls, dim: int) -> "GaussianModel":
        """The N(0, I) model of the given dimension."""
        return cls(np.zeros(dim), np.eye(dim), np.eye(dim))

    def __repr__(self):
        return f"GaussianModel(dim={self.dim})"


def empirical_covariance(batch: DataBatch, assume_zero_mean: bool = False) -> np.ndarray:
    """Maximum-likelihood covariance of a batch (divisor M, not M-1).

    With ``assume_zero_mean`` the mean is taken as zero and a single sample
    suffices; otherwise the sample mean is subtracted and M >= 2 is required.
    """
    x = batch.values
    m = batch.rows
    if assume_zero_mean:
        centered = x
    else:
        if m < 2:
            raise InvalidDataError("need at least 2 samples to estimate a mean")
        centered = x - x.mean(axis=0)
    s = centered.T @ centered / m
    return (s + s.T) / 2.0


def gaussian_codelength(batch: DataBatch, model: GaussianModel) -> float:
    """Differential codelength of a batch under a known Gaussian, in bits.

    Returns -sum_i log2 phi(x_i; mean, cov). Additive over batch
    concatenation; individual contributions may be negative.
    """
    if batch.dim != model.dim:
        raise DimensionMismatchError(
            f"batch dim {batch.dim} != model dim {model.dim}"
        )
    centered = batch.values - model.mean
    quad = float(np.einsum("ij,jk,ik->", centered, model.precision, centered))
    m, d = batch.rows, batch.dim
    return m * (0.5 * d * LOG2_TWO_PI + 0.5 * model.log2_det_cov) + 0.5 * quad * LOG2E


def gaussian_codelength_per_sample(batch: DataBatch, model: GaussianModel) -> np.ndarray:
    """Per-row codelengths whose sum equals ``gaussian_codelength``."""
    if batch.dim != model.dim:
        raise DimensionMismatchError(
            f"batch dim {batch.dim} != model dim {model.dim}"
        )
    centered = batch.values - model.mean
    quad = np.einsum("ij,jk,ik->i", centered, model.precision, centered)
    d = batch.dim
    return 0.5 * d * LOG2_TWO_PI + 0.5 * model.log2_det_cov + 0.5 * quad * LOG2E


def sample_gaussian(model: GaussianModel, m: int, seed: int) -> DataBatch:
    """Draw M rows from the model, deterministically for a given seed.

    Sampling goes through the Cholesky factor of the covariance, so equal
    seeds give bit-identical batches.
    """
    if m < 1:
        raise InvalidDataError(f"sample count must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((m, model.dim))
    return DataBatch(z @ model.chol.T + model.mean)
