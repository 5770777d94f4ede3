"""The two competing codelengths.

L1 prices a test batch under the frozen training statistics: latent vectors
under the trained zero-mean Gaussian, reconstruction residuals under a single
pooled scalar Gaussian applied to every entry. L2 prices the same batch with
coders that know nothing a priori: the latent part pays for a graph plus a
sequential plug-in code, the residual part uses a scalar plug-in code. A
batch that is genuinely new compresses better under L2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, InvalidDataError, ModelInvalidError
from .gaussian import LOG2E, LOG2_TWO_PI, DataBatch, GaussianModel, gaussian_codelength
from .select import DEFAULT_CONFIG, SelectionConfig, select_model

# Fixed for reproducibility; any default works since both sides of a
# comparison use the same one.
DEFAULT_SCALAR_MEAN = 0.0
DEFAULT_SCALAR_VAR = 1.0
SCALAR_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainedDetector:
    """Frozen training-phase statistics.

    ``latent_model`` is the zero-mean Gaussian fitted to training latents;
    the residual channel is one pooled scalar Gaussian over all entries.
    """

    latent_model: GaussianModel
    residual_mean: float
    residual_var: float
    data_dim: int
    latent_dim: int
    lambda_star: float = float("nan")

    def __post_init__(self):
        if self.residual_var <= 0.0:
            raise ModelInvalidError(
                f"residual variance must be positive, got {self.residual_var}"
            )
        if self.latent_model.dim != self.latent_dim:
            raise DimensionMismatchError(
                f"latent model dim {self.latent_model.dim} != {self.latent_dim}"
            )
        if self.latent_dim > self.data_dim:
            raise DimensionMismatchError(
                f"latent dim {self.latent_dim} exceeds data dim {self.data_dim}"
            )


@dataclass(frozen=True)
class CodelengthReport:
    """Both codelengths with their per-part breakdown; score = L2 - L1."""

    l1_latent: float
    l1_residual: float
    l2_latent_graph: float
    l2_latent_data: float
    l2_residual: float

    @property
    def l1_bits(self) -> float:
        return self.l1_latent + self.l1_residual

    @property
    def l2_bits(self) -> float:
        return self.l2_latent_graph + self.l2_latent_data + self.l2_residual

    @property
    def score(self) -> float:
        return self.l2_bits - self.l1_bits

    def decision_at(self, tau: float) -> bool:
        """True when the batch is flagged out-of-distribution at this margin."""
        return self.score < -tau

    def as_dict(self) -> dict:
        return {
            "l1_bits": self.l1_bits,
            "l2_bits": self.l2_bits,
            "score": self.score,
            "l1_latent": self.l1_latent,
            "l1_residual": self.l1_residual,
            "l2_latent_graph": self.l2_latent_graph,
            "l2_latent_data": self.l2_latent_data,
            "l2_residual": self.l2_residual,
        }


def _check_pair(latents: DataBatch, residuals: Optional[DataBatch],
                det: Optional[TrainedDetector]) -> None:
    if det is not None and latents.dim != det.latent_dim:
        raise DimensionMismatchError(
            f"latent dim {latents.dim} != detector latent dim {det.latent_dim}"
        )
    if residuals is not None:
        if residuals.rows != latents.rows:
            raise DimensionMismatchError(
                f"{latents.rows} latent rows vs {residuals.rows} residual rows"
            )
        if det is not None and residuals.dim != det.data_dim:
            raise DimensionMismatchError(
                f"residual dim {residuals.dim} != detector data dim {det.data_dim}"
            )


def scalar_iid_codelength(values: np.ndarray, mean: float, var: float) -> float:
    """Bits for iid scalars under a known N(mean, var)."""
    if var <= 0.0:
        raise ModelInvalidError(f"variance must be positive, got {var}")
    v = np.asarray(values, dtype=np.float64).ravel()
    quad = float(np.sum((v - mean) ** 2)) / var
    return v.size * 0.5 * math.log2(2.0 * math.pi * var) + 0.5 * quad * LOG2E


def trained_codelength(latents: DataBatch, residuals: Optional[DataBatch],
                       det: TrainedDetector):
    """Codelength under the trained coder; returns (bits, (latent, residual))."""
    _check_pair(latents, residuals, det)
    l_lat = gaussian_codelength(latents, det.latent_model)
    if residuals is None:
        l_res = 0.0
    else:
        l_res = scalar_iid_codelength(
            residuals.values, det.residual_mean, det.residual_var
        )
    return l_lat + l_res, (l_lat, l_res)


def scalar_universal_per_value(values, default_mean: float = DEFAULT_SCALAR_MEAN,
                               default_var: float = DEFAULT_SCALAR_VAR) -> np.ndarray:
    """Per-value bits of the scalar plug-in code.

    Value t+1 is coded under N(mean_t, var_t) estimated (maximum likelihood)
    from the first t values; the first two values, and any prefix whose
    variance estimate falls below the floor, use the default model instead.
    """
    if default_var <= 0.0:
        raise ModelInvalidError(f"default variance must be positive, got {default_var}")
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 1:
        raise InvalidDataError("need at least one value")
    if not np.all(np.isfinite(v)):
        raise InvalidDataError("values contain non-finite entries")
    t = np.arange(1, v.size + 1, dtype=np.float64)
    mean_t = np.cumsum(v) / t
    var_t = np.maximum(np.cumsum(v * v) / t - mean_t**2, 0.0)

    bits = np.empty(v.size)
    bits[0] = 0.5 * math.log2(2.0 * math.pi * default_var) \
        + 0.5 * LOG2E * (v[0] - default_mean) ** 2 / default_var
    if v.size == 1:
        return bits
    prev_mean = mean_t[:-1]
    prev_var = var_t[:-1]
    use_default = np.ones(v.size - 1, dtype=bool)
    use_default[1:] = prev_var[1:] < SCALAR_VAR_FLOOR  # t=1 always default
    tail = v[1:]
    bits[1:] = np.where(
        use_default,
        0.5 * math.log2(2.0 * math.pi * default_var)
        + 0.5 * LOG2E * (tail - default_mean) ** 2 / default_var,
        0.5 * np.log2(2.0 * math.pi * np.where(use_default, 1.0, prev_var))
        + 0.5 * LOG2E * (tail - prev_mean) ** 2
        / np.where(use_default, 1.0, prev_var),
    )
    return bits


def scalar_universal_codelength(values, default_mean: float = DEFAULT_SCALAR_MEAN,
                                default_var: float = DEFAULT_SCALAR_VAR) -> float:
    """Total bits of the scalar plug-in code."""
    return float(scalar_universal_per_value(values, default_mean, default_var).sum())


def universal_codelength(latents: DataBatch, residuals: Optional[DataBatch],
                         lambda_grid, config: SelectionConfig = DEFAULT_CONFIG):
    """Codelength under the universal coder.

    Returns (bits, (graph_bits, latent_data_bits, residual_bits), selection).
    """
    _check_pair(latents, residuals, None)
    sel = select_model(latents, lambda_grid, config)
    if residuals is None:
        l_res = 0.0
    else:
        l_res = scalar_universal_codelength(residuals.values.ravel())
    total = sel.graph_bits + sel.data_bits + l_res
    return total, (sel.graph_bits, sel.data_bits, l_res), sel
