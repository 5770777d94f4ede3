"""Training and the codelength hypothesis test.

A batch is declared out-of-distribution when the universal coder beats the
trained coder by more than the margin tau: L2 + tau < L1, i.e. score
L2 - L1 < -tau. Lower scores are more anomalous.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .coder import (
    CodelengthReport,
    TrainedDetector,
    trained_codelength,
    universal_codelength,
)
from .errors import (
    DimensionMismatchError,
    ModelInvalidError,
    TrainingError,
)
from .gaussian import DataBatch, GaussianModel, gaussian_codelength
from .select import DEFAULT_CONFIG, ModelSelectionResult, SelectionConfig, select_model


@dataclass(frozen=True)
class Decision:
    score: float
    tau: float
    is_ood: bool

    @classmethod
    def from_score(cls, score: float, tau: float) -> "Decision":
        return cls(score=score, tau=tau, is_ood=score < -tau)


def train_with_selection(
    latents_train: DataBatch, residuals_train: DataBatch, lambda_grid,
    config: SelectionConfig = DEFAULT_CONFIG,
) -> Tuple[TrainedDetector, ModelSelectionResult]:
    """Freeze training statistics: the selected latent covariance and the
    pooled residual mean/variance.

    The latent covariance is the graph-completed covariance at the selected
    penalty, with zero mean by convention. Also returns the selection detail
    (graph, penalty table) for reporting.
    """
    m = latents_train.dim
    if latents_train.rows < m + 2:
        raise TrainingError(
            f"need at least {m + 2} training latents for dimension {m}, "
            f"got {latents_train.rows}"
        )
    if residuals_train.rows != latents_train.rows:
        raise DimensionMismatchError(
            f"{latents_train.rows} latent rows vs {residuals_train.rows} residual rows"
        )
    if m > residuals_train.dim:
        raise DimensionMismatchError(
            f"latent dim {m} exceeds data dim {residuals_train.dim}"
        )

    sel = select_model(latents_train, lambda_grid, config)
    if sel.completed_covariance is None:
        raise TrainingError("training latents are too degenerate to fit a covariance")
    try:
        latent_model = GaussianModel(np.zeros(m), sel.completed_covariance)
    except ModelInvalidError as exc:
        raise TrainingError(f"training latent covariance is degenerate: {exc}") from exc

    r = residuals_train.values
    mu = float(r.mean())
    var = float(r.var())
    if var <= 0.0:
        raise TrainingError("residuals have zero variance")
    det = TrainedDetector(
        latent_model=latent_model,
        residual_mean=mu,
        residual_var=var,
        data_dim=residuals_train.dim,
        latent_dim=m,
        lambda_star=sel.lambda_star,
    )
    return det, sel


def train(latents_train: DataBatch, residuals_train: DataBatch,
          lambda_grid, config: SelectionConfig = DEFAULT_CONFIG) -> TrainedDetector:
    """As ``train_with_selection``, returning only the frozen detector."""
    return train_with_selection(latents_train, residuals_train, lambda_grid, config)[0]


def _assemble(l1_parts, l2_parts, tau: float) -> Tuple[Decision, CodelengthReport]:
    report = CodelengthReport(
        l1_latent=l1_parts[0],
        l1_residual=l1_parts[1],
        l2_latent_graph=l2_parts[0],
        l2_latent_data=l2_parts[1],
        l2_residual=l2_parts[2],
    )
    return Decision.from_score(report.score, tau), report


def detect(latents: DataBatch, residuals: Optional[DataBatch],
           det: TrainedDetector, tau: float, lambda_grid,
           config: SelectionConfig = DEFAULT_CONFIG) -> Tuple[Decision, CodelengthReport]:
    """Run the two coders on a test batch and compare at margin tau."""
    _, l1_parts = trained_codelength(latents, residuals, det)
    _, l2_parts, _ = universal_codelength(latents, residuals, lambda_grid, config)
    return _assemble(l1_parts, l2_parts, tau)


def detect_known_model(latents: DataBatch, model: GaussianModel, tau: float,
                       lambda_grid,
                       config: SelectionConfig = DEFAULT_CONFIG) -> Tuple[Decision, CodelengthReport]:
    """The known-model variant: no residual channel, L1 is exact coding
    under the given Gaussian."""
    l1_lat = gaussian_codelength(latents, model)
    _, l2_parts, _ = universal_codelength(latents, None, lambda_grid, config)
    return _assemble((l1_lat, 0.0), l2_parts, tau)
