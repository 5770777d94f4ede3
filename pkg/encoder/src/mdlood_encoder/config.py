"""Training configuration with the stock hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class EncoderConfig:
    """Networks and schedule for the bidirectional adversarial encoder.

    Defaults match the reference image setup: latent size 20, two hidden
    layers of 512 units per network, 50k generator iterations at batch 128,
    Adam at 2e-3 decayed by 0.01 halfway, l2 weight penalty 2.5e-4, weights
    initialized N(0, 0.2), batch-norm momentum 0.8 (EMA convention), leaky
    slope 0.2.
    """

    latent_dim: int = 20
    hidden_dim: int = 512
    iterations: int = 50_000
    batch_size: int = 128
    learning_rate: float = 2e-3
    lr_decay_factor: float = 0.01
    lr_decay_at: int = 25_000
    weight_decay: float = 2.5e-4
    init_std: float = 0.2
    bn_momentum: float = 0.8
    leaky_slope: float = 0.2
    # bookkeeping cadence: loss curve entries and crash-recovery snapshots
    log_every: int = 100

    def __post_init__(self):
        if self.latent_dim < 1 or self.hidden_dim < 1:
            raise ValueError("network dimensions must be positive")
        if self.iterations < 1 or self.batch_size < 1:
            raise ValueError("iterations and batch size must be positive")
        if not (0.0 < self.bn_momentum < 1.0):
            raise ValueError("batch-norm momentum must be in (0, 1)")
