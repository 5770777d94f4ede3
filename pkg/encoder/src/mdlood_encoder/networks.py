"""Encoder, generator and joint discriminator networks."""

from __future__ import annotations

import torch
from torch import nn

from .config import EncoderConfig


def _hidden_block(d_in: int, d_out: int, cfg: EncoderConfig) -> list:
    # torch's BatchNorm momentum is the update weight, the EMA-retention
    # convention in the config is 1 - that, hence the flip
    return [
        nn.Linear(d_in, d_out),
        nn.LeakyReLU(cfg.leaky_slope),
        nn.BatchNorm1d(d_out, momentum=1.0 - cfg.bn_momentum),
    ]


def _init_weights(module: nn.Module, std: float) -> None:
    for m in module.modules():
        if isinstance(m, nn.Linear):
            nn.init.normal_(m.weight, mean=0.0, std=std)
            nn.init.zeros_(m.bias)


class Encoder(nn.Module):
    """Maps flattened images to latent vectors."""

    def __init__(self, input_dim: int, cfg: EncoderConfig):
        super().__init__()
        self.net = nn.Sequential(
            *_hidden_block(input_dim, cfg.hidden_dim, cfg),
            *_hidden_block(cfg.hidden_dim, cfg.hidden_dim, cfg),
            nn.Linear(cfg.hidden_dim, cfg.latent_dim),
        )
        _init_weights(self, cfg.init_std)

    def forward(self, x):
        return self.net(x)


class Generator(nn.Module):
    """Maps latent vectors back to images; sigmoid keeps outputs in [0, 1]."""

    def __init__(self, input_dim: int, cfg: EncoderConfig):
        super().__init__()
        self.net = nn.Sequential(
            *_hidden_block(cfg.latent_dim, cfg.hidden_dim, cfg),
            *_hidden_block(cfg.hidden_dim, cfg.hidden_dim, cfg),
            nn.Linear(cfg.hidden_dim, input_dim),
            nn.Sigmoid(),
        )
        _init_weights(self, cfg.init_std)

    def forward(self, z):
        return self.net(z)


class Discriminator(nn.Module):
    """Scores joint (image, latent) pairs; trained to separate encoder
    pairs (x, E(x)) from generator pairs (G(z), z)."""

    def __init__(self, input_dim: int, cfg: EncoderConfig):
        super().__init__()
        self.net = nn.Sequential(
            *_hidden_block(input_dim + cfg.latent_dim, cfg.hidden_dim, cfg),
            *_hidden_block(cfg.hidden_dim, cfg.hidden_dim, cfg),
            nn.Linear(cfg.hidden_dim, 1),
            nn.Sigmoid(),
        )
        _init_weights(self, cfg.init_std)

    def forward(self, x, z):
        return self.net(torch.cat([x, z], dim=1)).squeeze(1)
