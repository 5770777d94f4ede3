"""Adversarial training loop for the encoder/generator pair."""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import EncoderConfig
from .networks import Discriminator, Encoder, Generator

CHECKPOINT_NAME = "encoder.pt"
CURVE_NAME = "training_curve.csv"


class TrainingDiverged(RuntimeError):
    """Loss went non-finite; the last finite checkpoint was saved."""


class TrainedEncoderPair:
    """A trained encoder/generator pair with its config, ready for export."""

    def __init__(self, encoder: Encoder, generator: Generator,
                 cfg: EncoderConfig, input_dim: int, curve: list):
        self.encoder = encoder.eval()
        self.generator = generator.eval()
        self.config = cfg
        self.input_dim = input_dim
        self.curve = curve

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "encoder": self.encoder.state_dict(),
                "generator": self.generator.state_dict(),
                "config": self.config.__dict__,
                "input_dim": self.input_dim,
            },
            out_dir / CHECKPOINT_NAME,
        )
        lines = ["step,d_loss,eg_loss"]
        lines += [f"{s},{d:.6f},{g:.6f}" for s, d, g in self.curve]
        (out_dir / CURVE_NAME).write_text("\n".join(lines) + "\n")
        return out_dir / CHECKPOINT_NAME

    @classmethod
    def load(cls, checkpoint_dir) -> "TrainedEncoderPair":
        payload = torch.load(Path(checkpoint_dir) / CHECKPOINT_NAME,
                             map_location="cpu", weights_only=False)
        cfg = EncoderConfig(**payload["config"])
        input_dim = int(payload["input_dim"])
        encoder = Encoder(input_dim, cfg)
        generator = Generator(input_dim, cfg)
        encoder.load_state_dict(payload["encoder"])
        generator.load_state_dict(payload["generator"])
        return cls(encoder, generator, cfg, input_dim, curve=[])


def _validate_images(images: np.ndarray) -> np.ndarray:
    x = np.asarray(images, dtype=np.float32)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"dataset must be (N, pixels) with N >= 2, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("dataset contains non-finite values")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("dataset must be scaled to [0, 1]")
    return x


def train_encoder(dataset: np.ndarray, cfg: EncoderConfig, seed: int,
                  out_dir=None) -> TrainedEncoderPair:
    """Train on flattened images in [0, 1]; returns the frozen pair.

    The discriminator learns to call encoder pairs (x, E(x)) real and
    generator pairs (G(z), z) fake; encoder and generator train jointly to
    flip those calls. If any loss goes non-finite the last finite snapshot
    is saved (to ``out_dir`` when given) and TrainingDiverged is raised.
    """
    x_all = _validate_images(dataset)
    n, input_dim = x_all.shape
    torch.manual_seed(seed)

    encoder = Encoder(input_dim, cfg)
    generator = Generator(input_dim, cfg)
    discriminator = Discriminator(input_dim, cfg)

    opt_d = torch.optim.Adam(discriminator.parameters(), lr=cfg.learning_rate,
                             betas=(0.5, 0.999), weight_decay=cfg.weight_decay)
    opt_eg = torch.optim.Adam(
        list(encoder.parameters()) + list(generator.parameters()),
        lr=cfg.learning_rate, betas=(0.5, 0.999), weight_decay=cfg.weight_decay)
    sched_d = torch.optim.lr_scheduler.MultiStepLR(
        opt_d, milestones=[cfg.lr_decay_at], gamma=cfg.lr_decay_factor)
    sched_eg = torch.optim.lr_scheduler.MultiStepLR(
        opt_eg, milestones=[cfg.lr_decay_at], gamma=cfg.lr_decay_factor)

    bce = nn.BCELoss()
    data = torch.from_numpy(x_all)
    rng = torch.Generator().manual_seed(seed)
    eps = 1e-6  # keeps BCE finite when the sigmoid saturates

    curve = []
    snapshot = None

    def abort(step, detail):
        if snapshot is not None and out_dir is not None:
            snapshot.save(out_dir)
        raise TrainingDiverged(
            f"{detail} at step {step}; last finite snapshot "
            f"{'saved' if snapshot is not None and out_dir is not None else 'kept in memory'}"
        )

    for step in range(cfg.iterations):
        idx = torch.randint(n, (cfg.batch_size,), generator=rng)
        x = data[idx]
        z = torch.randn(cfg.batch_size, cfg.latent_dim, generator=rng)

        encoder.train()
        generator.train()
        discriminator.train()

        with torch.no_grad():
            ex = encoder(x)
            gz = generator(z)
        d_real = discriminator(x, ex)
        d_fake = discriminator(gz, z)
        if not (torch.isfinite(d_real).all() and torch.isfinite(d_fake).all()):
            abort(step, "non-finite discriminator output")
        d_real = d_real.clamp(eps, 1 - eps)
        d_fake = d_fake.clamp(eps, 1 - eps)
        loss_d = bce(d_real, torch.ones_like(d_real)) \
            + bce(d_fake, torch.zeros_like(d_fake))
        opt_d.zero_grad()
        loss_d.backward()
        opt_d.step()

        ex = encoder(x)
        gz = generator(z)
        d_real = discriminator(x, ex)
        d_fake = discriminator(gz, z)
        if not (torch.isfinite(d_real).all() and torch.isfinite(d_fake).all()):
            abort(step, "non-finite discriminator output")
        d_real = d_real.clamp(eps, 1 - eps)
        d_fake = d_fake.clamp(eps, 1 - eps)
        loss_eg = bce(d_real, torch.zeros_like(d_real)) \
            + bce(d_fake, torch.ones_like(d_fake))
        opt_eg.zero_grad()
        loss_eg.backward()
        opt_eg.step()

        sched_d.step()
        sched_eg.step()

        d_val = float(loss_d.detach())
        eg_val = float(loss_eg.detach())
        if not (np.isfinite(d_val) and np.isfinite(eg_val)):
            abort(step, f"non-finite loss (d={d_val}, eg={eg_val})")
        if step % cfg.log_every == 0 or step == cfg.iterations - 1:
            curve.append((step, d_val, eg_val))
            snapshot = TrainedEncoderPair(
                copy.deepcopy(encoder), copy.deepcopy(generator),
                cfg, input_dim, list(curve))

    result = TrainedEncoderPair(encoder, generator, cfg, input_dim, curve)
    if out_dir is not None:
        result.save(out_dir)
    return result
