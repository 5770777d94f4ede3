"""Latent and residual export."""

from __future__ import annotations

import numpy as np
import torch

from .matrixfile import write_matrix
from .train import TrainedEncoderPair


def encode_batches(model: TrainedEncoderPair, images: np.ndarray,
                   chunk: int = 2048):
    """Latents z = E(x) and residuals x - G(E(x)) for flattened images.

    Runs in eval mode (frozen batch-norm statistics), so the mapping is a
    pure function of the checkpoint and the pixels.
    """
    x = np.asarray(images, dtype=np.float32)
    if x.ndim != 2:
        raise ValueError(f"images must be (N, pixels), got {x.shape}")
    if x.shape[1] != model.input_dim:
        raise ValueError(
            f"images have {x.shape[1]} pixels, checkpoint expects {model.input_dim}"
        )
    model.encoder.eval()
    model.generator.eval()
    latents = []
    residuals = []
    with torch.no_grad():
        for start in range(0, x.shape[0], chunk):
            part = torch.from_numpy(x[start:start + chunk])
            z = model.encoder(part)
            recon = model.generator(z)
            latents.append(z.numpy())
            residuals.append((part - recon).numpy())
    return np.vstack(latents).astype(np.float64), \
        np.vstack(residuals).astype(np.float64)


def export(model: TrainedEncoderPair, images: np.ndarray,
           latents_path, residuals_path) -> None:
    """Write latent and residual matrix files for a set of images."""
    latents, residuals = encode_batches(model, images)
    write_matrix(latents_path, latents)
    write_matrix(residuals_path, residuals)
