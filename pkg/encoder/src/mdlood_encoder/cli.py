"""Command line: train the encoder, export latent/residual matrix files.

The exported files feed the `mdlood` detector CLI, which owns training of
the detection statistics and all scoring.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import EncoderConfig
from .export import export
from .idx import read_idx_images
from .perturb import perturb
from .train import TrainedEncoderPair, TrainingDiverged, train_encoder


def _load_images(path) -> np.ndarray:
    """(N, H, W) images in [0, 1] from IDX (.idx/.gz) or .npy files."""
    path = Path(path)
    if path.suffix == ".npy":
        x = np.load(path)
        if x.ndim == 2:
            side = int(round(x.shape[1] ** 0.5))
            if side * side != x.shape[1]:
                raise ValueError(f"{path}: flat rows of {x.shape[1]} pixels are not square")
            x = x.reshape(x.shape[0], side, side)
        return np.asarray(x, dtype=np.float64)
    return read_idx_images(path)


def _cmd_train(args) -> int:
    images = _load_images(args.images)
    flat = images.reshape(images.shape[0], -1)
    cfg = EncoderConfig(
        latent_dim=args.latent_dim,
        hidden_dim=args.hidden_dim,
        iterations=args.iterations,
        batch_size=args.batch_size,
    )
    try:
        model = train_encoder(flat, cfg, seed=args.seed, out_dir=args.out_dir)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    last = model.curve[-1]
    print(f"trained {cfg.iterations} iterations on {flat.shape[0]} images "
          f"({flat.shape[1]} pixels, latent {cfg.latent_dim})")
    print(f"final losses: d={last[1]:.4f} eg={last[2]:.4f}")
    print(f"checkpoint written to {Path(args.out_dir) / 'encoder.pt'}")
    return 0


def _cmd_export(args) -> int:
    model = TrainedEncoderPair.load(args.checkpoint)
    images = _load_images(args.images)
    if args.perturb_case is not None:
        images = perturb(images, args.perturb_case, seed=args.seed)
    flat = images.reshape(images.shape[0], -1)
    export(model, flat, args.latents, args.residuals)
    print(f"wrote {flat.shape[0]} rows: latents {args.latents}, residuals {args.residuals}")
    return 0


def _cmd_perturb(args) -> int:
    images = _load_images(args.images)
    out = perturb(images, args.case, seed=args.seed)
    np.save(args.out, out)
    print(f"wrote perturbed images ({out.shape[0]}) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdlood-encode",
        description="Train an adversarial encoder and export latent/residual matrix files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train encoder+generator on images")
    p.add_argument("--images", required=True, help="IDX or .npy image file, values in [0,1]")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--latent-dim", type=int, default=20)
    p.add_argument("--hidden-dim", type=int, default=512)
    p.add_argument("--iterations", type=int, default=50_000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("export", help="write latent/residual matrix files")
    p.add_argument("--checkpoint", required=True, help="directory holding encoder.pt")
    p.add_argument("--images", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--residuals", required=True)
    p.add_argument("--perturb-case", type=int, choices=range(1, 11))
    p.add_argument("--seed", type=int, default=0, help="perturbation randomness")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("perturb", help="apply a numbered perturbation, save as .npy")
    p.add_argument("--images", required=True)
    p.add_argument("--case", type=int, required=True, choices=range(1, 11))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_perturb)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
