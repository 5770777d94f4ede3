"""Command-line surface: train, detect, eval, synth.

Exit codes: 0 success, 2 parse/spec error, 3 degenerate statistics,
4 dimension mismatch, 5 insufficient rows.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .detector import detect, train_with_selection
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    InsufficientRowsError,
    InvalidDataError,
    MatrixFormatError,
    ModelInvalidError,
    SelectionError,
    TrainingError,
)
from .evaluate import array_source, make_sparse_ggm, roc_auroc, run_trials, TrialConfig
from .gaussian import DataBatch, GaussianModel, sample_gaussian
from .matrixio import load_detector, read_matrix, save_detector, write_matrix
from .report import write_eval_report
from .select import log_lambda_grid

EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_DIMENSION = 4
EXIT_ROWS = 5


def _parse_lambda_grid(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(
            f"lambda grid must be 'lo,hi,count' (log-spaced), got {text!r}"
        )
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    return log_lambda_grid(lo, hi, count)


def _parse_model_spec(text: str, seed: int) -> GaussianModel:
    """Sampling model specs: 'ggm:dim=D,density=P,strength=S[,seed=G]' draws
    a sparse graphical model (graph structure seeded by the seed= field,
    default the sampling seed, so distinct --seed values can resample one
    model); 'precision:PATH' inverts an explicit precision matrix."""
    kind, _, rest = text.partition(":")
    if kind == "ggm":
        fields = {}
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not value:
                raise ValueError(f"bad ggm spec item {item!r}")
            fields[key.strip()] = value.strip()
        try:
            dim = int(fields.pop("dim"))
            density = float(fields.pop("density"))
            strength = float(fields.pop("strength"))
        except KeyError as exc:
            raise ValueError(f"ggm spec is missing {exc}") from exc
        structure_seed = int(fields.pop("seed", seed))
        if fields:
            raise ValueError(f"unknown ggm spec fields {sorted(fields)}")
        model, _ = make_sparse_ggm(dim, density, strength, structure_seed)
        return model
    if kind == "precision":
        if not rest:
            raise ValueError("precision spec needs a file path")
        omega = read_matrix(rest)
        cov = np.linalg.inv(omega)
        return GaussianModel(np.zeros(omega.shape[0]), (cov + cov.T) / 2.0)
    raise ValueError(f"unknown model spec kind {kind!r} (expected ggm: or precision:)")


def _cmd_train(args) -> int:
    latents = DataBatch(read_matrix(args.latents))
    residuals = DataBatch(read_matrix(args.residuals))
    grid = _parse_lambda_grid(args.lambda_grid)
    det, sel = train_with_selection(latents, residuals, grid)
    save_detector(args.out, det)
    print(f"lambda_star: {det.lambda_star:.17g}")
    print(f"edges: {sel.graph.edge_count}")
    print(f"residual_mean: {det.residual_mean:.17g}")
    print(f"residual_var: {det.residual_var:.17g}")
    print(f"detector written to {args.out}")
    return 0


def _cmd_detect(args) -> int:
    det = load_detector(args.detector)
    latents = DataBatch(read_matrix(args.latents))
    residuals = DataBatch(read_matrix(args.residuals))
    grid = _parse_lambda_grid(args.lambda_grid)
    decision, report = detect(latents, residuals, det, args.tau, grid)
    if args.json:
        payload = report.as_dict()
        payload.update({
            "tau": args.tau,
            "is_ood": decision.is_ood,
            "ood_score": -report.score,
        })
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"L1 (trained coder):    {report.l1_bits:.6f} bits")
        print(f"L2 (universal coder):  {report.l2_bits:.6f} bits")
        print(f"  L1 latent/residual:  {report.l1_latent:.6f} / {report.l1_residual:.6f}")
        print(f"  L2 graph/data/resid: {report.l2_latent_graph:.6f} / "
              f"{report.l2_latent_data:.6f} / {report.l2_residual:.6f}")
        print(f"score (L2 - L1):       {report.score:.6f}")
        print(f"decision at tau={args.tau:g}: "
              f"{'OUT-OF-DISTRIBUTION' if decision.is_ood else 'in-distribution'}")
    return 0


def _cmd_eval(args) -> int:
    det = load_detector(args.detector)
    in_lat = read_matrix(args.in_latents)
    in_res = read_matrix(args.in_residuals)
    out_lat = read_matrix(args.out_latents)
    out_res = read_matrix(args.out_residuals)
    grid = _parse_lambda_grid(args.lambda_grid)
    cfg = TrialConfig(batch_size=args.batch_size, trials=args.trials, seed=args.seed)
    scores_in, scores_out = run_trials(
        det,
        array_source(in_lat, in_res, cfg.batch_size),
        array_source(out_lat, out_res, cfg.batch_size),
        cfg,
        grid,
    )
    roc = roc_auroc(scores_in, scores_out)
    summary = {
        "auroc": roc.auroc,
        "M": cfg.batch_size,
        "trials": cfg.trials,
        "shift_spec": None,
        "seed": cfg.seed,
    }
    paths = write_eval_report(args.report, scores_in, scores_out, roc, summary,
                              figures=not args.no_figures)
    print(f"auroc: {roc.auroc:.17g}")
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def _cmd_synth(args) -> int:
    if args.rows < 1:
        raise ValueError(f"rows must be >= 1, got {args.rows}")
    model = _parse_model_spec(args.model, args.seed)
    batch = sample_gaussian(model, args.rows, args.seed)
    write_matrix(args.out, batch.values)
    print(f"wrote {args.rows} x {model.dim} matrix to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdlood",
        description="Group out-of-distribution detection by codelength comparison.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit detector statistics from training files")
    p.add_argument("--latents", required=True)
    p.add_argument("--residuals", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-grid", default="0.1,1,20",
                   help="penalty grid as lo,hi,count (log-spaced)")
    p.add_argument("--seed", type=int, default=0, help="reserved; training is deterministic")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="score one test batch against a detector")
    p.add_argument("--detector", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--residuals", required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--lambda-grid", default="0.1,1,20")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", help="batched trials with ROC/AUROC report")
    p.add_argument("--detector", required=True)
    p.add_argument("--in-latents", required=True)
    p.add_argument("--in-residuals", required=True)
    p.add_argument("--out-latents", required=True)
    p.add_argument("--out-residuals", required=True)
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", required=True, help="summary JSON path; CSVs and figures go next to it")
    p.add_argument("--lambda-grid", default="0.1,1,20")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="sample synthetic data into a matrix file")
    p.add_argument("--model", required=True,
                   help="'ggm:dim=D,density=P,strength=S' or 'precision:FILE'")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MatrixFormatError, InvalidDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (TrainingError, ModelInvalidError, SelectionError, ConvergenceError) as exc:
        print(f"error: degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DimensionMismatchError as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except InsufficientRowsError as exc:
        print(f"error: insufficient rows: {exc}", file=sys.stderr)
        return EXIT_ROWS


if __name__ == "__main__":
    sys.exit(main())
