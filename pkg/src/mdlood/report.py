"""Evaluation report emission: summary JSON, delimited scores and ROC
points, and rendered figures next to them.

Given a report path ``out/run.json`` this writes::

    out/run.json         summary (auroc, batch size, trials, shift, seed)
    out/run_scores.csv   per-trial scores, one row per (trial, class)
    out/run_roc.csv      ROC points
    out/run_roc.png      ROC curve
    out/run_scores.png   score histograms per class

Figure bytes are deterministic for fixed inputs: the PNG metadata is pinned
and no wall-clock state enters the render.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .evaluate import RocResult
from .matrixio import _atomic_write_text

_PNG_METADATA = {"Software": "mdlood"}


def _save_figure(fig: Figure, path: Path) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, format="png", metadata=_PNG_METADATA)


def _roc_figure(roc: RocResult) -> Figure:
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot(111)
    ax.plot(roc.points[:, 0], roc.points[:, 1], drawstyle="steps-post")
    ax.plot([0, 1], [0, 1], linestyle="--", linewidth=0.8, color="gray")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"ROC (AUROC = {roc.auroc:.4f})")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    return fig


def _score_figure(scores_in: np.ndarray, scores_out: np.ndarray) -> Figure:
    fig = Figure(figsize=(5.5, 3.5))
    ax = fig.add_subplot(111)
    lo = min(scores_in.min(), scores_out.min())
    hi = max(scores_in.max(), scores_out.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, 31)
    ax.hist(scores_in, bins=edges, alpha=0.6, label="in-distribution")
    ax.hist(scores_out, bins=edges, alpha=0.6, label="out-of-distribution")
    ax.set_xlabel("score (universal bits - trained bits)")
    ax.set_ylabel("batches")
    ax.legend()
    fig.tight_layout()
    return fig


def write_eval_report(report_path, scores_in, scores_out, roc: RocResult,
                      summary: dict, figures: bool = True) -> dict:
    """Write the summary plus its sibling artifacts; returns path map."""
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    stem = report_path.parent / report_path.stem
    paths = {
        "summary": report_path,
        "scores_csv": Path(f"{stem}_scores.csv"),
        "roc_csv": Path(f"{stem}_roc.csv"),
    }
    scores_in = np.asarray(scores_in, dtype=np.float64)
    scores_out = np.asarray(scores_out, dtype=np.float64)

    _atomic_write_text(paths["summary"], json.dumps(summary, indent=2, sort_keys=True) + "\n")

    lines = ["trial,class,score"]
    for k, s in enumerate(scores_in):
        lines.append(f"{k},in,{s:.17g}")
    for k, s in enumerate(scores_out):
        lines.append(f"{k},out,{s:.17g}")
    _atomic_write_text(paths["scores_csv"], "\n".join(lines) + "\n")

    lines = ["fpr,tpr"]
    for fpr, tpr in roc.points:
        lines.append(f"{fpr:.17g},{tpr:.17g}")
    _atomic_write_text(paths["roc_csv"], "\n".join(lines) + "\n")

    if figures:
        paths["roc_png"] = Path(f"{stem}_roc.png")
        paths["scores_png"] = Path(f"{stem}_scores.png")
        _save_figure(_roc_figure(roc), paths["roc_png"])
        _save_figure(_score_figure(scores_in, scores_out), paths["scores_png"])
    return paths
