"""Two-part model selection over a penalty grid.

For each candidate penalty the batch covariance is sparsified by
``graphical_lasso``, the resulting graph is priced by ``graph_codelength``,
and the data are priced by a sequential plug-in code: each sample is coded
under the zero-mean Gaussian whose covariance is the graph-constrained
completion of the covariance of the samples before it. The winning penalty
minimizes graph bits plus data bits, with ties broken toward the sparser
(larger-penalty) model.

The selection works on zero-mean statistics throughout: latent vectors are
standardized upstream, and no mean is ever estimated here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ConvergenceError, InvalidDataError, ModelInvalidError, SelectionError
from .gaussian import PD_EIG_RTOL, DataBatch, GaussianModel, empirical_covariance
from .glasso import graphical_lasso
from .graphs import CIGraph, graph_codelength, graph_from_precision


@dataclass(frozen=True)
class SelectionConfig:
    """Tolerances and conventions shared by selection and coding."""

    glasso_tol: float = 1e-6
    glasso_max_iter: int = 200
    ipf_tol: float = 1e-7
    ipf_max_iter: int = 500
    edge_threshold: float = 1e-8
    # None means d + 1: the smallest prefix whose zero-mean covariance can
    # be positive-definite.
    warmup: Optional[int] = None

    def warmup_for(self, dim: int) -> int:
        w = self.warmup if self.warmup is not None else dim + 1
        if w < 1:
            raise ValueError(f"warmup must be >= 1, got {w}")
        return w


DEFAULT_CONFIG = SelectionConfig()


@dataclass(frozen=True)
class ModelSelectionResult:
    lambda_star: float
    graph: CIGraph
    completed_covariance: Optional[np.ndarray]
    graph_bits: float
    data_bits: float
    per_lambda_table: list = field(default_factory=list)

    @property
    def total_bits(self) -> float:
        return self.graph_bits + self.data_bits


def _validate_spd(S: np.ndarray, what: str) -> np.ndarray:
    S = np.ascontiguousarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ModelInvalidError(f"{what} must be square, got {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ModelInvalidError(f"{what} contains non-finite values")
    scale = max(1.0, float(np.abs(S).max()))
    if float(np.abs(S - S.T).max()) > 1e-10 * scale:
        raise ModelInvalidError(f"{what} is not symmetric")
    eigs = np.linalg.eigvalsh(S)
    if eigs[0] <= PD_EIG_RTOL * max(eigs[-1], 0.0):
        raise ModelInvalidError(
            f"{what} is not positive-definite (min eig {eigs[0]:.3e})"
        )
    return (S + S.T) / 2.0


def completion_residual(sigma: np.ndarray, S: np.ndarray, g: CIGraph) -> float:
    """Max-abs violation of the two completion conditions: sigma must match
    S on edges and the diagonal, and its inverse must vanish off the graph."""
    ei, ej = g.edge_arrays()
    resid = float(np.abs(np.diag(sigma) - np.diag(S)).max())
    if ei.size:
        resid = max(resid, float(np.abs(sigma[ei, ej] - S[ei, ej]).max()))
    omega = np.linalg.inv(sigma)
    off_pattern = ~g.adjacency() & ~np.eye(g.vertex_count, dtype=bool)
    if off_pattern.any():
        resid = max(resid, float(np.abs(omega[off_pattern]).max()))
    return resid


def dempster_completion(S: np.ndarray, g: CIGraph, tol: float = 1e-7,
                        max_iter: int = 500) -> np.ndarray:
    """Complete a covariance so it matches S on the graph and the diagonal
    while its inverse vanishes off the graph.

    Solved by cyclic column fits against the neighbor structure: each sweep
    re-pins the constrained entries to S exactly and moves the free entries
    toward the unique positive-definite fixed point. The returned matrix is
    certified: both defining conditions are checked against the exact
    inverse, not the iterate. A complete graph returns S itself and an empty
    graph its diagonal, both exact.
    """
    S = _validate_spd(S, "S")
    d = S.shape[0]
    if g.vertex_count != d:
        raise ModelInvalidError(
            f"graph has {g.vertex_count} vertices, S is {d}x{d}"
        )
    if g.is_complete:
        return S.copy()
    if g.is_empty:
        return np.diag(np.diag(S)).copy()

    adj = g.adjacency()
    W = S.copy()
    remaining = max_iter
    resid = np.inf
    while remaining > 0:
        sweeps, delta = _kernels.ggm_fit(W, S, adj, tol * 1e-2, remaining)
        remaining -= sweeps
        if not np.isfinite(delta):
            raise ModelInvalidError(
                "the working covariance lost positive-definiteness "
                "during completion"
            )
        resid = completion_residual(W, S, g)
        if resid <= tol:
            return W.copy()
    raise ConvergenceError(
        f"completion residual {resid:.3e} above tolerance {tol:.1e} "
        f"after {max_iter} sweeps",
        best=W,
        residual=resid,
    )


class _PrefixContext:
    """Per-batch running prefix covariances, shared across graph passes."""

    __slots__ = ("S_all", "pd", "log2det")

    def __init__(self, batch: DataBatch, warmup: int):
        self.S_all, self.pd, self.log2det = _kernels.prefix_stats(
            batch.values, warmup, PD_EIG_RTOL
        )


def _predictive_bits(batch: DataBatch, g: CIGraph, default_model: GaussianModel,
                     warmup: int, config: SelectionConfig,
                     ctx: _PrefixContext) -> np.ndarray:
    return _kernels.predictive_pass(
        batch.values, ctx.S_all, ctx.pd, ctx.log2det,
        g.adjacency(), g.is_complete,
        default_model.precision, default_model.log2_det_cov, default_model.mean,
        int(warmup), config.ipf_tol, config.ipf_max_iter,
    )


def predictive_per_sample(batch: DataBatch, g: CIGraph,
                          default_model: GaussianModel,
                          warmup: int,
                          config: SelectionConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Per-sample bits of the sequential plug-in code; sum is the total."""
    if g.vertex_count != batch.dim:
        raise InvalidDataError(
            f"graph has {g.vertex_count} vertices, batch dim is {batch.dim}"
        )
    if default_model.dim != batch.dim:
        raise InvalidDataError(
            f"default model dim {default_model.dim} != batch dim {batch.dim}"
        )
    if warmup < 1:
        raise ValueError(f"warmup must be >= 1, got {warmup}")
    ctx = _PrefixContext(batch, warmup)
    return _predictive_bits(batch, g, default_model, warmup, config, ctx)


def predictive_mdl_codelength(batch: DataBatch, g: CIGraph,
                              default_model: GaussianModel,
                              warmup: int,
                              config: SelectionConfig = DEFAULT_CONFIG) -> float:
    """Total bits of the plug-in code for a batch under one graph."""
    return float(predictive_per_sample(batch, g, default_model, warmup, config).sum())


def select_model(batch: DataBatch, lambda_grid,
                 config: SelectionConfig = DEFAULT_CONFIG) -> ModelSelectionResult:
    """Pick the penalty whose graph minimizes graph bits plus data bits.

    Grid points whose solver run did not converge are skipped; if none
    converges the selection fails. A batch whose covariance is structurally
    degenerate (a coordinate with zero variance) cannot be sparsified at
    all; such batches fall back to the empty graph so that the universal
    coder stays total — the plug-in code then runs on default models.
    ``completed_covariance`` is None when the batch covariance admits no
    positive-definite completion (e.g. too few samples), which only matters
    to callers that train from the result.
    """
    grid = [float(v) for v in lambda_grid]
    if not grid:
        raise SelectionError("penalty grid is empty")
    if any(v < 0 for v in grid):
        raise ValueError("penalties must be nonnegative")
    if batch.rows < 2:
        raise InvalidDataError("selection needs at least 2 samples")

    S = empirical_covariance(batch, assume_zero_mean=True)
    d = batch.dim
    default = GaussianModel.standard(d)
    warmup = config.warmup_for(d)
    ctx = _PrefixContext(batch, warmup)

    if np.any(np.diag(S) <= 0.0):
        g = CIGraph.empty(d)
        gb = graph_codelength(g)
        db = float(_predictive_bits(batch, g, default, warmup, config, ctx).sum())
        return ModelSelectionResult(
            lambda_star=max(grid),
            graph=g,
            completed_covariance=None,
            graph_bits=gb,
            data_bits=db,
            per_lambda_table=[(lam, gb, db) for lam in grid],
        )

    table = []
    by_lambda = {}
    by_graph = {}
    best = None
    for lam in grid:
        if lam in by_lambda:
            entry = by_lambda[lam]
        else:
            sol = graphical_lasso(S, lam, config.glasso_tol, config.glasso_max_iter)
            if not sol.converged:
                by_lambda[lam] = None
                continue
            g = graph_from_precision(sol.precision, config.edge_threshold)
            key = g.edges
            if key in by_graph:
                gb, db = by_graph[key]
            else:
                gb = graph_codelength(g)
                db = float(_predictive_bits(batch, g, default, warmup, config, ctx).sum())
                by_graph[key] = (gb, db)
            entry = (lam, g, gb, db)
            by_lambda[lam] = entry
        if entry is None:
            continue
        lam_e, g, gb, db = entry
        table.append((lam_e, gb, db))
        total = gb + db
        if (best is None or total < best[0]
                or (total == best[0] and lam_e > best[1])):
            best = (total, lam_e, g, gb, db)
    if best is None:
        raise SelectionError("no grid point converged")

    _, lam_star, g_star, gb_star, db_star = best
    try:
        completed = dempster_completion(S, g_star, config.ipf_tol, config.ipf_max_iter)
    except (ModelInvalidError, ConvergenceError):
        completed = None
    return ModelSelectionResult(
        lambda_star=lam_star,
        graph=g_star,
        completed_covariance=completed,
        graph_bits=gb_star,
        data_bits=db_star,
        per_lambda_table=table,
    )


def log_lambda_grid(lo: float = 0.1, hi: float = 1.0, count: int = 20) -> np.ndarray:
    """Logarithmically spaced penalty grid, endpoints included."""
    if not (0 < lo <= hi) or count < 1:
        raise ValueError(f"bad grid spec lo={lo}, hi={hi}, count={count}")
    if count == 1:
        return np.array([lo])
    return np.logspace(np.log10(lo), np.log10(hi), count)
