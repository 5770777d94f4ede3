"""Trial runner, ROC/AUROC, and synthetic distribution shifts.

Scores follow the detector convention: lower score = more out-of-
distribution. AUROC is therefore the probability that a random OOD batch
scores *below* a random in-distribution batch, with half credit for ties.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .coder import TrainedDetector
from .detector import detect, detect_known_model
from .errors import InsufficientRowsError, InvalidDataError
from .gaussian import DataBatch, GaussianModel
from .graphs import CIGraph
from .select import DEFAULT_CONFIG, SelectionConfig, log_lambda_grid

SHIFT_KINDS = ("correlation-permute", "covariance-scale", "mean-shift", "rotation")

# A source maps a per-trial RNG to one (latents, residuals-or-None) batch.
BatchSource = Callable[[np.random.Generator], Tuple[DataBatch, Optional[DataBatch]]]


@dataclass(frozen=True)
class ShiftSpec:
    """A synthetic distribution shift applied to a base Gaussian.

    ``amount`` feeds covariance-scale (the factor) and mean-shift (the
    per-coordinate shift in units of that coordinate's standard deviation);
    ``seed`` feeds the random permutation or rotation.
    """

    kind: str
    amount: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SHIFT_KINDS:
            raise ValueError(f"unknown shift kind {self.kind!r}, expected one of {SHIFT_KINDS}")


@dataclass(frozen=True)
class TrialConfig:
    batch_size: int
    trials: int
    seed: int
    shift_spec: Optional[ShiftSpec] = None

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class RocResult:
    """ROC points (false-positive rate, true-positive rate) and the area."""

    points: np.ndarray
    auroc: float


def make_shift(base: GaussianModel, spec: ShiftSpec) -> GaussianModel:
    """Produce the shifted Gaussian for a synthetic OOD class.

    correlation-permute conjugates the covariance by a random permutation,
    which keeps every marginal variance (as a multiset) but scrambles the
    joint structure; rotation conjugates by a Haar-random orthogonal matrix;
    the other two rescale the covariance or translate the mean.
    """
    cov = base.covariance
    mean = base.mean
    if spec.kind == "correlation-permute":
        rng = np.random.default_rng(spec.seed)
        perm = rng.permutation(base.dim)
        return GaussianModel(mean[perm], cov[np.ix_(perm, perm)])
    if spec.kind == "covariance-scale":
        if spec.amount <= 0:
            raise ValueError(f"scale factor must be positive, got {spec.amount}")
        return GaussianModel(mean, spec.amount * cov)
    if spec.kind == "mean-shift":
        return GaussianModel(mean + spec.amount * np.sqrt(np.diag(cov)), cov)
    if spec.kind == "rotation":
        rng = np.random.default_rng(spec.seed)
        a = rng.standard_normal((base.dim, base.dim))
        q, r = np.linalg.qr(a)
        q = q * np.sign(np.diag(r))
        return GaussianModel(q @ mean, q @ cov @ q.T)
    raise ValueError(f"unknown shift kind {spec.kind!r}")


def make_sparse_ggm(dim: int, density: float, strength: float,
                    seed: int) -> Tuple[GaussianModel, CIGraph]:
    """Random sparse Gaussian graphical model with standardized marginals.

    Edges are drawn independently with the given density; the precision gets
    ``-strength`` on each edge, a diagonal boost if needed to stay safely
    positive-definite, and the covariance is rescaled to unit diagonal so
    permutation shifts leave the marginals exactly invariant.
    """
    if not (1 <= dim):
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not (0.0 <= density <= 1.0):
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(dim, k=1)
    mask = rng.random(iu.size) < density
    omega = np.eye(dim)
    omega[iu[mask], ju[mask]] = -strength
    omega[ju[mask], iu[mask]] = -strength
    eigs = np.linalg.eigvalsh(omega)
    if eigs[0] < 0.05:
        omega += (0.05 - eigs[0]) * np.eye(dim)
    cov = np.linalg.inv(omega)
    dinv = 1.0 / np.sqrt(np.diag(cov))
    cov = cov * dinv[:, None] * dinv[None, :]
    cov = (cov + cov.T) / 2.0
    graph = CIGraph(dim, frozenset(zip(iu[mask].tolist(), ju[mask].tolist())))
    return GaussianModel(np.zeros(dim), cov), graph


def model_source(latent_model: GaussianModel, batch_size: int,
                 residual_dim: Optional[int] = None,
                 residual_mean: float = 0.0,
                 residual_var: float = 1.0) -> BatchSource:
    """Source drawing latent batches from a Gaussian, with optional iid
    scalar residuals."""
    chol_t = latent_model.chol.T.copy()
    mean = latent_model.mean

    def draw(rng: np.random.Generator):
        z = rng.standard_normal((batch_size, latent_model.dim))
        latents = DataBatch(z @ chol_t + mean)
        if residual_dim is None:
            return latents, None
        r = residual_mean + np.sqrt(residual_var) * rng.standard_normal(
            (batch_size, residual_dim)
        )
        return latents, DataBatch(r)

    return draw


def array_source(latents: np.ndarray, residuals: Optional[np.ndarray],
                 batch_size: int) -> BatchSource:
    """Source drawing row subsets (without replacement, per trial) from
    fixed arrays; latent and residual rows stay aligned."""
    latents = np.asarray(latents, dtype=np.float64)
    rows = latents.shape[0]
    if residuals is not None:
        residuals = np.asarray(residuals, dtype=np.float64)
        if residuals.shape[0] != rows:
            raise InvalidDataError(
                f"{rows} latent rows vs {residuals.shape[0]} residual rows"
            )

    def draw(rng: np.random.Generator):
        if rows < batch_size:
            raise InsufficientRowsError(
                f"need {batch_size} rows per batch, file has {rows}"
            )
        idx = rng.choice(rows, size=batch_size, replace=False)
        lat = DataBatch(latents[idx])
        res = DataBatch(residuals[idx]) if residuals is not None else None
        return lat, res

    return draw


def _worker_count(trials: int) -> int:
    env = os.environ.get("MDLOOD_THREADS", "")
    try:
        cap = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, min(cap, trials))


def run_trials(det: Union[TrainedDetector, GaussianModel],
               in_source: BatchSource, out_source: BatchSource,
               cfg: TrialConfig, lambda_grid=None,
               config: SelectionConfig = DEFAULT_CONFIG) -> Tuple[np.ndarray, np.ndarray]:
    """Score ``cfg.trials`` batches per class; returns (scores_in, scores_out).

    Seeding is per trial, so results do not depend on execution order and
    trials may run on a thread pool (capped by MDLOOD_THREADS). Trial k of
    both classes shares one child seed: identical sources therefore produce
    identical score lists, and paired comparisons see common random numbers.
    """
    grid = log_lambda_grid() if lambda_grid is None else lambda_grid
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)

    def one(job) -> float:
        k, is_out = job
        source = out_source if is_out else in_source
        rng = np.random.default_rng(children[k])
        try:
            latents, residuals = source(rng)
        except InsufficientRowsError as exc:
            raise InsufficientRowsError(
                f"trial {k} ({'out' if is_out else 'in'}): {exc}"
            ) from exc
        if isinstance(det, GaussianModel):
            if residuals is not None:
                raise InvalidDataError(
                    "known-model scoring takes latent-only sources"
                )
            decision, _ = detect_known_model(latents, det, 0.0, grid, config)
        else:
            decision, _ = detect(latents, residuals, det, 0.0, grid, config)
        return decision.score

    jobs = [(k, is_out) for k in range(cfg.trials) for is_out in (False, True)]
    workers = _worker_count(cfg.trials)
    if workers == 1:
        scores = [one(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(one, jobs))
    scores = np.asarray(scores)
    return scores[0::2].copy(), scores[1::2].copy()


def roc_auroc(scores_in, scores_out) -> RocResult:
    """ROC points and exact AUROC under the lower-score-is-OOD convention.

    The area equals the pairwise count: the fraction of (out, in) pairs with
    the OOD score strictly below, plus half the tied fraction. Counting is
    integral, so the result matches a brute-force pairwise oracle exactly.
    """
    s_in = np.sort(np.asarray(scores_in, dtype=np.float64).ravel())
    s_out = np.sort(np.asarray(scores_out, dtype=np.float64).ravel())
    if s_in.size == 0 or s_out.size == 0:
        raise InvalidDataError("both score lists must be nonempty")
    if not (np.all(np.isfinite(s_in)) and np.all(np.isfinite(s_out))):
        raise InvalidDataError("scores contain non-finite values")

    below = np.searchsorted(s_in, s_out, side="left")
    upto = np.searchsorted(s_in, s_out, side="right")
    ties = int((upto - below).sum())
    greater = int((s_in.size - upto).sum())
    auroc = (greater + 0.5 * ties) / (s_out.size * s_in.size)

    values = np.unique(np.concatenate([s_in, s_out]))
    fpr = np.searchsorted(s_in, values, side="right") / s_in.size
    tpr = np.searchsorted(s_out, values, side="right") / s_out.size
    points = np.column_stack([np.concatenate([[0.0], fpr]),
                              np.concatenate([[0.0], tpr])])
    return RocResult(points=points, auroc=float(auroc))
