"""Group out-of-distribution detection by codelength comparison.

Fit a Gaussian description of training latents (sparse, via an l1-penalized
precision estimate selected by a two-part code), then flag a test batch as
out-of-distribution when a universal coder — one that buys its model as part
of the message — beats the trained coder by more than a margin.
"""

from .coder import (
    CodelengthReport,
    TrainedDetector,
    scalar_universal_codelength,
    scalar_universal_per_value,
    trained_codelength,
    universal_codelength,
)
from .detector import Decision, detect, detect_known_model, train, train_with_selection
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    InsufficientRowsError,
    InvalidDataError,
    MatrixFormatError,
    MdloodError,
    ModelInvalidError,
    SelectionError,
    TrainingError,
)
from .evaluate import (
    RocResult,
    ShiftSpec,
    TrialConfig,
    array_source,
    make_shift,
    make_sparse_ggm,
    model_source,
    roc_auroc,
    run_trials,
)
from .gaussian import (
    DataBatch,
    GaussianModel,
    concat_batches,
    empirical_covariance,
    gaussian_codelength,
    gaussian_codelength_per_sample,
    sample_gaussian,
)
from .glasso import GlassoSolution, graphical_lasso, kkt_residual
from .graphs import CIGraph, graph_codelength, graph_from_precision
from .matrixio import load_detector, read_matrix, save_detector, write_matrix
from .select import (
    ModelSelectionResult,
    SelectionConfig,
    dempster_completion,
    log_lambda_grid,
    predictive_mdl_codelength,
    predictive_per_sample,
    select_model,
)

__version__ = "0.1.0"
