"""Exception hierarchy shared across the package."""


class MdloodError(Exception):
    """Base class for all package-specific errors."""


class InvalidDataError(MdloodError):
    """Input data violates a precondition (non-finite values, empty batch)."""


class DimensionMismatchError(MdloodError):
    """Operands have incompatible dimensions."""


class ModelInvalidError(MdloodError):
    """A Gaussian model violates its validity invariants (non-PD covariance,
    asymmetry, non-positive variance)."""


class ConvergenceError(MdloodError):
    """An iterative solver hit its iteration limit without meeting tolerance.

    Carries the best iterate so callers can inspect how close it got.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SelectionError(MdloodError):
    """Model selection failed on every candidate of the regularization grid."""


class TrainingError(MdloodError):
    """Training statistics are degenerate (e.g. zero residual variance)."""


class MatrixFormatError(MdloodError):
    """A matrix file failed to parse or violated its declared header."""


class InsufficientRowsError(MdloodError):
    """A data file has fewer rows than an operation requires."""
