"""Adversarial encoder pipeline: train on images, export latent vectors and
reconstruction residuals in the matrix-file format the detector consumes."""

from .config import EncoderConfig
from .export import encode_batches, export
from .idx import read_idx_images, read_idx_labels, write_idx_images
from .matrixfile import write_matrix
from .perturb import CASES, perturb
from .train import TrainedEncoderPair, TrainingDiverged, train_encoder

__version__ = "0.1.0"
