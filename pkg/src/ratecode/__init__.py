"""Lossy coding length toolkit: segmentation, MICL classification and rate reduction."""

__version__ = "0.1.0"

from . import coding, datagen, errors, io, mcr2, micl, segmentation  # noqa: E402
from .coding import coding_length, coding_length_with_mean, coding_rate, effective_dimension  # noqa: E402
from .mcr2 import delta_R, optimize_features  # noqa: E402
from .micl import ClassifierState, KernelSpec, classify_asymptotic, classify_micl  # noqa: E402
from .segmentation import Partition, segment_bruteforce, segment_greedy, select_distortion  # noqa: E402

__all__ = [
    "coding", "datagen", "errors", "io", "mcr2", "micl", "segmentation",
    "coding_rate", "coding_length", "coding_length_with_mean", "effective_dimension",
    "Partition", "segment_greedy", "segment_bruteforce", "select_distortion",
    "ClassifierState", "KernelSpec", "classify_micl", "classify_asymptotic",
    "delta_R", "optimize_features",
]
