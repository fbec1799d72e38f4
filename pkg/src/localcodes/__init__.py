"""Structured binary codes, small feed-forward networks, and detection of
emergent class-selective hidden units, with a sweep harness for the
experiments built on top of them."""

__version__ = "0.1.0"

from .analysis import (
    HistogramSeries,
    LcStatistics,
    SelectivityReport,
    SqrtFit,
    chance_disjoint_probability,
    count_local_codes,
    histogram,
    lc_statistics,
    selectivity,
    sqrt_fit,
)
from .backend import ACTIVE_BACKEND, available_backends
from .codegen import (
    CodeSpec,
    Codeword,
    Dataset,
    DistanceAudit,
    distance_audit,
    generate_dataset,
    hamming,
    make_prototypes,
    make_random_fill,
    perturb_prototype,
)
from .errors import (
    ConfigError,
    DataError,
    FitError,
    GenerationError,
    LocalCodesError,
    TrainingError,
    UsageError,
)
from .network import (
    ActivationRecord,
    NetworkConfig,
    TrainedNetwork,
    accuracy,
    forward,
    forward_batch,
    gradient_check,
    train,
)

__all__ = [
    "ACTIVE_BACKEND",
    "ActivationRecord",
    "CodeSpec",
    "Codeword",
    "ConfigError",
    "DataError",
    "Dataset",
    "DistanceAudit",
    "FitError",
    "GenerationError",
    "HistogramSeries",
    "LcStatistics",
    "LocalCodesError",
    "NetworkConfig",
    "SelectivityReport",
    "SqrtFit",
    "TrainedNetwork",
    "TrainingError",
    "UsageError",
    "accuracy",
    "available_backends",
    "chance_disjoint_probability",
    "count_local_codes",
    "distance_audit",
    "forward",
    "forward_batch",
    "generate_dataset",
    "gradient_check",
    "hamming",
    "histogram",
    "lc_statistics",
    "make_prototypes",
    "make_random_fill",
    "perturb_prototype",
    "selectivity",
    "sqrt_fit",
    "train",
]
