"""Sequential model-based optimization for noisy experiments."""

__version__ = "0.1.0"

from .errors import (
    AcquisitionFailureError,
    DegenerateDataError,
    DomainError,
    InvalidArgumentError,
    LabOptError,
    SingularCovarianceError,
)
from .kernels import KernelFamily, kernel_eval

__all__ = [
    "AcquisitionFailureError",
    "DegenerateDataError",
    "DomainError",
    "InvalidArgumentError",
    "KernelFamily",
    "LabOptError",
    "SingularCovarianceError",
    "kernel_eval",
    "__version__",
]
