"""Exception types shared across the package."""


class LabOptError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(LabOptError, ValueError):
    """Malformed or non-finite input."""


class DomainError(InvalidArgumentError):
    """Point lies outside the admissible input region."""


class DegenerateDataError(LabOptError):
    """Residual variance collapsed; the response carries no signal."""


class SingularCovarianceError(LabOptError):
    """Covariance factorization failed even after the jitter ladder."""


class AcquisitionFailureError(LabOptError):
    """Every candidate produced a non-finite acquisition value."""
