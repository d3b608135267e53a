"""Correlation families for the emulator.

All kernels act on normalized coordinates and carry anisotropy through
per-dimension log10 weights omega, so the correlation between x and x' is

    SquaredExponential:  exp(-sum_i 10^omega_i (x_i - x'_i)^2)
    PowerExponential:    exp(-sum_i 10^omega_i |x_i - x'_i|^p),  p in (0, 2]
    Matern:              half-integer closed form on
                         dist = sqrt(sum_i 10^omega_i (x_i - x'_i)^2),
                         nu in {1/2, 3/2, 5/2}

The Matern forms are the usual sqrt(2 nu)-scaled ones, equal to the
Bessel-function expression at half-integer nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

# integer codes shared with the compiled backend
SQUARED_EXPONENTIAL = 0
POWER_EXPONENTIAL = 1
MATERN = 2

_VARIANT_CODES = {
    "SquaredExponential": SQUARED_EXPONENTIAL,
    "PowerExponential": POWER_EXPONENTIAL,
    "Matern": MATERN,
}

_MATERN_NUS = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class KernelFamily:
    """A correlation family plus its shape parameter, if any.

    variant is one of "SquaredExponential", "PowerExponential", "Matern".
    p applies to PowerExponential only and must lie in (0, 2]; nu applies
    to Matern only and must be one of 1/2, 3/2, 5/2. Leaving the shape
    parameter None marks it free: the fit searches p and cycles nu, and
    the fitted model carries the concrete value.
    """

    variant: str
    p: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.variant not in _VARIANT_CODES:
            raise InvalidArgumentError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "PowerExponential":
            if self.p is not None and not (0.0 < self.p <= 2.0):
                raise InvalidArgumentError("p must lie in (0, 2]")
        elif self.p is not None:
            raise InvalidArgumentError("p is only valid for PowerExponential")
        if self.variant == "Matern":
            if self.nu is not None and self.nu not in _MATERN_NUS:
                raise InvalidArgumentError("nu must be one of 1/2, 3/2, 5/2")
        elif self.nu is not None:
            raise InvalidArgumentError("nu is only valid for Matern")

    @property
    def is_free(self) -> bool:
        """True when the shape parameter is left to the fit."""
        if self.variant == "PowerExponential":
            return self.p is None
        if self.variant == "Matern":
            return self.nu is None
        return False

    @property
    def code(self) -> int:
        return _VARIANT_CODES[self.variant]

    @property
    def shape(self) -> float:
        """Shape parameter passed to the backends; 0.0 when unused."""
        if self.variant == "PowerExponential":
            if self.p is None:
                raise InvalidArgumentError("power exponent not set")
            return float(self.p)
        if self.variant == "Matern":
            if self.nu is None:
                raise InvalidArgumentError("smoothness not set")
            return float(self.nu)
        return 0.0

    def label(self) -> str:
        if self.variant == "PowerExponential":
            return ("PowerExponential" if self.p is None
                    else f"PowerExponential(p={self.p:g})")
        if self.variant == "Matern":
            return "Matern" if self.nu is None else f"Matern(nu={self.nu:g})"
        return self.variant


def kernel_eval(kernel: KernelFamily, omega, sigma2: float, x, x2) -> float:
    """Covariance sigma2 * r(x, x2) between two points.

    Scalar reference path; the fitting and prediction code goes through
    the array backends instead.
    """
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    omega = np.asarray(omega, dtype=float).ravel()
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x2))
            and np.all(np.isfinite(omega)) and math.isfinite(sigma2)):
        raise InvalidArgumentError("kernel_eval requires finite inputs")
    if not (len(x) == len(x2) == len(omega)):
        raise InvalidArgumentError("dimension mismatch")
    w = 10.0 ** omega
    if kernel.variant == "SquaredExponential":
        r = math.exp(-float(np.sum(w * (x - x2) ** 2)))
    elif kernel.variant == "PowerExponential":
        r = math.exp(-float(np.sum(w * np.abs(x - x2) ** kernel.shape)))
    else:
        d = math.sqrt(float(np.sum(w * (x - x2) ** 2)))
        r = _matern_scalar(d, kernel.shape)
    return sigma2 * r


def _matern_scalar(d: float, nu: float) -> float:
    if nu == 0.5:
        return math.exp(-d)
    if nu == 1.5:
        z = math.sqrt(3.0) * d
        return (1.0 + z) * math.exp(-z)
    z = math.sqrt(5.0) * d
    return (1.0 + z + z * z / 3.0) * math.exp(-z)
