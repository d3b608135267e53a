"""NumPy fallback backend for the likelihood hot path.

Mirrors the compiled extension in ``_kernels_cy``: same functions, same
status codes, same jitter-ladder semantics. Kept free of package imports
above :mod:`kernels` so either backend can load on its own.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .kernels import MATERN, POWER_EXPONENTIAL, SQUARED_EXPONENTIAL

BACKEND_NAME = "python"

# Factorization outcomes shared with the compiled backend.
STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_DEGENERATE = 2

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

_EPS = float(np.finfo(np.float64).eps)
_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


def _corr_from_sums(variant, shape, s):
    """Correlation values from weighted distance sums.

    s holds sum_i 10^omega_i |dx_i|^q with q = 2 for SquaredExponential and
    Matern, q = p for PowerExponential.
    """
    if variant == SQUARED_EXPONENTIAL or variant == POWER_EXPONENTIAL:
        return np.exp(-s)
    if variant != MATERN:
        raise ValueError(f"unknown kernel code {variant!r}")
    d = np.sqrt(s)
    if shape == 0.5:
        return np.exp(-d)
    if shape == 1.5:
        z = _SQRT3 * d
        return (1.0 + z) * np.exp(-z)
    z = _SQRT5 * d
    return (1.0 + z + z * z / 3.0) * np.exp(-z)


def _weighted_sums(variant, shape, absdiff, w):
    if variant == POWER_EXPONENTIAL:
        return np.power(absdiff, shape) @ w
    return (absdiff * absdiff) @ w


def corr_packed(variant, shape, diffs, omega):
    """Correlations for packed pairwise |dx|, shape (npair, d) -> (npair,)."""
    w = 10.0 ** np.asarray(omega, dtype=float)
    return _corr_from_sums(variant, shape, _weighted_sums(variant, shape, diffs, w))

def corr_matrix(variant, shape, X, omega):
    """Dense correlation matrix with unit diagonal."""
    X = np.asarray(X, dtype=float)
    w = 10.0 ** np.asarray(omega, dtype=float)
    absdiff = np.abs(X[:, None, :] - X[None, :, :])
    R = _corr_from_sums(variant, shape, _weighted_sums(variant, shape, absdiff, w))
    np.fill_diagonal(R, 1.0)
    return R


def corr_cross(variant, shape, A, B, omega):
    """Cross-correlation matrix between point sets A (na,d) and B (nb,d)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    w = 10.0 ** np.asarray(omega, dtype=float)
    absdiff = np.abs(A[:, None, :] - B[None, :, :])
    return _corr_from_sums(variant, shape, _weighted_sums(variant, shape, absdiff, w))


def cholesky_nugget(variant, shape, diffs, n, omega, tau):
    """Factor V = R + (tau + jitter) I, climbing the jitter ladder.

    Returns (L, jitter) or (None, nan). A rung is accepted only when the
    smallest pivot clearly exceeds what the jitter alone would provide, so
    exactly singular matrices fail the whole ladder instead of being
    silently patched.
    """
    rvec = corr_packed(variant, shape, diffs, omega)
    V = np.zeros((n, n))
    V[np.tril_indices(n, -1)] = rvec
    V = V + V.T
    for j in JITTER_LADDER:
        diagval = 1.0 + tau + j
        A = V.copy()
        np.fill_diagonal(A, diagval)
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            continue
        mind = float(np.min(np.diagonal(L)))
        thresh = max(10.0 * j, 64.0 * n * _EPS * diagval)
        if mind * mind <= thresh:
            continue
        return L, j
    return None, float("nan")


def profile_core(variant, shape, diffs, n, y, omega, tau):
    """Concentrated log-likelihood for one (omega, tau) proposal.

    diffs is the packed strict-lower |dx| table from pair_diffs; y is the
    standardized response. Returns
    (status, loglik, sigma2, beta, jitter) with status 0 ok, 1 singular,
    2 degenerate.
    """
    L, jitter = cholesky_nugget(variant, shape, diffs, n, omega, tau)
    nan = float("nan")
    if L is None:
        return (STATUS_SINGULAR, nan, nan, nan, nan)
    z = solve_triangular(L, y, lower=True, check_finite=False)
    u = solve_triangular(L, np.ones(n), lower=True, check_finite=False)
    utu = float(u @ u)
    utz = float(u @ z)
    beta = utz / utu
    sigma2 = (float(z @ z) - utz * utz / utu) / n
    if sigma2 < 1e-12:
        return (STATUS_DEGENERATE, nan, nan, beta, jitter)
    logdet = 2.0 * float(np.sum(np.log(np.diagonal(L))))
    loglik = -n * math.log(sigma2) - logdet
    return (STATUS_OK, loglik, sigma2, beta, jitter)
