"""Selects the likelihood backend at import time.

The compiled extension is preferred when present; LABOPT_BACKEND=python or
LABOPT_BACKEND=compiled forces a choice ("compiled" raises if the build is
missing rather than silently degrading). Grid-sized correlation matrices
are always built with the vectorized NumPy routines, which beat a scalar
C loop at those shapes; the compiled path exists for the many small
problems inside hyperparameter search.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from . import _kernels_py

STATUS_OK = _kernels_py.STATUS_OK
STATUS_SINGULAR = _kernels_py.STATUS_SINGULAR
STATUS_DEGENERATE = _kernels_py.STATUS_DEGENERATE
JITTER_LADDER = _kernels_py.JITTER_LADDER

corr_matrix = _kernels_py.corr_matrix
corr_cross = _kernels_py.corr_cross


def _load_compiled():
    from . import _kernels_cy
    return _kernels_cy


def _select():
    choice = os.environ.get("LABOPT_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "compiled", "python"):
        warnings.warn(f"unknown LABOPT_BACKEND={choice!r}, using auto")
        choice = "auto"
    if choice == "python":
        return _kernels_py
    try:
        return _load_compiled()
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "LABOPT_BACKEND=compiled but the extension is not built; "
                "reinstall without LABOPT_PURE_PYTHON=1"
            )
        return _kernels_py


_impl = _select()

BACKEND_NAME = _impl.BACKEND_NAME
profile_core = _impl.profile_core
cholesky_nugget = _impl.cholesky_nugget


def get_backend(name: str):
    """Explicit backend module by name, for parity tests and benchmarks."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        return _load_compiled()
    raise ValueError(name)


def pair_diffs(X) -> np.ndarray:
    """Packed strict-lower |x_i - x_j| table, shape (n(n-1)/2, d).

    Row order matches np.tril_indices(n, -1), the order both backends
    expect when rebuilding the correlation matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    rows, cols = np.tril_indices(X.shape[0], -1)
    return np.ascontiguousarray(np.abs(X[rows] - X[cols]))
