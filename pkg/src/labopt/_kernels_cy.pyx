# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the likelihood hot path.

Same contract as ``_kernels_py``: profile_core and cholesky_nugget with
identical status codes and jitter-ladder acceptance rule. The point of
this module is the inner loop of hyperparameter search, where thousands
of small correlation builds and factorizations dominate the run time.
"""

import numpy as np

from libc.math cimport exp, fabs, log, pow, sqrt

BACKEND_NAME = "compiled"

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_DEGENERATE = 2

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

cdef double _EPS = 2.220446049250313e-16
cdef double _SQRT3 = 1.7320508075688772
cdef double _SQRT5 = 2.23606797749979


cdef inline double _corr1(int variant, double shape, double s) nogil:
    # s = sum_i 10^omega_i |dx_i|^q, q = 2 except for the power family
    cdef double d, z
    if variant <= 1:
        return exp(-s)
    d = sqrt(s)
    if shape == 0.5:
        return exp(-d)
    if shape == 1.5:
        z = _SQRT3 * d
        return (1.0 + z) * exp(-z)
    z = _SQRT5 * d
    return (1.0 + z + z * z / 3.0) * exp(-z)


cdef void _corr_packed_c(int variant, double shape, double[:, ::1] diffs,
                         double* w, Py_ssize_t d, double* out) nogil:
    cdef Py_ssize_t k, i
    cdef Py_ssize_t npair = diffs.shape[0]
    cdef double s
    for k in range(npair):
        s = 0.0
        if variant == 1:
            for i in range(d):
                s += w[i] * pow(diffs[k, i], shape)
        else:
            for i in range(d):
                s += w[i] * diffs[k, i] * diffs[k, i]
        out[k] = _corr1(variant, shape, s)


cdef int _chol_lower(double[:, ::1] A, Py_ssize_t n, double thresh) nogil:
    # In-place lower Cholesky; pivot must clear thresh (catches NaN too).
    cdef Py_ssize_t i, j, k
    cdef double s, piv
    for k in range(n):
        s = A[k, k]
        for j in range(k):
            s -= A[k, j] * A[k, j]
        if not (s > thresh):
            return 1
        piv = sqrt(s)
        A[k, k] = piv
        for i in range(k + 1, n):
            s = A[i, k]
            for j in range(k):
                s -= A[i, j] * A[k, j]
            A[i, k] = s / piv
    return 0


cdef void _fill_lower(double[:, ::1] A, double* rvec, Py_ssize_t n,
                      double diagval) nogil:
    cdef Py_ssize_t i, j, k = 0
    for i in range(n):
        for j in range(i):
            A[i, j] = rvec[k]
            k += 1
        A[i, i] = diagval


cdef int _factor_ladder(int variant, double shape, double[:, ::1] diffs,
                        Py_ssize_t n, double[::1] omega, double tau,
                        double[:, ::1] A, double* rvec, double* w,
                        double* jitter_out) nogil:
    cdef Py_ssize_t d = diffs.shape[1]
    cdef Py_ssize_t i
    cdef double j, diagval, thresh
    for i in range(d):
        w[i] = pow(10.0, omega[i])
    _corr_packed_c(variant, shape, diffs, w, d, rvec)
    for i in range(4):
        if i == 0:
            j = 0.0
        elif i == 1:
            j = 1e-10
        elif i == 2:
            j = 1e-8
        else:
            j = 1e-6
        diagval = 1.0 + tau + j
        thresh = 10.0 * j
        if thresh < 64.0 * n * _EPS * diagval:
            thresh = 64.0 * n * _EPS * diagval
        _fill_lower(A, rvec, n, diagval)
        if _chol_lower(A, n, thresh) == 0:
            jitter_out[0] = j
            return 0
    return 1


def profile_core(int variant, double shape, double[:, ::1] diffs, int n,
                 double[::1] y, double[::1] omega, double tau):
    """Concentrated log-likelihood; see the python backend for the contract."""
    cdef Py_ssize_t nn = n
    cdef Py_ssize_t i, j
    A_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] A = A_arr
    scratch = np.empty(n * (n - 1) // 2 + 8, dtype=np.float64)
    cdef double[::1] rvec = scratch
    wbuf = np.empty(diffs.shape[1] + 1, dtype=np.float64)
    cdef double[::1] w = wbuf
    cdef double jitter = 0.0
    cdef double nanv = float("nan")
    if _factor_ladder(variant, shape, diffs, nn, omega, tau,
                      A, &rvec[0], &w[0], &jitter) != 0:
        return (STATUS_SINGULAR, nanv, nanv, nanv, nanv)

    zbuf = np.empty(n, dtype=np.float64)
    ubuf = np.empty(n, dtype=np.float64)
    cdef double[::1] z = zbuf
    cdef double[::1] u = ubuf
    cdef double s, utu = 0.0, utz = 0.0, ztz = 0.0, logdet = 0.0
    for i in range(nn):
        s = y[i]
        for j in range(i):
            s -= A[i, j] * z[j]
        z[i] = s / A[i, i]
        s = 1.0
        for j in range(i):
            s -= A[i, j] * u[j]
        u[i] = s / A[i, i]
        utu += u[i] * u[i]
        utz += u[i] * z[i]
        ztz += z[i] * z[i]
        logdet += 2.0 * log(A[i, i])

    cdef double beta = utz / utu
    cdef double sigma2 = (ztz - utz * utz / utu) / n
    if sigma2 < 1e-12:
        return (STATUS_DEGENERATE, nanv, nanv, beta, jitter)
    cdef double loglik = -n * log(sigma2) - logdet
    return (STATUS_OK, loglik, sigma2, beta, jitter)


def cholesky_nugget(int variant, double shape, double[:, ::1] diffs, int n,
                    double[::1] omega, double tau):
    """Factor V = R + (tau + jitter) I; returns (L, jitter) or (None, nan)."""
    cdef Py_ssize_t nn = n
    A_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] A = A_arr
    scratch = np.empty(n * (n - 1) // 2 + 8, dtype=np.float64)
    cdef double[::1] rvec = scratch
    wbuf = np.empty(diffs.shape[1] + 1, dtype=np.float64)
    cdef double[::1] w = wbuf
    cdef double jitter = 0.0
    cdef Py_ssize_t i, j
    if _factor_ladder(variant, shape, diffs, nn, omega, tau,
                      A, &rvec[0], &w[0], &jitter) != 0:
        return None, float("nan")
    for i in range(nn):
        for j in range(i + 1, nn):
            A[i, j] = 0.0
    return A_arr, jitter
