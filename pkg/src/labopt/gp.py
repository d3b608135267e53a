"""Gaussian-process emulator with a homoscedastic relative nugget.

The observation model is Y ~ N(M beta, sigma2 (R + tau I)) on standardized
responses, with a constant trend basis m(x) = 1. Hyperparameters (omega,
tau, and the kernel shape where free) are found by maximizing the
concentrated log-likelihood

    -n log(sigma2_hat) - log |R + tau I|

over omega in [-10, 10]^d and tau in [0, 1], with sigma2_hat and beta_hat
closed-form at each proposal. Predictions include the trend-estimation
term and the additive noise floor sigma2_hat * tau_hat.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize
from scipy.stats import qmc

from . import backend
from .errors import (
    DegenerateDataError,
    DomainError,
    InvalidArgumentError,
    SingularCovarianceError,
)
from .kernels import KernelFamily

_MATERN_NUS = (0.5, 1.5, 2.5)
_DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of admissible raw inputs."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise InvalidArgumentError("bounds must be equal-length vectors")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidArgumentError("bounds must be finite")
        if not np.all(lo < hi):
            raise InvalidArgumentError("need lower < upper in every dimension")
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))

    @property
    def d(self) -> int:
        return len(self.lower)

    def normalize(self, X):
        """Raw coordinates to the unit cube."""
        X = np.asarray(X, dtype=float)
        lo = np.asarray(self.lower)
        span = np.asarray(self.upper) - lo
        return (X - lo) / span

    def denormalize(self, U):
        U = np.asarray(U, dtype=float)
        lo = np.asarray(self.lower)
        span = np.asarray(self.upper) - lo
        return lo + U * span


@dataclass(frozen=True)
class Dataset:
    """Observed inputs (normalized) and responses (raw units)."""

    domain: BoxDomain
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.shape[0] or X.shape[0] < 1:
            raise InvalidArgumentError("X and y must align, n >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("observations must be finite")
        if X.shape[1] != self.domain.d:
            raise InvalidArgumentError("dimension mismatch with domain")
        if np.any(X < -_DOMAIN_SLACK) or np.any(X > 1.0 + _DOMAIN_SLACK):
            raise DomainError("normalized inputs must lie in the unit cube")
        X = np.clip(X, 0.0, 1.0)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_raw(cls, domain: BoxDomain, X_raw, y) -> "Dataset":
        return cls(domain, domain.normalize(X_raw), y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def append(self, x_norm, y_new: float) -> "Dataset":
        x_norm = np.asarray(x_norm, dtype=float).reshape(1, -1)
        return Dataset(self.domain,
                       np.vstack([self.X, x_norm]),
                       np.append(self.y, float(y_new)))


@dataclass(frozen=True)
class Hyperparameters:
    """Fitted kernel weights and variance components (standardized units)."""

    omega: np.ndarray
    tau: float
    sigma2: float
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega",
                           np.asarray(self.omega, dtype=float).copy())
        object.__setattr__(self, "beta",
                           np.asarray(self.beta, dtype=float).ravel().copy())


@dataclass(frozen=True)
class SearchConfig:
    """Multi-start local-search policy for hyperparameter fitting."""

    seed: int = 0
    n_starts: int | None = None  # default 8 (d+1)
    max_evals_per_start: int = 200
    omega_bounds: tuple = (-10.0, 10.0)
    tau_bounds: tuple = (0.0, 1.0)
    p_bounds: tuple = (0.1, 2.0)

    def starts_for(self, d: int) -> int:
        return self.n_starts if self.n_starts is not None else 8 * (d + 1)


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: float
    variance: float


@dataclass(frozen=True)
class FittedGP:
    """Immutable fitted emulator with cached factorization.

    All cached vectors live in standardized-response space; posterior()
    maps back to raw units. The cached factor L satisfies
    L L^T = R + (tau + jitter) I.
    """

    dataset: Dataset
    kernel: KernelFamily
    hyper: Hyperparameters
    loglik: float
    y_mean: float
    y_sd: float
    jitter: float
    L: np.ndarray = field(repr=False)
    _alpha: np.ndarray = field(repr=False)
    _gamma: np.ndarray = field(repr=False)
    _uTu: float = field(repr=False)

    @property
    def y_std(self) -> np.ndarray:
        return (self.dataset.y - self.y_mean) / self.y_sd

    def noise_floor_std(self) -> float:
        """sigma2_hat * tau_hat, the additive variance term (standardized)."""
        return self.hyper.sigma2 * self.hyper.tau

    # -- prediction -------------------------------------------------------

    def posterior_batch(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Mean and variance (raw units) at queries Xq, shape (m, d)."""
        Xq = self._check_queries(Xq)
        mu, s2 = self._posterior_std(Xq)
        return self.y_mean + self.y_sd * mu, self.y_sd ** 2 * s2

    def posterior_std_batch(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Same, in standardized-response units (acquisition space)."""
        return self._posterior_std(self._check_queries(Xq))

    def posterior(self, x) -> PosteriorPrediction:
        mu, s2 = self.posterior_batch(np.asarray(x, dtype=float).reshape(1, -1))
        return PosteriorPrediction(float(mu[0]), float(s2[0]))

    def _check_queries(self, Xq) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if Xq.shape[1] != self.dataset.d:
            raise InvalidArgumentError("query dimension mismatch")
        if np.any(Xq < -_DOMAIN_SLACK) or np.any(Xq > 1.0 + _DOMAIN_SLACK):
            raise DomainError("query outside the normalized domain")
        if np.any(Xq < 0.0) or np.any(Xq > 1.0):
            warnings.warn("query clamped onto the unit cube")
            Xq = np.clip(Xq, 0.0, 1.0)
        return Xq

    def _posterior_std(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        h = self.hyper
        Rc = backend.corr_cross(self.kernel.code, self.kernel.shape,
                                self.dataset.X, Xq, h.omega)
        mu = h.beta[0] + Rc.T @ self._alpha
        Q = solve_triangular(self.L, Rc, lower=True, check_finite=False)
        W = 1.0 - Rc.T @ self._gamma
        s2 = h.sigma2 * (1.0 - np.einsum("ij,ij->j", Q, Q)
                         + W * W / self._uTu + h.tau)
        floor = max(h.sigma2 * h.tau, 0.0)
        return mu, np.maximum(s2, floor)


# ---------------------------------------------------------------------------
# likelihood and fitting
# ---------------------------------------------------------------------------

def standardize(y) -> tuple[np.ndarray, float, float]:
    """Center/scale responses; guards the constant-vector case."""
    y = np.asarray(y, dtype=float).ravel()
    mean = float(np.mean(y))
    sd = float(np.std(y))
    if sd < 1e-15:
        sd = 1.0
    return (y - mean) / sd, mean, sd


def profile_loglik(dataset: Dataset, kernel: KernelFamily, omega,
                   tau: float) -> tuple[float, float, np.ndarray]:
    """Concentrated log-likelihood at (omega, tau), standardized units.

    Returns (loglik, sigma2, beta). Raises DegenerateDataError when the
    residual variance collapses and SingularCovarianceError when the
    jitter ladder cannot factor the covariance.
    """
    if dataset.n < 2:
        raise InvalidArgumentError("need n >= 2")
    if kernel.is_free:
        raise InvalidArgumentError("kernel shape must be concrete here")
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    if omega.shape != (dataset.d,) or not np.all(np.isfinite(omega)):
        raise InvalidArgumentError("omega must be a finite length-d vector")
    if not (math.isfinite(tau) and tau >= 0.0):
        raise InvalidArgumentError("tau must be finite and >= 0")
    y_std, _, _ = standardize(dataset.y)
    diffs = backend.pair_diffs(dataset.X)
    status, ll, s2, beta, _ = backend.profile_core(
        kernel.code, kernel.shape, diffs, dataset.n,
        np.ascontiguousarray(y_std), omega, float(tau))
    if status == backend.STATUS_SINGULAR:
        raise SingularCovarianceError(
            "covariance not factorizable after the jitter ladder")
    if status == backend.STATUS_DEGENERATE:
        raise DegenerateDataError("residual variance below 1e-12")
    return float(ll), float(s2), np.array([beta])


def _start_points(search: SearchConfig, d: int, with_p: bool) -> np.ndarray:
    k = d + 1 + (1 if with_p else 0)
    m = search.starts_for(d)
    sob = qmc.Sobol(d=k, scramble=True, seed=search.seed)
    # draw a power-of-two block and slice, keeping Sobol balance happy
    unit = sob.random_base2(max(1, math.ceil(math.log2(m))))[:m]
    lo = np.array([search.omega_bounds[0]] * d + [search.tau_bounds[0]]
                  + ([search.p_bounds[0]] if with_p else []))
    hi = np.array([search.omega_bounds[1]] * d + [search.tau_bounds[1]]
                  + ([search.p_bounds[1]] if with_p else []))
    # affine by hand: fixed parameters (lo == hi) are legal here
    return lo + unit * (hi - lo)


def fit(dataset: Dataset, kernel: KernelFamily,
        search: SearchConfig = SearchConfig()) -> FittedGP:
    """Fit hyperparameters by multi-start Nelder-Mead on the profile.

    A free Matern smoothness is handled by cycling nu in {1/2, 3/2, 5/2}
    across starts; a free power exponent joins the continuous search.
    Deterministic for a given (dataset, kernel, search).
    """
    if dataset.n < 2:
        raise InvalidArgumentError("need n >= 2 to fit")
    d = dataset.d
    y_std, y_mean, y_sd = standardize(dataset.y)
    y_std = np.ascontiguousarray(y_std)
    diffs = backend.pair_diffs(dataset.X)
    n = dataset.n

    search_p = kernel.variant == "PowerExponential" and kernel.p is None
    cycle_nu = kernel.variant == "Matern" and kernel.nu is None
    starts = _start_points(search, d, search_p)

    lo = [search.omega_bounds[0]] * d + [search.tau_bounds[0]]
    hi = [search.omega_bounds[1]] * d + [search.tau_bounds[1]]
    if search_p:
        lo.append(search.p_bounds[0])
        hi.append(search.p_bounds[1])
    bounds = list(zip(lo, hi))

    saw_degenerate = False
    saw_singular = False
    best = None  # (negloglik, start_index, theta, shape)

    for idx, x0 in enumerate(starts):
        if cycle_nu:
            shape = _MATERN_NUS[idx % 3]
        elif kernel.variant == "Matern":
            shape = float(kernel.nu)
        elif kernel.variant == "PowerExponential" and not search_p:
            shape = float(kernel.p)
        else:
            shape = 0.0
        code = kernel.code

        def objective(theta, _shape=shape):
            nonlocal saw_degenerate, saw_singular
            omega = np.ascontiguousarray(theta[:d])
            tau = min(max(float(theta[d]), search.tau_bounds[0]),
                      search.tau_bounds[1])
            sh = _shape
            if search_p:
                sh = min(max(float(theta[d + 1]), search.p_bounds[0]),
                         search.p_bounds[1])
            status, ll, _, _, _ = backend.profile_core(
                code, sh, diffs, n, y_std, omega, tau)
            if status != backend.STATUS_OK:
                if status == backend.STATUS_DEGENERATE:
                    saw_degenerate = True
                else:
                    saw_singular = True
                return 1e13
            return -ll

        res = minimize(objective, x0, method="Nelder-Mead", bounds=bounds,
                       options={"maxfev": search.max_evals_per_start,
                                "xatol": 1e-4, "fatol": 1e-7})
        if res.fun < 1e12:
            cand = (float(res.fun), idx, np.asarray(res.x, dtype=float), shape)
            if best is None or cand[0] < best[0]:
                best = cand

    if best is None:
        if saw_degenerate and not saw_singular:
            raise DegenerateDataError("all search starts degenerate")
        raise SingularCovarianceError("all search starts failed to factor")

    _, _, theta, shape = best
    omega = np.ascontiguousarray(np.clip(theta[:d], *search.omega_bounds))
    tau = float(np.clip(theta[d], *search.tau_bounds))
    if search_p:
        shape = float(np.clip(theta[d + 1], *search.p_bounds))

    if kernel.variant == "Matern":
        fitted_kernel = KernelFamily("Matern", nu=shape)
    elif kernel.variant == "PowerExponential":
        fitted_kernel = KernelFamily("PowerExponential", p=shape)
    else:
        fitted_kernel = kernel

    return _assemble(dataset, fitted_kernel, omega, tau, diffs,
                     y_std, y_mean, y_sd)


def fit_fixed(dataset: Dataset, kernel: KernelFamily, omega,
              tau: float) -> FittedGP:
    """Assemble a model at explicit (omega, tau) without any search."""
    if kernel.is_free:
        raise InvalidArgumentError("kernel shape must be concrete here")
    y_std, y_mean, y_sd = standardize(dataset.y)
    diffs = backend.pair_diffs(dataset.X)
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    return _assemble(dataset, kernel, omega, float(tau), diffs,
                     np.ascontiguousarray(y_std), y_mean, y_sd)


def _assemble(dataset, kernel, omega, tau, diffs, y_std, y_mean, y_sd):
    status, ll, sigma2, beta, jitter = backend.profile_core(
        kernel.code, kernel.shape, diffs, dataset.n, y_std, omega, tau)
    if status == backend.STATUS_SINGULAR:
        raise SingularCovarianceError(
            "covariance not factorizable after the jitter ladder")
    if status == backend.STATUS_DEGENERATE:
        raise DegenerateDataError("residual variance below 1e-12")
    L, jitter2 = backend.cholesky_nugget(
        kernel.code, kernel.shape, diffs, dataset.n, omega, tau)
    assert L is not None and jitter2 == jitter

    resid = y_std - beta
    t = solve_triangular(L, resid, lower=True, check_finite=False)
    alpha = solve_triangular(L.T, t, lower=False, check_finite=False)
    u = solve_triangular(L, np.ones(dataset.n), lower=True, check_finite=False)
    gamma = solve_triangular(L.T, u, lower=False, check_finite=False)
    hyper = Hyperparameters(omega=omega, tau=float(tau),
                            sigma2=float(sigma2), beta=np.array([beta]))
    return FittedGP(dataset=dataset, kernel=kernel, hyper=hyper,
                    loglik=float(ll), y_mean=y_mean, y_sd=y_sd,
                    jitter=float(jitter), L=L, _alpha=alpha, _gamma=gamma,
                    _uTu=float(u @ u))
