"""Acquisition functions over a fitted emulator, plus a common maximizer.

Everything here works in standardized-response space, which makes the
improvement-based criteria invariant to affine rescaling of the raw
responses. All five criteria are written to be maximized; the underlying
problem is minimization of the response.

The look-ahead criteria are made concrete on finite candidate grids:
knowledge gradient conditions grid means on a hallucinated observation by
rank-1 updates with hyperparameters and trend held fixed, and entropy
search draws minimizer locations from joint posterior samples over the
grid, then conditions predictive variances on a hallucinated low-noise
observation at each drawn location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from . import backend
from .errors import AcquisitionFailureError, InvalidArgumentError
from .gp import BoxDomain, FittedGP

KINDS = ("UC", "PI", "EI", "KG", "PES")

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# relative nugget of the hallucinated observation used by entropy search
_PES_HALLUCINATION_NUGGET = 1e-6


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which criterion to use and its knobs.

    candidate_grid, kg_grid and pes_grid are per-dimension resolutions;
    None picks dimension-appropriate defaults. ei_noise_factor selects
    the variance-ratio noise discount ("variance", the default) or the
    literal standard-deviation form ("literal") for sensitivity checks.
    """

    kind: str
    pi: float = 5.0
    lam: float = 0.1
    kg_quadrature: int = 21
    pes_star_samples: int = 16
    candidate_grid: int | None = None
    kg_grid: int | None = None
    pes_grid: int | None = None
    seed: int = 0
    ei_noise_factor: str = "variance"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown acquisition kind {self.kind!r}")
        if not self.pi > 0:
            raise InvalidArgumentError("pi must be positive")
        if self.lam < 0:
            raise InvalidArgumentError("lambda must be >= 0")
        if self.kg_quadrature < 5:
            raise InvalidArgumentError("kg_quadrature must be >= 5")
        if self.pes_star_samples < 8:
            raise InvalidArgumentError("pes_star_samples must be >= 8")
        for name in ("candidate_grid", "kg_grid", "pes_grid"):
            v = getattr(self, name)
            if v is not None and v < 2:
                raise InvalidArgumentError(f"{name} must be >= 2")
        if self.ei_noise_factor not in ("variance", "literal"):
            raise InvalidArgumentError("ei_noise_factor: 'variance' or 'literal'")


@dataclass(frozen=True)
class Incumbent:
    """Best observed response and the improvement target, standardized."""

    y_star: float
    y_max: float
    y_target: float


def incumbent_of(model: FittedGP, lam: float = 0.1) -> Incumbent:
    y = model.y_std
    y_star = float(np.min(y))
    y_max = float(np.max(y))
    return Incumbent(y_star=y_star, y_max=y_max,
                     y_target=y_star - lam * (y_max - y_star))


def gaussian_entropy(s2):
    """Differential entropy 0.5 ln(2 pi e s2) of a normal with variance s2."""
    return 0.5 * np.log(2.0 * math.pi * math.e * np.asarray(s2, dtype=float))


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def _default_res(d: int, which: str) -> int:
    if which == "scan":
        return 1001 if d == 1 else 101
    if which == "kg":
        return 101 if d == 1 else (21 if d == 2 else 7)
    return 257 if d == 1 else (33 if d == 2 else 9)


def unit_grid(d: int, res: int) -> np.ndarray:
    """Lexicographically ordered product grid on [0,1]^d, endpoints included."""
    axes = [np.linspace(0.0, 1.0, res)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# ---------------------------------------------------------------------------
# batch cores
# ---------------------------------------------------------------------------

def _uc_batch(model, X, pi):
    mu, s2 = model.posterior_std_batch(X)
    return pi * np.sqrt(s2) - mu


def _pi_batch(model, X, inc):
    mu, s2 = model.posterior_std_batch(X)
    s = np.sqrt(s2)
    out = np.where(mu < inc.y_target, 1.0, 0.0)
    ok = s > 1e-12
    out[ok] = ndtr((inc.y_target - mu[ok]) / s[ok])
    return out


def _ei_batch(model, X, inc, mode="variance"):
    mu, s2 = model.posterior_std_batch(X)
    s = np.sqrt(s2)
    noise = model.noise_floor_std()
    out = np.zeros(len(s))
    ok = s > 1e-12
    u = (inc.y_star - mu[ok]) / s[ok]
    base = s[ok] * (u * ndtr(u) + _INV_SQRT_2PI * np.exp(-0.5 * u * u))
    if mode == "variance":
        factor = 1.0 - noise / s2[ok]
    else:
        factor = 1.0 - noise / s[ok]
    out[ok] = base * np.clip(factor, 0.0, 1.0)
    return out


class _KGState:
    """Per-call precomputation: candidate grid posterior and solves."""

    def __init__(self, model: FittedGP, spec: AcquisitionSpec):
        d = model.dataset.d
        res = spec.kg_grid if spec.kg_grid is not None else _default_res(d, "kg")
        self.grid = unit_grid(d, res)
        h = model.hyper
        Rc = backend.corr_cross(model.kernel.code, model.kernel.shape,
                                model.dataset.X, self.grid, h.omega)
        self.Q = solve_triangular(model.L, Rc, lower=True, check_finite=False)
        self.mu = h.beta[0] + Rc.T @ model._alpha
        self.mu_star = float(np.min(self.mu))
        t, w = hermgauss(spec.kg_quadrature)
        self.nodes = _SQRT2 * t
        self.weights = w * _INV_SQRT_PI


def _kg_batch(model, X, spec, state: _KGState):
    h = model.hyper
    code, shape = model.kernel.code, model.kernel.shape
    Rx = backend.corr_cross(code, shape, model.dataset.X, X, h.omega)
    qx = solve_triangular(model.L, Rx, lower=True, check_finite=False)
    vobs = h.sigma2 * (1.0 + h.tau - np.einsum("ij,ij->j", qx, qx))
    dead = vobs <= h.sigma2 * 1e-12
    vsafe = np.where(dead, h.sigma2, vobs)

    # cov(f at grid, noisy y at X) with trend held fixed
    cgx = h.sigma2 * (backend.corr_cross(code, shape, state.grid, X, h.omega)
                      - state.Q.T @ qx)
    a = cgx / np.sqrt(vsafe)[None, :]

    expectation = np.zeros(X.shape[0])
    buf = np.empty_like(a)
    for node, weight in zip(state.nodes, state.weights):
        np.multiply(a, node, out=buf)
        buf += state.mu[:, None]
        expectation += weight * buf.min(axis=0)
    out = state.mu_star - expectation
    out[dead] = 0.0
    return out


class _PESState:
    """Minimizer-location draws shared across a scan."""

    def __init__(self, model: FittedGP, spec: AcquisitionSpec):
        d = model.dataset.d
        res = spec.pes_grid if spec.pes_grid is not None else _default_res(d, "pes")
        grid = unit_grid(d, res)
        h = model.hyper
        code, shape = model.kernel.code, model.kernel.shape
        Rc = backend.corr_cross(code, shape, model.dataset.X, grid, h.omega)
        Q = solve_triangular(model.L, Rc, lower=True, check_finite=False)
        mu = h.beta[0] + Rc.T @ model._alpha
        latent = h.sigma2 * (backend.corr_matrix(code, shape, grid, h.omega)
                             - Q.T @ Q)
        Lg = None
        for jit in (1e-10, 1e-8, 1e-6, 1e-4):
            try:
                Lg = np.linalg.cholesky(
                    latent + jit * h.sigma2 * np.eye(len(grid)))
                break
            except np.linalg.LinAlgError:
                continue
        if Lg is None:
            raise AcquisitionFailureError("could not sample minimizer draws")
        rng = np.random.default_rng(spec.seed)
        z = rng.standard_normal((len(grid), spec.pes_star_samples))
        samples = mu[:, None] + Lg @ z
        idx = np.argmin(samples, axis=0)
        # hallucinated observation sites with multiplicity
        uniq, counts = np.unique(idx, return_counts=True)
        self.xstars = grid[uniq]
        self.weights = counts / counts.sum()
        self.qstars = Q[:, uniq]
        qq = np.einsum("ij,ij->j", self.qstars, self.qstars)
        self.vobs = h.sigma2 * (1.0 - qq + _PES_HALLUCINATION_NUGGET)


def _pes_batch(model, X, spec, state: _PESState):
    h = model.hyper
    code, shape = model.kernel.code, model.kernel.shape
    mu, s2 = model.posterior_std_batch(X)
    Rx = backend.corr_cross(code, shape, model.dataset.X, X, h.omega)
    qx = solve_triangular(model.L, Rx, lower=True, check_finite=False)
    # latent cross-covariance between f at X and f at each hallucination site
    cross = h.sigma2 * (backend.corr_cross(code, shape, X, state.xstars, h.omega)
                        - qx.T @ state.qstars)
    floor = h.sigma2 * 1e-15
    s2_f = np.maximum(s2, floor)
    s2_cond = s2[:, None] - cross * cross / state.vobs[None, :]
    s2_cond = np.maximum(s2_cond, floor)
    return 0.5 * (np.log(s2_f) - np.log(s2_cond) @ state.weights)


# ---------------------------------------------------------------------------
# public single-point operations
# ---------------------------------------------------------------------------

def _point(x, d):
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != d:
        raise InvalidArgumentError("point dimension mismatch")
    return x


def alpha_uc(model: FittedGP, x, pi: float = 5.0) -> float:
    """Exploration-weighted bound pi * s(x) - mu(x), to be maximized."""
    return float(_uc_batch(model, _point(x, model.dataset.d), pi)[0])


def alpha_pi(model: FittedGP, x, incumbent: Incumbent) -> float:
    """Probability the response at x beats the improvement target."""
    return float(_pi_batch(model, _point(x, model.dataset.d), incumbent)[0])


def alpha_ei(model: FittedGP, x, incumbent: Incumbent,
             noise_factor: str = "variance") -> float:
    """Expected improvement over the best observation, noise-discounted."""
    return float(_ei_batch(model, _point(x, model.dataset.d), incumbent,
                           noise_factor)[0])


def alpha_kg(model: FittedGP, x, spec: AcquisitionSpec) -> float:
    """Expected drop of the grid-minimum posterior mean after observing x."""
    state = _KGState(model, spec)
    return float(_kg_batch(model, _point(x, model.dataset.d), spec, state)[0])


def alpha_pes(model: FittedGP, x, spec: AcquisitionSpec) -> float:
    """Expected entropy reduction about the minimizer location."""
    state = _PESState(model, spec)
    return float(_pes_batch(model, _point(x, model.dataset.d), spec, state)[0])


def batch_evaluator(model: FittedGP, spec: AcquisitionSpec):
    """Vectorized alpha(X) with per-call state built once.

    The returned callable is deterministic: look-ahead state (quadrature,
    minimizer draws) is frozen here, so repeated evaluation replays
    identical values.
    """
    if spec.kind == "UC":
        return lambda X: _uc_batch(model, X, spec.pi)
    if spec.kind == "PI":
        inc = incumbent_of(model, spec.lam)
        return lambda X: _pi_batch(model, X, inc)
    if spec.kind == "EI":
        inc = incumbent_of(model, spec.lam)
        return lambda X: _ei_batch(model, X, inc, spec.ei_noise_factor)
    if spec.kind == "KG":
        kg_state = _KGState(model, spec)
        return lambda X: _kg_batch(model, X, spec, kg_state)
    pes_state = _PESState(model, spec)
    return lambda X: _pes_batch(model, X, spec, pes_state)


# ---------------------------------------------------------------------------
# maximizer
# ---------------------------------------------------------------------------

def _pattern_refine(f_batch, x0, val0, h0, tol=1e-6):
    """Steepest strictly-improving coordinate moves inside the unit cube."""
    x = x0.copy()
    best = val0
    h = h0
    d = len(x)
    while h > tol:
        cands = []
        for i in range(d):
            for s in (-h, h):
                t = x.copy()
                t[i] = min(max(t[i] + s, 0.0), 1.0)
                cands.append(t)
        vals = f_batch(np.array(cands))
        k = int(np.argmax(vals))
        if np.isfinite(vals[k]) and vals[k] > best:
            x = cands[k]
            best = float(vals[k])
        else:
            h *= 0.5
    return x, best


def maximize_acquisition(model: FittedGP, spec: AcquisitionSpec,
                         domain: BoxDomain | None = None) -> np.ndarray:
    """Argmax of the criterion over the unit cube.

    Dense lexicographic grid scan followed by pattern-search refinement;
    ties on the grid resolve to the lexicographically smallest point, and
    refinement only ever moves on strict improvement, so the returned
    value never falls below the grid maximum.
    """
    d = model.dataset.d
    if domain is not None:
        if (len(domain.lower) != d
                or any(v != 0.0 for v in domain.lower)
                or any(v != 1.0 for v in domain.upper)):
            raise InvalidArgumentError("maximizer expects the unit cube")
    res = (spec.candidate_grid if spec.candidate_grid is not None
           else _default_res(d, "scan"))
    grid = unit_grid(d, res)
    f_batch = batch_evaluator(model, spec)
    vals = np.asarray(f_batch(grid), dtype=float)
    vals[~np.isfinite(vals)] = -np.inf
    if not np.any(np.isfinite(vals)):
        raise AcquisitionFailureError(
            f"{spec.kind} produced no finite values on the scan grid")
    k = int(np.argmax(vals))
    x, _ = _pattern_refine(f_batch, grid[k], float(vals[k]), 1.0 / (res - 1))
    return x
