"""Analytic test problems with calibrated Gaussian noise.

Three noiseless surfaces on box domains, plus a noise generator whose
standard deviation is tied to the surface itself: the heteroscedastic
forms solve (f + b) * a = variance so that the s.d. runs from
0.25 * m * delta_f at one extremum to 1.6 * m * delta_f at the other.
The "Good" form is quietest near the global minimum, "Bad" is loudest
there, and "Constant" holds m * delta_f everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .gp import BoxDomain

NOISE_FORMS = ("Constant", "Good", "Bad")
MAGNITUDES = (0.01, 0.05, 0.20)

_SD_AT_BEST = 0.25
_SD_AT_WORST = 1.6
_DOMAIN_SLACK = 1e-9


def _f1(X):
    x = X[:, 0]
    return (3.0 * x - 2.0) ** 2 * np.sin(12.0 * x - 4.0)


def _f2(X):
    # Rescaled Branin on the unit square.
    xb = 15.0 * X[:, 0] - 5.0
    yb = 15.0 * X[:, 1]
    quad = yb - 5.1 * xb ** 2 / (4.0 * math.pi ** 2) + 5.0 * xb / math.pi - 6.0
    cosine = (10.0 - 10.0 / (8.0 * math.pi)) * np.cos(xb)
    return (quad ** 2 + cosine - 44.81) / 51.95


def _f3(X):
    # Six-hump camel.
    x, y = X[:, 0], X[:, 1]
    return ((4.0 - 2.1 * x ** 2 + x ** 4 / 3.0) * x ** 2
            + x * y
            + (-4.0 + 4.0 * y ** 2) * y ** 2)


@dataclass(frozen=True)
class ProblemInstance:
    """One noiseless surface with cached extrema.

    ``fn`` evaluates a whole (n, d) array of raw points without any
    domain checking; ``eval_true`` is the checked scalar entry point.
    """

    id: str
    dim: int
    domain: BoxDomain
    x_min: tuple
    x_max: tuple
    f_min: float
    f_max: float
    fn: Callable = field(repr=False, compare=False)

    @property
    def delta_f(self) -> float:
        return self.f_max - self.f_min


# Extrema frozen from a 10^6-point grid scan plus pattern refinement
# (see tests/reference.py); full precision so noise calibration is exact.
_PROBLEMS = {
    "f1": ProblemInstance(
        id="f1",
        dim=1,
        domain=BoxDomain((0.0,), (1.0,)),
        x_min=(0.17518837343056093,),
        x_max=(0.0,),
        f_min=-2.0588002985763247,
        f_max=3.0272099812317128,
        fn=_f1,
    ),
    "f2": ProblemInstance(
        id="f2",
        dim=2,
        domain=BoxDomain((0.0, 0.0), (1.0, 1.0)),
        x_min=(0.12389381845911465, 0.81833334799643354),
        x_max=(0.0, 0.0),
        f_min=-1.0473938910927862,
        f_max=4.8762097403581643,
        fn=_f2,
    ),
    "f3": ProblemInstance(
        id="f3",
        dim=2,
        domain=BoxDomain((-2.0, -1.0), (2.0, 1.0)),
        x_min=(-0.08984201257531943, 0.71265640487900017),
        x_max=(-2.0, -1.0),
        f_min=-1.0316284534898776,
        f_max=5.7333333333333307,
        fn=_f3,
    ),
}


def problem_ids() -> tuple:
    return tuple(_PROBLEMS)


def get_problem(problem_id: str) -> ProblemInstance:
    try:
        return _PROBLEMS[problem_id]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown problem {problem_id!r}; expected one of {tuple(_PROBLEMS)}"
        ) from None


def _as_point(problem: ProblemInstance, x) -> np.ndarray:
    pt = np.asarray(x, dtype=float).ravel()
    if pt.shape != (problem.dim,):
        raise InvalidArgumentError(
            f"{problem.id} expects a point of dimension {problem.dim}"
        )
    lo = np.asarray(problem.domain.lower)
    hi = np.asarray(problem.domain.upper)
    inside = (pt >= lo - _DOMAIN_SLACK) & (pt <= hi + _DOMAIN_SLACK)
    if not np.all(inside):
        raise DomainError(f"point {pt.tolist()} is outside the {problem.id} domain")
    return np.clip(pt, lo, hi)


def eval_true(problem: ProblemInstance, x) -> float:
    """Noiseless objective value at a single admissible point."""
    pt = _as_point(problem, x)
    return float(problem.fn(pt[None, :])[0])


@dataclass(frozen=True)
class NoiseModel:
    """Calibrated Gaussian noise for one problem.

    Heteroscedastic variance is (g(x) + b) * a where g is the surface
    itself (Good) or its reflection f_max + f_min - f (Bad); the
    Constant form stores the fixed variance in ``a`` and ignores ``b``.
    """

    form: str
    magnitude: float
    a: float
    b: float
    problem: ProblemInstance = field(repr=False)

    def variance(self, X) -> np.ndarray:
        """Noise variance at each row of an (n, d) raw-coordinate array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.form == "Constant":
            return np.full(X.shape[0], self.a)
        vals = self.problem.fn(X)
        if self.form == "Bad":
            vals = self.problem.f_max + self.problem.f_min - vals
        return (vals + self.b) * self.a

    def sd(self, x) -> float:
        """Noise standard deviation at a single admissible point."""
        pt = _as_point(self.problem, x)
        return math.sqrt(float(self.variance(pt[None, :])[0]))


def calibrate_noise(problem: ProblemInstance, form: str, magnitude: float) -> NoiseModel:
    """Solve for (a, b) hitting both target s.d. endpoints exactly.

    Good:  a (f_min + b) = (0.25 m delta_f)^2 and
           a (f_max + b) = (1.6 m delta_f)^2.
    Bad reuses the same (a, b) on the reflected surface, which swaps
    which extremum is quiet. Constant bypasses the solve.
    """
    if not isinstance(magnitude, (int, float)) or not math.isfinite(magnitude):
        raise InvalidArgumentError("noise magnitude must be a finite number")
    if magnitude <= 0.0:
        raise InvalidArgumentError("noise magnitude must be positive")
    if form not in NOISE_FORMS:
        raise InvalidArgumentError(
            f"unknown noise form {form!r}; expected one of {NOISE_FORMS}"
        )
    m = float(magnitude)
    df = problem.delta_f
    if form == "Constant":
        return NoiseModel(form=form, magnitude=m, a=(m * df) ** 2, b=0.0,
                          problem=problem)
    # Subtracting the two endpoint equations eliminates b.
    a = (_SD_AT_WORST ** 2 - _SD_AT_BEST ** 2) * m ** 2 * df
    b = (_SD_AT_BEST * m * df) ** 2 / a - problem.f_min
    return NoiseModel(form=form, magnitude=m, a=a, b=b, problem=problem)


def sample_observation(problem: ProblemInstance, noise: NoiseModel, x,
                       rng: np.random.Generator) -> float:
    """One noisy draw y = f(x) + sd(x) * z, z from the given stream."""
    if noise.problem.id != problem.id:
        raise InvalidArgumentError(
            f"noise model was calibrated for {noise.problem.id}, not {problem.id}"
        )
    pt = _as_point(problem, x)
    mean = float(problem.fn(pt[None, :])[0])
    sd = math.sqrt(float(noise.variance(pt[None, :])[0]))
    return mean + sd * float(rng.standard_normal())
