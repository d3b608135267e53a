"""Initial designs: maximin Latin hypercubes with replicate expansion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InvalidArgumentError

REPLICATE_CHOICES = (1, 2, 3)


def _lhs_once(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    # One point per equal-width stratum in every dimension, jittered
    # uniformly inside its stratum.
    cols = [(rng.permutation(n) + rng.random(n)) / n for _ in range(d)]
    return np.column_stack(cols)


def lhs_maximin(n: int, d: int, rng: np.random.Generator,
                restarts: int = 50) -> np.ndarray:
    """Best-of-restarts Latin hypercube maximizing min pairwise distance.

    Every candidate is a proper LHS, so stratification is exact no
    matter which restart wins. Deterministic for a given generator
    state.
    """
    if n < 1:
        raise InvalidArgumentError("need at least one design point")
    if d < 1:
        raise InvalidArgumentError("need at least one dimension")
    if restarts < 1:
        raise InvalidArgumentError("need at least one restart")
    best = None
    best_dist = -np.inf
    for _ in range(restarts):
        cand = _lhs_once(n, d, rng)
        dist = float(pdist(cand).min()) if n > 1 else np.inf
        if dist > best_dist:
            best, best_dist = cand, dist
    return best


def expand_replicates(points, r: int) -> np.ndarray:
    """Repeat each design row r times, replicates grouped together."""
    if r not in REPLICATE_CHOICES:
        raise InvalidArgumentError(
            f"replicates must be one of {REPLICATE_CHOICES}, got {r!r}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.repeat(points, r, axis=0)


@dataclass(frozen=True)
class InitialDesign:
    """A replicated LHS start: n_unique distinct sites visited r times."""

    n_unique: int
    replicates: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.replicates not in REPLICATE_CHOICES:
            raise InvalidArgumentError(
                f"replicates must be one of {REPLICATE_CHOICES}")
        if pts.shape[0] != self.n_unique or self.n_unique < 1:
            raise InvalidArgumentError("points must have n_unique rows")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise InvalidArgumentError("design points must lie in the unit cube")
        object.__setattr__(self, "points", pts)

    @property
    def total(self) -> int:
        return self.n_unique * self.replicates

    def expanded(self) -> np.ndarray:
        return expand_replicates(self.points, self.replicates)


def build_design(n_unique: int, d: int, replicates: int,
                 rng: np.random.Generator, restarts: int = 50) -> InitialDesign:
    points = lhs_maximin(n_unique, d, rng, restarts=restarts)
    return InitialDesign(n_unique=n_unique, replicates=replicates, points=points)
