"""Sequential optimization loop: fit, acquire, observe, checkpoint.

One run spends a fixed observation budget on a problem: a replicated
Latin-hypercube start, then one acquisition-chosen sample per
iteration with the emulator refitted on everything seen so far. At
scheduled sample counts the run reports a recommendation and its true
regret against the cached global minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .acquisition import AcquisitionSpec, _default_res, maximize_acquisition, unit_grid
from .design import REPLICATE_CHOICES, expand_replicates, lhs_maximin
from .errors import (
    AcquisitionFailureError,
    DegenerateDataError,
    InvalidArgumentError,
    SingularCovarianceError,
)
from .gp import Dataset, FittedGP, SearchConfig, fit
from .kernels import KernelFamily
from .testbed import NoiseModel, ProblemInstance, eval_true, sample_observation

RECOMMENDATION_RULE = "posterior_mean_argmin_over_observed"


def checkpoint_schedule(budget: int) -> tuple:
    """Sample counts at which recommendations are scored.

    Half and three-quarter budget (half-up rounding) plus the full
    budget; duplicates collapse for tiny budgets.
    """
    half = math.floor(budget * 0.5 + 0.5)
    threeq = math.floor(budget * 0.75 + 0.5)
    return tuple(sorted({half, threeq, budget}))


@dataclass(frozen=True)
class RunConfig:
    """Everything one seeded run needs."""

    problem: ProblemInstance
    kernel: KernelFamily
    acquisition: AcquisitionSpec
    n_initial_unique: int
    replicates: int = 1
    noise: Optional[NoiseModel] = None
    budget: Optional[int] = None
    seed: int = 0
    design_restarts: int = 50

    def __post_init__(self):
        if self.budget is None:
            object.__setattr__(self, "budget", 50 * self.problem.dim)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidArgumentError("seed must be a non-negative integer")
        if self.replicates not in REPLICATE_CHOICES:
            raise InvalidArgumentError(
                f"replicates must be one of {REPLICATE_CHOICES}")
        if self.n_initial_unique < 2:
            raise InvalidArgumentError("need at least two initial sites")
        if self.budget < 4:
            raise InvalidArgumentError(
                "budget must leave a fittable model at every checkpoint")
        if self.initial_total > self.budget:
            raise InvalidArgumentError(
                f"initial design consumes {self.initial_total} of a "
                f"{self.budget}-sample budget")
        if self.noise is not None and self.noise.problem.id != self.problem.id:
            raise InvalidArgumentError(
                "noise model was calibrated for a different problem")

    @property
    def initial_total(self) -> int:
        return self.n_initial_unique * self.replicates


@dataclass(frozen=True)
class ObservationRecord:
    t: int
    x: tuple
    y: float
    source: str  # design | acquisition | fallback


@dataclass(frozen=True)
class CheckpointRecord:
    n_obs: int
    recommendation: tuple
    gap: float
    best_observed: tuple
    gap_best_observed: float


@dataclass
class Trace:
    """Complete account of one run, JSON-serializable via to_dict."""

    seed: int
    budget: int
    schedule: tuple
    recommendation_rule: str
    records: list
    checkpoints: list
    jitter_events: int
    acquisition_fallbacks: tuple
    final_loglik: Optional[float]
    failed: bool
    failure_reason: Optional[str]

    @property
    def consumed(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "budget": self.budget,
            "schedule": list(self.schedule),
            "recommendation_rule": self.recommendation_rule,
            "records": [
                {"t": r.t, "x": list(r.x), "y": r.y, "source": r.source}
                for r in self.records
            ],
            "checkpoints": [
                {
                    "n_obs": c.n_obs,
                    "recommendation": list(c.recommendation),
                    "gap": c.gap,
                    "best_observed": list(c.best_observed),
                    "gap_best_observed": c.gap_best_observed,
                }
                for c in self.checkpoints
            ],
            "jitter_events": self.jitter_events,
            "acquisition_fallbacks": list(self.acquisition_fallbacks),
            "final_loglik": self.final_loglik,
            "failed": self.failed,
            "failure_reason": self.failure_reason,
        }


def recommend(model: FittedGP, observed: Dataset) -> np.ndarray:
    """Observed location with the lowest posterior mean, in raw units.

    Deduplicated rows come back lexicographically sorted, so the
    first-occurrence argmin already breaks exact ties toward the
    lexicographically smallest point. Selecting on the mean rather
    than on noisy y keeps single lucky draws from winning.
    """
    Xu = np.unique(observed.X, axis=0)
    mu, _ = model.posterior_batch(Xu)
    return np.asarray(observed.domain.denormalize(Xu[int(np.argmin(mu))]))


def best_observed(observed: Dataset) -> np.ndarray:
    """Raw location of the smallest noisy response, lexicographic ties."""
    ties = np.flatnonzero(observed.y == observed.y.min())
    X = observed.X[ties]
    order = np.lexsort(X.T[::-1])
    return np.asarray(observed.domain.denormalize(X[order[0]]))


def gap(problem: ProblemInstance, recommendation) -> float:
    """True-function regret of a recommendation against the cached minimum."""
    return eval_true(problem, recommendation) - problem.f_min


def _max_variance_point(model: FittedGP, spec: AcquisitionSpec) -> np.ndarray:
    # Acquisition produced nothing usable; fall back to the most
    # uncertain grid point so the budget still buys information.
    d = model.dataset.d
    res = (spec.candidate_grid if spec.candidate_grid is not None
           else _default_res(d, "scan"))
    grid = unit_grid(d, res)
    _, s2 = model.posterior_std_batch(grid)
    return grid[int(np.argmax(s2))].copy()


def run_bo(config: RunConfig) -> Trace:
    """Execute one seeded run and return its trace.

    Fit failures that abort the run are captured in the trace (failed
    flag plus reason) rather than raised, so batch studies can count
    them. Identical configs produce byte-identical traces.
    """
    problem = config.problem
    domain = problem.domain
    d = problem.dim
    budget = config.budget
    schedule = checkpoint_schedule(budget)
    design_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    obs_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    search = SearchConfig(seed=config.seed)

    unit_pts = lhs_maximin(config.n_initial_unique, d, design_rng,
                           restarts=config.design_restarts)
    plan = expand_replicates(unit_pts, config.replicates)

    records: list = []
    X_unit: list = []
    ys: list = []

    def observe(x_unit, source: str) -> None:
        x_raw = np.asarray(domain.denormalize(x_unit), dtype=float).ravel()
        if config.noise is None:
            y = eval_true(problem, x_raw)
        else:
            y = sample_observation(problem, config.noise, x_raw, obs_rng)
        X_unit.append(np.asarray(x_unit, dtype=float).ravel())
        ys.append(float(y))
        records.append(ObservationRecord(
            t=len(ys), x=tuple(float(v) for v in x_raw), y=float(y),
            source=source))

    for row in plan:
        observe(row, "design")

    checkpoints: list = []
    fallbacks: list = []
    jitter_events = 0
    final_loglik: Optional[float] = None
    remaining = set(schedule)

    def fit_prefix(nrows: int):
        ds = Dataset(domain, np.array(X_unit[:nrows]), np.array(ys[:nrows]))
        return fit(ds, config.kernel, search), ds

    def record_checkpoint(model: FittedGP, ds: Dataset) -> None:
        rec = recommend(model, ds)
        bo = best_observed(ds)
        checkpoints.append(CheckpointRecord(
            n_obs=ds.n,
            recommendation=tuple(float(v) for v in rec),
            gap=gap(problem, rec),
            best_observed=tuple(float(v) for v in bo),
            gap_best_observed=gap(problem, bo)))
        remaining.discard(ds.n)

    def finish(failed: bool = False, reason: Optional[str] = None) -> Trace:
        return Trace(
            seed=config.seed, budget=budget, schedule=schedule,
            recommendation_rule=RECOMMENDATION_RULE,
            records=records, checkpoints=checkpoints,
            jitter_events=jitter_events,
            acquisition_fallbacks=tuple(fallbacks),
            final_loglik=final_loglik, failed=failed, failure_reason=reason)

    try:
        # Checkpoints the initial batch already overshot are scored on
        # prefix fits, honoring the observation order.
        for c in schedule:
            if c < len(ys):
                model_c, ds_c = fit_prefix(c)
                if model_c.jitter > 0.0:
                    jitter_events += 1
                record_checkpoint(model_c, ds_c)
        while True:
            model, ds = fit_prefix(len(ys))
            if model.jitter > 0.0:
                jitter_events += 1
            final_loglik = float(model.loglik)
            if ds.n in remaining:
                record_checkpoint(model, ds)
            if ds.n >= budget:
                break
            acq_seed = int(np.random.SeedSequence(
                [config.seed, 2, ds.n]).generate_state(1)[0])
            spec_t = replace(config.acquisition, seed=acq_seed)
            try:
                x_new = maximize_acquisition(model, spec_t)
                source = "acquisition"
            except AcquisitionFailureError:
                x_new = _max_variance_point(model, spec_t)
                fallbacks.append(len(ys) + 1)
                source = "fallback"
            observe(x_new, source)
    except (SingularCovarianceError, DegenerateDataError) as exc:
        return finish(failed=True,
                      reason=f"{type(exc).__name__}: {exc}")
    return finish()
