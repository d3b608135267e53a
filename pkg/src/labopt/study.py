"""Full-factorial study runner and effect aggregations.

Seven factors cross into 3645 cells; each cell runs with several
repeats under stable per-run seeds, results land in a JSON-lines file
that can be resumed after interruption, and the aggregations reduce
the rows to main-effect and interaction tables of mean regret.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from .acquisition import AcquisitionSpec
from .kernels import KernelFamily
from .loop import RunConfig, run_bo
from .errors import InvalidArgumentError
from .testbed import MAGNITUDES, calibrate_noise, get_problem

SCHEMA_VERSION = 1
DEFAULT_REPEATS = 5
DEFAULT_BUDGET_FACTOR = 50

CONTROLLABLE_FACTORS = ("replicates", "init_samples", "acquisition", "covariance")
NOISE_FACTORS = ("problem", "magnitude", "form")
FACTOR_ORDER = CONTROLLABLE_FACTORS + NOISE_FACTORS

FULL_LEVELS = {
    "replicates": (1, 2, 3),
    "init_samples": (2, 5, 10),
    "acquisition": ("UC", "PI", "EI", "KG", "PES"),
    "covariance": ("Gaussian", "Power", "Matern"),
    "problem": ("f1", "f2", "f3"),
    "magnitude": MAGNITUDES,
    "form": ("Constant", "Bad", "Good"),
}

CHECKPOINT_LABELS = ("25d", "37.5d", "50d")

_KERNELS = {
    "Gaussian": KernelFamily("SquaredExponential"),
    "Power": KernelFamily("PowerExponential"),
    "Matern": KernelFamily("Matern"),
}


@dataclass(frozen=True)
class FactorTable:
    """Levels to cross; defaults reproduce the full 3645-cell table."""

    replicates: tuple = FULL_LEVELS["replicates"]
    init_samples: tuple = FULL_LEVELS["init_samples"]
    acquisition: tuple = FULL_LEVELS["acquisition"]
    covariance: tuple = FULL_LEVELS["covariance"]
    problem: tuple = FULL_LEVELS["problem"]
    magnitude: tuple = FULL_LEVELS["magnitude"]
    form: tuple = FULL_LEVELS["form"]

    def __post_init__(self):
        for name in FACTOR_ORDER:
            levels = tuple(getattr(self, name))
            if not levels:
                raise InvalidArgumentError(f"factor {name} has no levels")
            bad = [v for v in levels if v not in FULL_LEVELS[name]]
            if bad:
                raise InvalidArgumentError(
                    f"factor {name} has unknown levels {bad}; "
                    f"allowed: {FULL_LEVELS[name]}")
            if len(set(levels)) != len(levels):
                raise InvalidArgumentError(f"factor {name} repeats a level")
            object.__setattr__(self, name, levels)

    @classmethod
    def from_dict(cls, spec: dict) -> "FactorTable":
        unknown = set(spec) - set(FACTOR_ORDER)
        if unknown:
            raise InvalidArgumentError(f"unknown factors {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in spec.items()})

    def to_dict(self) -> dict:
        return {name: list(getattr(self, name)) for name in FACTOR_ORDER}


@dataclass(frozen=True)
class StudyConfig:
    """One cell of the factor table."""

    replicates: int
    init_samples: int
    acquisition: str
    covariance: str
    problem: str
    magnitude: float
    form: str

    def factors(self) -> dict:
        return {name: getattr(self, name) for name in FACTOR_ORDER}


def enumerate_configs(table: FactorTable = FactorTable()) -> list:
    """All cells in lexicographic factor order, deterministic."""
    level_lists = [getattr(table, name) for name in FACTOR_ORDER]
    return [StudyConfig(*combo) for combo in itertools.product(*level_lists)]


def config_id(config: StudyConfig) -> str:
    """Stable short hash of the factor levels."""
    canon = json.dumps(config.factors(), sort_keys=True,
                       separators=(",", ":"))
    return hashlib.sha1(canon.encode()).hexdigest()[:12]


def run_seed(master_seed: int, cid: str, repeat: int) -> int:
    """Per-run seed: stable digest of (master seed, cell, repeat)."""
    digest = hashlib.sha256(f"{master_seed}|{cid}|{repeat}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def build_run_config(config: StudyConfig, seed: int,
                     budget_factor: int = DEFAULT_BUDGET_FACTOR) -> RunConfig:
    """Translate one cell into a runnable configuration."""
    problem = get_problem(config.problem)
    noise = calibrate_noise(problem, config.form, config.magnitude)
    return RunConfig(
        problem=problem,
        kernel=_KERNELS[config.covariance],
        acquisition=AcquisitionSpec(kind=config.acquisition),
        n_initial_unique=config.init_samples * problem.dim,
        replicates=config.replicates,
        noise=noise,
        budget=budget_factor * problem.dim,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def _execute_run(config: StudyConfig, repeat: int, master_seed: int,
                 budget_factor: int) -> dict:
    cid = config_id(config)
    seed = run_seed(master_seed, cid, repeat)
    started = time.perf_counter()
    try:
        trace = run_bo(build_run_config(config, seed, budget_factor))
        by_n = {c.n_obs: c for c in trace.checkpoints}
        gaps = [by_n[c].gap if c in by_n else None for c in trace.schedule]
        gaps_bo = [by_n[c].gap_best_observed if c in by_n else None
                   for c in trace.schedule]
        row = {
            "schema": SCHEMA_VERSION,
            "config_id": cid,
            "repeat": repeat,
            "seed": seed,
            "factors": config.factors(),
            "budget": trace.budget,
            "checkpoints": list(trace.schedule),
            "gap": gaps,
            "gap_best_observed": gaps_bo,
            "failed": trace.failed,
            "failure_reason": trace.failure_reason,
        }
    except Exception as exc:  # a worker must always deliver a row
        row = {
            "schema": SCHEMA_VERSION,
            "config_id": cid,
            "repeat": repeat,
            "seed": seed,
            "factors": config.factors(),
            "budget": None,
            "checkpoints": [],
            "gap": [None, None, None],
            "gap_best_observed": [None, None, None],
            "failed": True,
            "failure_reason": f"{type(exc).__name__}: {exc}",
        }
    row["wall_time_s"] = time.perf_counter() - started
    return row


def canonical_row(row: dict) -> dict:
    """Row content minus timing, for determinism comparisons."""
    return {k: v for k, v in row.items() if k != "wall_time_s"}


def read_results(path) -> list:
    """Parse a JSON-lines results file; a torn final line is dropped."""
    path = Path(path)
    if not path.exists():
        return []
    rows = []
    lines = path.read_text().splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break  # interrupted append; resume will redo this run
            raise
        if row.get("schema") != SCHEMA_VERSION:
            raise InvalidArgumentError(
                f"results file {path} has schema {row.get('schema')!r}, "
                f"expected {SCHEMA_VERSION}")
        rows.append(row)
    return rows


def plan_runs(configs, repeats: int) -> list:
    """The (config, repeat) grid, repeats numbered from 1."""
    if repeats < 1:
        raise InvalidArgumentError("repeats must be at least 1")
    return [(config, r) for config in configs
            for r in range(1, repeats + 1)]


def run_study(configs, repeats: int, out, master_seed: int = 0,
              parallelism: int = 1,
              budget_factor: int = DEFAULT_BUDGET_FACTOR,
              progress=None) -> tuple:
    """Execute the plan, appending one JSON line per finished run.

    Rows already present in the output file are not rerun, so an
    interrupted study resumes by calling this again. Returns
    (n_new, n_total_rows).
    """
    out = Path(out)
    done = {(r["config_id"], r["repeat"]) for r in read_results(out)}
    todo = [(c, r) for c, r in plan_runs(configs, repeats)
            if (config_id(c), r) not in done]
    n_new = 0
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("a") as sink:

        def emit(row: dict) -> None:
            nonlocal n_new
            sink.write(json.dumps(row, sort_keys=True) + "\n")
            sink.flush()
            n_new += 1
            if progress is not None:
                progress(n_new, len(todo), row)

        if parallelism <= 1:
            for config, repeat in todo:
                emit(_execute_run(config, repeat, master_seed, budget_factor))
        else:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                futures = [
                    pool.submit(_execute_run, config, repeat, master_seed,
                                budget_factor)
                    for config, repeat in todo
                ]
                for future in as_completed(futures):
                    emit(future.result())
    return n_new, len(done) + n_new


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def checkpoint_index(label: str) -> int:
    if label not in CHECKPOINT_LABELS:
        raise InvalidArgumentError(
            f"unknown checkpoint {label!r}; expected one of {CHECKPOINT_LABELS}")
    return CHECKPOINT_LABELS.index(label)


def _row_gap(row: dict, index: int):
    if row.get("failed"):
        return None
    gaps = row.get("gap") or []
    if index >= len(gaps):
        return None
    return gaps[index]


def main_effects(rows, index: int, table: FactorTable = FactorTable()) -> dict:
    """Mean GAP per factor level at one checkpoint.

    Failed rows are excluded from every mean but counted per level.
    Levels with no usable rows report a null mean, never zero.
    """
    out = {"checkpoint": CHECKPOINT_LABELS[index], "index": index, "factors": {}}
    for name in FACTOR_ORDER:
        levels = getattr(table, name)
        means, counts, failures = [], [], []
        for level in levels:
            total, n, n_failed = 0.0, 0, 0
            for row in rows:
                if row["factors"].get(name) != level:
                    continue
                if row.get("failed"):
                    n_failed += 1
                    continue
                g = _row_gap(row, index)
                if g is None:
                    continue
                total += g
                n += 1
            means.append(total / n if n else None)
            counts.append(n)
            failures.append(n_failed)
        out["factors"][name] = {
            "levels": list(levels),
            "mean_gap": means,
            "n": counts,
            "n_failed": failures,
        }
    return out


def interaction_table(rows, index: int,
                      table: FactorTable = FactorTable()) -> dict:
    """Controllable-by-noise cross-tab of mean GAP at one checkpoint.

    Within each (controllable factor, noise level) column the best
    (lowest-mean) controllable level is marked, mirroring how the
    cross-tab is usually read.
    """
    cells = []
    for noise_name in NOISE_FACTORS:
        for noise_level in getattr(table, noise_name):
            for ctrl_name in CONTROLLABLE_FACTORS:
                group = []
                for ctrl_level in getattr(table, ctrl_name):
                    total, n = 0.0, 0
                    for row in rows:
                        f = row["factors"]
                        if f.get(noise_name) != noise_level:
                            continue
                        if f.get(ctrl_name) != ctrl_level:
                            continue
                        g = _row_gap(row, index)
                        if g is None:
                            continue
                        total += g
                        n += 1
                    group.append({
                        "noise_factor": noise_name,
                        "noise_level": noise_level,
                        "controllable_factor": ctrl_name,
                        "controllable_level": ctrl_level,
                        "mean_gap": total / n if n else None,
                        "n": n,
                        "best": False,
                    })
                defined = [c["mean_gap"] for c in group
                           if c["mean_gap"] is not None]
                if defined:
                    lowest = min(defined)
                    for cell in group:
                        if cell["mean_gap"] == lowest:
                            cell["best"] = True
                cells.extend(group)
    return {"checkpoint": CHECKPOINT_LABELS[index], "index": index,
            "cells": cells}


def effects_to_csv(effects: dict) -> str:
    lines = ["factor,level,mean_gap,n,n_failed"]
    for name, block in effects["factors"].items():
        for level, mean, n, n_failed in zip(block["levels"],
                                            block["mean_gap"],
                                            block["n"], block["n_failed"]):
            mean_s = "" if mean is None else repr(mean)
            lines.append(f"{name},{level},{mean_s},{n},{n_failed}")
    return "\n".join(lines) + "\n"


def interactions_to_csv(table: dict) -> str:
    lines = ["noise_factor,noise_level,controllable_factor,"
             "controllable_level,mean_gap,n,best"]
    for c in table["cells"]:
        mean_s = "" if c["mean_gap"] is None else repr(c["mean_gap"])
        lines.append(
            f"{c['noise_factor']},{c['noise_level']},"
            f"{c['controllable_factor']},{c['controllable_level']},"
            f"{mean_s},{c['n']},{str(c['best']).lower()}")
    return "\n".join(lines) + "\n"
