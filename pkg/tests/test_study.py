"""Factorial enumeration, execution, and effect aggregation."""

import json

import numpy as np
import pytest

import labopt.study as study_mod
from labopt.errors import InvalidArgumentError
from labopt.study import (
    CHECKPOINT_LABELS,
    FACTOR_ORDER,
    FULL_LEVELS,
    FactorTable,
    StudyConfig,
    build_run_config,
    canonical_row,
    checkpoint_index,
    config_id,
    effects_to_csv,
    enumerate_configs,
    interaction_table,
    interactions_to_csv,
    main_effects,
    plan_runs,
    read_results,
    run_seed,
    run_study,
)

SMOKE_TABLE = FactorTable(
    replicates=(1,),
    init_samples=(2, 5),
    acquisition=("UC",),
    covariance=("Gaussian",),
    problem=("f1",),
    magnitude=(0.05,),
    form=("Constant",),
)


def _fixture_row(factors, gaps, failed=False, repeat=1):
    merged = {
        "replicates": 1, "init_samples": 2, "acquisition": "UC",
        "covariance": "Gaussian", "problem": "f1", "magnitude": 0.05,
        "form": "Constant",
    }
    merged.update(factors)
    return {
        "schema": 1,
        "config_id": config_id(StudyConfig(**merged)),
        "repeat": repeat,
        "seed": 0,
        "factors": merged,
        "budget": 50,
        "checkpoints": [25, 38, 50],
        "gap": list(gaps),
        "gap_best_observed": list(gaps),
        "failed": failed,
        "failure_reason": "synthetic" if failed else None,
        "wall_time_s": 0.0,
    }


def test_full_table_enumeration_counts():
    configs = enumerate_configs(FactorTable())
    assert len(configs) == 3645
    assert len({config_id(c) for c in configs}) == 3645
    assert len(plan_runs(configs, 5)) == 18225


def test_restricting_one_factor_scales_count():
    configs = enumerate_configs(FactorTable(acquisition=("EI",)))
    assert len(configs) == 729


def test_enumeration_order_is_lexicographic_and_stable():
    configs = enumerate_configs(FactorTable())
    first = configs[0]
    assert first == StudyConfig(1, 2, "UC", "Gaussian", "f1", 0.01, "Constant")
    # the last factor (form) cycles fastest
    assert configs[1].form == "Bad"
    assert configs[2].form == "Good"
    assert configs[3].magnitude == 0.05
    assert enumerate_configs(FactorTable()) == configs


def test_factor_table_validation():
    with pytest.raises(InvalidArgumentError):
        FactorTable(acquisition=())
    with pytest.raises(InvalidArgumentError):
        FactorTable(acquisition=("EI", "EI"))
    with pytest.raises(InvalidArgumentError):
        FactorTable(problem=("f4",))
    with pytest.raises(InvalidArgumentError):
        FactorTable.from_dict({"colour": ["red"]})
    assert FactorTable.from_dict({"acquisition": ["EI", "KG"]}).acquisition \
        == ("EI", "KG")


def test_config_ids_are_stable_short_hashes():
    c = StudyConfig(2, 5, "EI", "Matern", "f3", 0.20, "Good")
    cid = config_id(c)
    assert len(cid) == 12
    assert cid == config_id(StudyConfig(2, 5, "EI", "Matern", "f3", 0.20, "Good"))
    assert cid != config_id(StudyConfig(2, 5, "EI", "Matern", "f3", 0.20, "Bad"))


def test_run_seeds_distinct_across_full_plan():
    configs = enumerate_configs(FactorTable())
    seeds = {run_seed(0, config_id(c), r)
             for c in configs for r in range(1, 6)}
    assert len(seeds) == 18225


def test_build_run_config_respects_problem_dimension():
    c = StudyConfig(2, 5, "EI", "Matern", "f3", 0.05, "Good")
    rc = build_run_config(c, seed=9)
    assert rc.budget == 100
    assert rc.n_initial_unique == 10
    assert rc.replicates == 2
    assert rc.noise.form == "Good"
    assert rc.kernel.is_free
    rc1 = build_run_config(StudyConfig(1, 2, "UC", "Gaussian", "f1", 0.05,
                                       "Constant"), seed=1)
    assert rc1.budget == 50


def test_smoke_study_runs_and_resumes(tmp_path):
    out = tmp_path / "results.jsonl"
    configs = enumerate_configs(SMOKE_TABLE)
    assert len(configs) == 2
    n_new, n_total = run_study(configs, repeats=2, out=out, master_seed=3,
                               parallelism=1, budget_factor=8)
    assert (n_new, n_total) == (4, 4)
    rows = read_results(out)
    assert len(rows) == 4
    assert {(r["config_id"], r["repeat"]) for r in rows} \
        == {(config_id(c), r) for c in configs for r in (1, 2)}
    for row in rows:
        assert not row["failed"]
        assert len(row["gap"]) == len(row["checkpoints"])
        assert all(np.isfinite(g) for g in row["gap"])
        assert row["budget"] == 8

    # Resume over a complete file schedules nothing.
    n_new2, n_total2 = run_study(configs, repeats=2, out=out, master_seed=3,
                                 parallelism=1, budget_factor=8)
    assert (n_new2, n_total2) == (0, 4)
    assert len(read_results(out)) == 4


def test_parallel_and_serial_rows_agree(tmp_path):
    configs = enumerate_configs(SMOKE_TABLE)
    serial = tmp_path / "serial.jsonl"
    parallel = tmp_path / "parallel.jsonl"
    run_study(configs, repeats=1, out=serial, master_seed=5, parallelism=1,
              budget_factor=8)
    run_study(configs, repeats=1, out=parallel, master_seed=5, parallelism=2,
              budget_factor=8)
    key = lambda r: (r["config_id"], r["repeat"])
    a = sorted((canonical_row(r) for r in read_results(serial)), key=key)
    b = sorted((canonical_row(r) for r in read_results(parallel)), key=key)
    assert a == b


def test_torn_final_line_is_dropped(tmp_path):
    out = tmp_path / "res.jsonl"
    row = _fixture_row({}, [0.5, 0.4, 0.3])
    out.write_text(json.dumps(row) + "\n" + '{"schema": 1, "config_id": "tr')
    rows = read_results(out)
    assert len(rows) == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"broken\n' + json.dumps(row) + "\n")
    with pytest.raises(json.JSONDecodeError):
        read_results(bad)


def test_wrong_schema_rejected(tmp_path):
    out = tmp_path / "res.jsonl"
    row = _fixture_row({}, [0.1, 0.1, 0.1])
    row["schema"] = 99
    out.write_text(json.dumps(row) + "\n")
    with pytest.raises(InvalidArgumentError):
        read_results(out)


def test_worker_exceptions_recorded_not_fatal(tmp_path, monkeypatch):
    def explode(config):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(study_mod, "run_bo", explode)
    out = tmp_path / "res.jsonl"
    configs = enumerate_configs(SMOKE_TABLE)[:1]
    n_new, _ = run_study(configs, repeats=1, out=out, parallelism=1,
                         budget_factor=8)
    assert n_new == 1
    row = read_results(out)[0]
    assert row["failed"]
    assert "synthetic failure" in row["failure_reason"]
    assert row["gap"] == [None, None, None]


def test_checkpoint_labels():
    assert [checkpoint_index(c) for c in CHECKPOINT_LABELS] == [0, 1, 2]
    with pytest.raises(InvalidArgumentError):
        checkpoint_index("60d")


def test_main_effects_recover_constructed_means():
    # GAP equals the replicate level, so each mean must equal its level.
    rows = []
    for level in (1, 2, 3):
        for rep in range(4):
            rows.append(_fixture_row({"replicates": level},
                                     [level, level, level], repeat=rep + 1))
    effects = main_effects(rows, 2)
    block = effects["factors"]["replicates"]
    assert block["levels"] == [1, 2, 3]
    assert block["mean_gap"] == [1.0, 2.0, 3.0]
    assert block["n"] == [4, 4, 4]
    assert block["n_failed"] == [0, 0, 0]


def test_main_effects_match_streaming_oracle():
    rng = np.random.default_rng(8)
    rows = []
    for acq in FULL_LEVELS["acquisition"]:
        for rep in range(3):
            rows.append(_fixture_row({"acquisition": acq},
                                     list(rng.random(3)), repeat=rep + 1))
    effects = main_effects(rows, 1)
    block = effects["factors"]["acquisition"]
    for level, mean in zip(block["levels"], block["mean_gap"]):
        manual = [r["gap"][1] for r in rows
                  if r["factors"]["acquisition"] == level]
        assert mean == pytest.approx(sum(manual) / len(manual), abs=1e-12)


def test_main_effects_empty_level_is_missing_and_failures_excluded():
    rows = [
        _fixture_row({"form": "Good"}, [0.2, 0.2, 0.2]),
        _fixture_row({"form": "Good"}, [0.4, 0.4, 0.4], repeat=2),
        _fixture_row({"form": "Bad"}, [9.9, 9.9, 9.9], failed=True),
    ]
    block = main_effects(rows, 0)["factors"]["form"]
    means = dict(zip(block["levels"], block["mean_gap"]))
    counts = dict(zip(block["levels"], block["n"]))
    failed = dict(zip(block["levels"], block["n_failed"]))
    assert means["Good"] == pytest.approx(0.3)
    assert means["Bad"] is None and counts["Bad"] == 0 and failed["Bad"] == 1
    assert means["Constant"] is None and counts["Constant"] == 0


def test_interaction_cells_match_filtered_main_effects():
    rng = np.random.default_rng(21)
    rows = []
    for acq in ("UC", "PI"):
        for mag in (0.01, 0.20):
            for rep in range(3):
                rows.append(_fixture_row(
                    {"acquisition": acq, "magnitude": mag},
                    list(rng.random(3)), repeat=rep + 1))
    table = interaction_table(rows, 2)
    for cell in table["cells"]:
        if cell["n"] == 0:
            assert cell["mean_gap"] is None
            continue
        subset = [r for r in rows
                  if r["factors"][cell["noise_factor"]] == cell["noise_level"]]
        sub_effects = main_effects(subset, 2)
        block = sub_effects["factors"][cell["controllable_factor"]]
        idx = block["levels"].index(cell["controllable_level"])
        assert cell["mean_gap"] == pytest.approx(block["mean_gap"][idx],
                                                 abs=1e-12)


def test_additive_fixture_has_constant_argmin():
    # GAP = a(acquisition) + b(magnitude): no interaction, so the best
    # acquisition level must not depend on the magnitude level.
    a = {"UC": 0.3, "PI": 0.1, "EI": 0.2, "KG": 0.4, "PES": 0.5}
    b = {0.01: 0.0, 0.05: 1.0, 0.20: 2.0}
    rows = [_fixture_row({"acquisition": acq, "magnitude": mag},
                         [a[acq] + b[mag]] * 3)
            for acq in a for mag in b]
    table = interaction_table(rows, 0)
    winners = {}
    for cell in table["cells"]:
        if (cell["noise_factor"] == "magnitude"
                and cell["controllable_factor"] == "acquisition"
                and cell["best"]):
            winners[cell["noise_level"]] = cell["controllable_level"]
    assert set(winners.values()) == {"PI"}


def test_argmin_switch_across_checkpoints_is_visible():
    # Early on PI wins, at the full budget UC wins.
    gaps = {"PI": [0.1, 0.2, 0.3], "UC": [0.3, 0.2, 0.1]}
    rows = [_fixture_row({"acquisition": acq}, g) for acq, g in gaps.items()]

    def best_acq(index):
        table = interaction_table(rows, index)
        return {c["controllable_level"] for c in table["cells"]
                if c["controllable_factor"] == "acquisition"
                and c["noise_factor"] == "form"
                and c["noise_level"] == "Constant" and c["best"]}

    assert best_acq(0) == {"PI"}
    assert best_acq(2) == {"UC"}


def test_csv_emitters_round_trip():
    rows = [_fixture_row({}, [0.5, 0.4, 0.3])]
    eff_csv = effects_to_csv(main_effects(rows, 2))
    lines = eff_csv.strip().splitlines()
    assert lines[0] == "factor,level,mean_gap,n,n_failed"
    assert any(line.startswith("replicates,1,") for line in lines)

    int_csv = interactions_to_csv(interaction_table(rows, 2))
    header = int_csv.splitlines()[0]
    assert header.split(",") == ["noise_factor", "noise_level",
                                 "controllable_factor", "controllable_level",
                                 "mean_gap", "n", "best"]
