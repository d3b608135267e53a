"""Command-line entry points: study planning/execution/analysis, service."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import LabOptError
from .study import (
    CHECKPOINT_LABELS,
    DEFAULT_BUDGET_FACTOR,
    DEFAULT_REPEATS,
    FactorTable,
    checkpoint_index,
    config_id,
    effects_to_csv,
    enumerate_configs,
    interaction_table,
    interactions_to_csv,
    main_effects,
    plan_runs,
    read_results,
    run_study,
)


def _load_table(path) -> FactorTable:
    if path is None:
        return FactorTable()
    with open(path) as fh:
        return FactorTable.from_dict(json.load(fh))


def _write_or_print(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _cmd_plan(args) -> int:
    table = _load_table(args.factors)
    configs = enumerate_configs(table)
    runs = plan_runs(configs, args.repeats)
    print(f"{len(configs)} configs x {args.repeats} repeats "
          f"= {len(runs)} planned runs")
    if args.out:
        with open(args.out, "w") as fh:
            for config in configs:
                fh.write(json.dumps(
                    {"config_id": config_id(config),
                     "factors": config.factors()},
                    sort_keys=True) + "\n")
        print(f"plan written to {args.out}")
    return 0


def _cmd_run(args) -> int:
    table = _load_table(args.factors)
    configs = enumerate_configs(table)

    def progress(k, total, row):
        status = "FAIL" if row["failed"] else f"gap={row['gap'][-1]:.4g}"
        print(f"[{k}/{total}] {row['config_id']}#{row['repeat']} {status}",
              flush=True)

    n_new, n_total = run_study(
        configs, repeats=args.repeats, out=args.out,
        master_seed=args.seed, parallelism=args.parallel,
        budget_factor=args.budget_factor,
        progress=progress if not args.quiet else None)
    print(f"{n_new} new runs, {n_total} rows in {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    rows = read_results(args.results)
    if not rows:
        print("no rows in results file", file=sys.stderr)
        return 2
    index = checkpoint_index(args.checkpoint)
    if args.effects == "main":
        result = main_effects(rows, index)
        text = (effects_to_csv(result) if args.format == "csv"
                else json.dumps(result, indent=2, sort_keys=True))
    else:
        result = interaction_table(rows, index)
        text = (interactions_to_csv(result) if args.format == "csv"
                else json.dumps(result, indent=2, sort_keys=True))
    _write_or_print(text, args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labopt",
        description="Sequential optimization of noisy experiments: "
                    "factorial studies and a campaign service.")
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="factorial study tools")
    study_sub = study.add_subparsers(dest="study_command", required=True)

    plan = study_sub.add_parser("plan", help="enumerate the factor table")
    plan.add_argument("--factors", help="JSON file restricting factor levels")
    plan.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    plan.add_argument("--out", help="write the plan as JSON lines")
    plan.set_defaults(func=_cmd_plan)

    run = study_sub.add_parser("run", help="execute the study")
    run.add_argument("--factors", help="JSON file restricting factor levels")
    run.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    run.add_argument("--parallel", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="JSON-lines results file")
    run.add_argument("--budget-factor", type=int,
                     default=DEFAULT_BUDGET_FACTOR,
                     help="samples per dimension (lower only for smoke runs)")
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=_cmd_run)

    analyze = study_sub.add_parser("analyze", help="aggregate results")
    analyze.add_argument("results", help="JSON-lines results file")
    analyze.add_argument("--checkpoint", choices=CHECKPOINT_LABELS,
                         default="50d")
    analyze.add_argument("--effects", choices=("main", "interaction"),
                         default="main")
    analyze.add_argument("--format", choices=("csv", "json"), default="csv")
    analyze.add_argument("--out", help="output file (default: stdout)")
    analyze.set_defaults(func=_cmd_analyze)

    serve = sub.add_parser("serve", help="run the campaign HTTP service")
    serve.add_argument("--host", default=os.environ.get("LABOPT_HOST",
                                                        "127.0.0.1"))
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get("LABOPT_PORT", "8321")))
    serve.add_argument("--data-dir",
                       default=os.environ.get("LABOPT_DATA_DIR",
                                              "./campaigns"))
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LabOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
