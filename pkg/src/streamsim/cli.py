"""Command line entry point: ``streamsim run|sweep|validate``."""

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import SWEEP_AXES, ConfigError, load_config, with_axis
from .metrics import OutputError, ensure_writable, export_csv, write_trace
from .simulation import run_simulation

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _report_config_error(exc: ConfigError) -> int:
    print("configuration error:", file=sys.stderr)
    for v in exc.violations:
        print(f"  {v}", file=sys.stderr)
    return EXIT_CONFIG


def _run_one(config, out_dir, trace):
    result = run_simulation(config, trace=trace)
    export_csv(result.metrics, result.summary, out_dir)
    if trace:
        write_trace(result.trace, Path(out_dir) / "trace.tsv")
    return result.summary


def cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _report_config_error(exc)
    print(f"{args.config}: ok ({len(config.workflow.stages)} stages, "
          f"{config.workers.count} workers, bi={config.batch_interval_ms} ms, "
          f"conJobs={config.concurrent_jobs})")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _report_config_error(exc)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out_dir = args.out or config.out_dir
    trace = args.trace or config.event_trace
    try:
        ensure_writable(out_dir)
        summary = _run_one(config, out_dir, trace)
    except OutputError as exc:
        print(f"I/O error: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    print(f"{summary.batches_total} batches ({summary.batches_empty} empty), "
          f"max scheduling delay {summary.max_scheduling_delay_ms} ms, "
          f"{'stable' if summary.stable else 'UNSTABLE'} -> {out_dir}")
    return EXIT_OK


def _parse_values(axis: str, raw: str) -> list:
    values = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if axis == "workers.speed":
            values.append(item)  # parsed as an exact rational by the config loader
        else:
            try:
                values.append(int(item))
            except ValueError:
                raise ConfigError([f"values: {axis} expects integers, got {item!r}"])
    if not values:
        raise ConfigError(["values: at least one value is required"])
    return values


def _sweep_task(task):
    config, out_dir, trace = task
    return _run_one(config, out_dir, trace)


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        return _report_config_error(ConfigError(
            [f"axis: unknown sweep axis {args.axis!r}; expected one of {', '.join(SWEEP_AXES)}"]))
    try:
        base = load_config(args.config)
        values = _parse_values(args.axis, args.values)
        configs = [with_axis(base, args.axis, v) for v in values]
    except ConfigError as exc:
        return _report_config_error(exc)
    if args.seed is not None:
        configs = [replace(c, seed=args.seed) for c in configs]
    root = Path(args.out or base.out_dir)
    tasks = [(c, root / f"{args.axis}={v}", args.trace or c.event_trace)
             for c, v in zip(configs, values)]
    try:
        ensure_writable(root)
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                summaries = list(pool.map(_sweep_task, tasks))
        else:
            summaries = [_sweep_task(t) for t in tasks]
        rows = [summary.to_dict() for summary in summaries]
        with open(root / "comparison.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            keys = list(rows[0])
            w.writerow([args.axis] + keys)
            for v, row in zip(values, rows):
                w.writerow([v] + [row[k] for k in keys])
    except OSError as exc:
        print(f"I/O error: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    for v, s in zip(values, summaries):
        print(f"{args.axis}={v}: max delay {s.max_scheduling_delay_ms} ms, "
              f"empty {s.batches_empty}/{s.batches_total}, {'stable' if s.stable else 'UNSTABLE'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamsim", description="Discrete-event simulator for micro-batch stream processing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation and write metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: outputs.dir from the config)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trace", action="store_true", help="also write trace.tsv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run one simulation per value of a parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, help=", ".join(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma separated, e.g. 1,15")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a configuration file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
