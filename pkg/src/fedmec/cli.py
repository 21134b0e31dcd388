"""Command-line entry point.

    fedmec run <config> [--seed N] [--out-dir DIR] [--format csv|jsonl]
    fedmec compare <configA> <configB> ... [--seed N] [--out-dir DIR] [...]
    fedmec validate <config>

Exit codes: 0 success, 2 config error, 3 runtime/numeric error. The
FEDMEC_OUT_DIR environment variable overrides the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .federated import save_checkpoint
from .harness import ConfigError, emit_metrics, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser():
    parser = argparse.ArgumentParser(prog="fedmec",
                                     description="Edge caching / computation "
                                                 "offloading experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("config")
    _common_flags(run)

    cmp_ = sub.add_parser("compare", help="run several specs on one master seed")
    cmp_.add_argument("configs", nargs="+")
    _common_flags(cmp_)

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("config")
    return parser


def _common_flags(p):
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--out-dir", default=None, help="override output directory")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")


def _resolve_spec(path, args):
    spec = load_config(path)
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    out_dir = args.out_dir or os.environ.get("FEDMEC_OUT_DIR") or spec.out_dir
    spec = replace(spec, out_dir=out_dir)
    return spec


def _execute(spec, fmt):
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(spec)
    metrics_path = out_dir / f"{spec.run_id}.{fmt}"
    emit_metrics(report, fmt, metrics_path)
    if report.final_params is not None:
        d_in, hidden, out = report.agent_dims
        save_checkpoint(out_dir / f"{spec.run_id}.ckpt", report.final_params,
                        d_in, hidden, out)
    return report, metrics_path


def _print_summary(report, metrics_path):
    print(f"run {report.run_id}: wrote {metrics_path} "
          f"({report.wall_clock_seconds:.1f}s)")
    for key in sorted(report.summary):
        print(f"  {key} = {report.summary[key]}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            spec = load_config(args.config)
            print(f"OK: {spec.run_id} ({spec.scenario}/{spec.mode}, "
                  f"train={spec.train_steps}, eval={spec.eval_steps})")
            return EXIT_OK
        if args.command == "run":
            spec = _resolve_spec(args.config, args)
            report, path = _execute(spec, args.format)
            _print_summary(report, path)
            return EXIT_OK
        # compare: same master seed for every spec
        specs = [_resolve_spec(p, args) for p in args.configs]
        seed = args.seed if args.seed is not None else specs[0].master_seed
        specs = [replace(s, master_seed=seed) for s in specs]
        rows = []
        for spec in specs:
            report, path = _execute(spec, args.format)
            _print_summary(report, path)
            metric = "eval_hit_rate_mean" if spec.scenario == "caching" \
                else "eval_avg_utility_mean"
            rows.append((spec.run_id, report.summary.get(metric),
                         report.summary.get("uplink_bits")))
        print(f"\n{'run':40s} {'eval metric':>16s} {'uplink bits':>16s}")
        for run_id, metric, bits in rows:
            print(f"{run_id:40s} {metric:16.6f} {bits:16d}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, FloatingPointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
