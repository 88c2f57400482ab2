"""Command-line front end: scenario validation, batch runs, and signage audits.

Exit codes: 0 success, 1 validation failure, 2 I/O failure, 64 bad usage.
"""

from __future__ import annotations

import argparse
import sys

from .config import with_overrides
from .engine import run_batch
from .environment import ScenarioError, load_scenario_file
from .output import DebugDumper, write_outputs

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 64


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signsim",
        description="Agent-based evaluation of indoor signage and wayfinding systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")

    sub.add_parser("validate", parents=[common],
                   help="check the scenario against the schema and all invariants")

    for name, help_text in (("run", "run the simulation batch and write all outputs"),
                            ("audit", "run and print the per-sign audit table")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--out", required=True, help="output directory (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--replications", type=int, default=None)
        p.add_argument("--agents", type=int, default=None, help="agents per replication")
        p.add_argument("--dt", type=float, default=None, help="movement timestep, seconds")
        p.add_argument("--dump-views", action="store_true",
                       help="write per-perception-tick PPM views and PGM masks")
        p.add_argument("--dump-attention", action="store_true",
                       help="write per-perception-tick attention channel PGMs")
    return parser


def _load(path):
    try:
        return load_scenario_file(path)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def cmd_validate(args) -> int:
    env, task, cfg = _load(args.scenario)
    print(f"scenario ok: {len(env.floors)} floors, {len(env.signs)} signs, "
          f"{len(env.portals)} portals, {len(env.base_points)} base points, "
          f"{len(env.goal_points)} goal points, {len(task.legs)} task legs")
    return EXIT_OK


def cmd_run(args, audit: bool) -> int:
    env, task, cfg = _load(args.scenario)
    try:
        cfg = with_overrides(cfg, master_seed=args.seed, replications=args.replications,
                             agents_per_replication=args.agents, dt=args.dt)
    except ValueError as exc:
        print(f"bad override: {exc}", file=sys.stderr)
        return EXIT_USAGE

    dump = None
    if args.dump_views or args.dump_attention:
        dump = DebugDumper(args.out, views=args.dump_views, maps=args.dump_attention)
    aggregates, all_logs = run_batch(env, task, cfg, dump=dump)
    try:
        files = write_outputs(all_logs, aggregates, cfg, args.out)
    except OSError as exc:
        print(f"write failed: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(files)} files to {args.out}")

    for leg_idx, leg_stats in aggregates["legs"].items():
        median = leg_stats["median_travel_time"]
        median_s = f"{median:.1f} s" if median is not None else "n/a"
        print(f"leg {leg_idx}: {leg_stats['completed']}/{leg_stats['attempted']} attempted legs "
              f"completed (rate {leg_stats['completion_rate']:.2f}), median travel {median_s}")

    if audit:
        print()
        print(f"{'sign':>6} {'seen_frac':>10} {'mean_attn':>10} {'decisions':>10}")
        for sign_id in sorted(aggregates["signs"]):
            row = aggregates["signs"][sign_id]
            print(f"{sign_id:>6} {row['seen_fraction']:>10.3f} "
                  f"{row['mean_attention_when_visible']:>10.3f} {row['decisions_triggered']:>10}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "run":
            return cmd_run(args, audit=False)
        if args.command == "audit":
            return cmd_run(args, audit=True)
    except SystemExit as exc:
        return int(exc.code)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
