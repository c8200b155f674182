"""Command-line entry point ``spp-cge``.

Exit codes: 0 success, 1 bad input or configuration, 2 an experiment ran
but some trials failed (reports are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench.config import ConfigError, read_config
from .bench.experiment import csv_text, run_experiment
from .bench.synth import synth_instance
from .cge import run_proposed
from .colgen import Limits, run_conventional, trace_to_jsonl
from .core import SppError, format_instance, read_instance
from .exact import ResourceLimit, brute_force, solve_exact
from .gtfs import (CostMode, DutyConfig, InstanceInfeasibleWarning, build_instance,
                   duty_manifest, enumerate_duties, parse_gtfs, select_routes)


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_gen_instance(args) -> int:
    if args.gtfs:
        trips = parse_gtfs(args.gtfs, args.service_id)
        if args.routes is not None:
            trips = select_routes(trips, args.routes, args.seed)
        cfg = DutyConfig(frozenset(args.depots.split(",")) if args.depots else frozenset(),
                         args.min_layover, int(round(args.max_span_hours * 3600)),
                         args.max_candidates)
        duties = enumerate_duties(trips, cfg)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", InstanceInfeasibleWarning)
            inst = build_instance(duties, trips, args.cost_mode, args.seed)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.manifest:
            Path(args.manifest).write_text(duty_manifest(duties, trips), encoding="utf-8")
    else:
        if args.m is None or args.n is None:
            print("error: synthetic instances need -m and -n", file=sys.stderr)
            return 1
        inst = synth_instance(args.m, args.n, args.cost_mode, args.seed)
    _emit(format_instance(inst), args.out)
    return 0


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    limits = Limits(args.max_iterations, args.time_limit, args.ilp_node_limit)
    run = run_proposed if args.method == "proposed" else run_conventional
    res = run(inst, limits)
    doc = {
        "method": res.method,
        "status": res.status.value,
        "objective": res.objective,
        "columns": None if res.selection is None else res.selection.sorted_ids(),
        "iterations": res.iterations,
        "compression_ratio": res.compression_ratio,
        "initial_columns": res.initial_set,
        "final_working_set_size": len(res.final_set),
        "ilp_nodes": res.ilp_nodes,
        "seconds": res.seconds,
    }
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    if args.trace:
        Path(args.trace).write_text(trace_to_jsonl(res.trace), encoding="utf-8")
    return 0


def cmd_oracle(args) -> int:
    inst = read_instance(args.instance)
    try:
        ex = brute_force(inst) if args.brute_force else solve_exact(inst, node_limit=args.node_limit)
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = {
        "status": ex.status.value,
        "objective": ex.objective,
        "columns": None if ex.selection is None else ex.selection.sorted_ids(),
        "nodes": ex.nodes_explored,
    }
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


def cmd_experiment(args) -> int:
    cfg = read_config(args.config)
    over = {}
    if args.csv:
        over["output_csv"] = Path(args.csv)
    if args.json:
        over["output_json"] = Path(args.json)
    if args.workers:
        over["workers"] = args.workers
    if over:
        cfg = replace(cfg, **over)
    report = run_experiment(cfg)
    if cfg.output_csv is None:
        sys.stdout.write(csv_text(report.rows, cfg.methods))
    bad = sum(t.failed for t in report.trials)
    if bad:
        print(f"{bad} trial(s) failed; see the JSON report", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spp-cge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-instance", help="write an instance from a GTFS feed or synthetically")
    g.add_argument("--gtfs", metavar="DIR", help="GTFS folder; omit for a synthetic instance")
    g.add_argument("--service-id")
    g.add_argument("--routes", type=int, help="sample this many routes (default: all)")
    g.add_argument("--depots", help="comma-separated depot stop ids")
    g.add_argument("--max-span-hours", type=float, default=9.0)
    g.add_argument("--min-layover", type=int, default=0, help="seconds")
    g.add_argument("--max-candidates", type=int, default=1_000_000)
    g.add_argument("--manifest", help="also write the duty manifest JSON here")
    g.add_argument("-m", type=int, help="synthetic: number of elements")
    g.add_argument("-n", type=int, help="synthetic: number of columns")
    g.add_argument("--cost-mode", default=CostMode.UNIFORM.value,
                   choices=[c.value for c in CostMode])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen_instance)

    s = sub.add_parser("solve", help="run one method on an instance file")
    s.add_argument("instance")
    s.add_argument("--method", choices=["conventional", "proposed"], default="proposed")
    s.add_argument("--trace", help="write the per-iteration trace as JSON lines")
    s.add_argument("--max-iterations", type=int)
    s.add_argument("--time-limit", type=float)
    s.add_argument("--ilp-node-limit", type=int)
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run a batch described by a config file")
    e.add_argument("config")
    e.add_argument("--csv", help="override output_csv")
    e.add_argument("--json", help="override output_json")
    e.add_argument("--workers", type=int)
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="exact optimum of an instance file")
    o.add_argument("instance")
    o.add_argument("--brute-force", action="store_true", help="enumerate (N <= 25)")
    o.add_argument("--node-limit", type=int)
    o.add_argument("-o", "--out")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SppError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
