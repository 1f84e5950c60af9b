"""Command-line front end: per-stage subcommands plus campaign orchestration."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import benchgen
from .analysis import analysis_report, compute_features, rank_nodes
from .attack import dip_attack
from .campaign import CampaignConfig, aggregate, read_rows_csv, run_campaign
from .compiler import compile_plan, overhead
from .netlist import emit_verilog, parse_bench_file, write_bench_file
from .plan import parse_plan, serialize_plan
from .planner import heuristic_plan
from .verify import verify_locked


def _emit(doc: dict, json_path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if json_path:
        with open(json_path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_analyze(args) -> int:
    n = parse_bench_file(args.circuit)
    _emit(analysis_report(n), args.json)
    return 0


def _cmd_lock(args) -> int:
    n = parse_bench_file(args.circuit)
    seed = args.seed if args.seed is not None else 0
    if args.plan:
        with open(args.plan, "r", encoding="utf-8") as f:
            plan = parse_plan(f.read())
    else:
        ranked = rank_nodes(n, compute_features(n))
        plan = heuristic_plan(n, ranked, args.key_width, args.style, seed)
    locked = compile_plan(n, plan)
    os.makedirs(args.out, exist_ok=True)
    base = os.path.join(args.out, f"{n.name}_locked")
    write_bench_file(locked, base + ".bench")
    with open(base + ".v", "w", encoding="utf-8") as f:
        f.write(emit_verilog(locked))
    with open(base + ".plan.json", "w", encoding="utf-8") as f:
        f.write(serialize_plan(plan))
    _emit({"locked_bench": base + ".bench", "verilog": base + ".v",
           "plan": base + ".plan.json",
           "overhead": overhead(n, locked).to_dict()}, args.json)
    return 0


def _cmd_verify(args) -> int:
    orig = parse_bench_file(args.original)
    locked = parse_bench_file(args.locked)
    report = verify_locked(orig, locked, seed=args.seed if args.seed is not None else 0)
    _emit(report.to_dict(), args.json)
    return 0 if (report.parse_ok and report.correct_key_ok) else 1


def _cmd_attack(args) -> int:
    locked = parse_bench_file(args.locked)
    oracle = parse_bench_file(args.oracle)
    report = dip_attack(locked, oracle, dip_budget=args.dip_budget,
                        time_budget_s=args.time_budget)
    _emit(report.to_dict(), args.json)
    return 0 if report.outcome == "key_recovered" else 1


def _cmd_campaign(args) -> int:
    cfg = CampaignConfig.from_file(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.jobs:
        cfg.jobs = args.jobs
    if args.seed is not None:
        cfg.seed = args.seed
    if args.circuits:
        cfg.circuits = args.circuits
    result = run_campaign(cfg)
    failed = result["aggregate"].get("failed_rows", 0)
    _emit({"csv": result["csv"], "json": result["json"],
           "rows": len(result["rows"]), "failed_rows": failed}, args.json)
    return 0 if failed == 0 else 1


def _cmd_report(args) -> int:
    rows = read_rows_csv(args.csv)
    _emit(aggregate(rows), args.json)
    return 0


def _cmd_benchgen(args) -> int:
    names = args.names or list(("c17",) + benchgen.BENCHMARK_SUITE)
    paths = benchgen.write_suite(args.out, names)
    _emit({"written": paths}, args.json)
    return 0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="benchlock",
        description="Logic-locking toolkit: lock .bench netlists, verify them, "
                    "and evaluate security with a DIP-based SAT attack.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--json", metavar="PATH",
                        help="write the JSON result here instead of stdout")

    sp = sub.add_parser("analyze", help="structural features and site ranking")
    sp.add_argument("circuit")
    common(sp)
    sp.set_defaults(func=_cmd_analyze)

    sp = sub.add_parser("lock", help="plan (or load a plan) and compile a lock")
    sp.add_argument("circuit")
    sp.add_argument("--key-width", type=int, default=8)
    sp.add_argument("--style", default="xor_xnor",
                    choices=["xor_xnor", "perturb_restore", "mux_lock",
                             "pairwise_subgraph", "hybrid"])
    sp.add_argument("--plan", help="compile this lockplan_v1 JSON file instead "
                                   "of planning")
    sp.add_argument("--out", default=".")
    common(sp)
    sp.set_defaults(func=_cmd_lock)

    sp = sub.add_parser("verify", help="correct-key and corruption checks")
    sp.add_argument("original")
    sp.add_argument("locked")
    common(sp)
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("attack", help="oracle-guided DIP SAT attack")
    sp.add_argument("locked")
    sp.add_argument("oracle")
    sp.add_argument("--dip-budget", type=int, default=10_000)
    sp.add_argument("--time-budget", type=float, default=600.0)
    common(sp)
    sp.set_defaults(func=_cmd_attack)

    sp = sub.add_parser("campaign", help="batch lock/verify/attack run")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--circuits", nargs="*")
    common(sp)
    sp.set_defaults(func=_cmd_campaign)

    sp = sub.add_parser("report", help="recompute aggregates from campaign.csv")
    sp.add_argument("csv")
    common(sp)
    sp.set_defaults(func=_cmd_report)

    sp = sub.add_parser("benchgen", help="write the benchmark circuit suite")
    sp.add_argument("--out", default="benchmarks")
    sp.add_argument("names", nargs="*")
    common(sp)
    sp.set_defaults(func=_cmd_benchgen)

    args = p.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
