"""benchlock: logic-locking toolkit for gate-level `.bench` netlists.

Compiles key-controlled obfuscation from structured lock plans, verifies
correct-key functionality and wrong-key corruption by simulation, and
evaluates lock security with an oracle-guided DIP-based SAT attack.
"""
from .netlist import (
    BenchParseError,
    Gate,
    KeyVector,
    KeyWidthError,
    Netlist,
    Violation,
    bind_key,
    emit_verilog,
    parse_bench,
    parse_bench_file,
    validate,
    write_bench,
    write_bench_file,
)
from .analysis import NodeFeatures, RankedSites, compute_features, rank_nodes
from .plan import LockInstance, LockPlan, PlanError, parse_plan, serialize_plan, validate_plan
from .compiler import OverheadMetrics, compile_plan, overhead
from .sim import CorruptionEstimate, PatternBlock, check_correct_key, evaluate, measure_corruption
from .cnf import CnfFormula, encode_cnf
from .solver import Solver
from .attack import (
    AttackReport,
    CecResult,
    KeySpaceCount,
    cec_check,
    count_remaining_keys,
    dip_attack,
    dip_constraint_formula,
    enumerate_keys,
)
from .planner import heuristic_plan, llm_plan, rank_candidates, refine_plan

__version__ = "0.1.0"

__all__ = [
    "AttackReport", "BenchParseError", "CecResult", "CnfFormula",
    "CorruptionEstimate", "Gate", "KeySpaceCount", "KeyVector",
    "KeyWidthError", "LockInstance", "LockPlan", "Netlist", "NodeFeatures",
    "OverheadMetrics", "PatternBlock", "PlanError", "RankedSites", "Solver",
    "Violation", "bind_key", "cec_check", "check_correct_key", "compile_plan",
    "compute_features", "count_remaining_keys", "dip_attack",
    "dip_constraint_formula", "emit_verilog", "encode_cnf", "enumerate_keys",
    "evaluate", "heuristic_plan", "llm_plan", "measure_corruption",
    "overhead", "parse_bench", "parse_bench_file", "parse_plan",
    "rank_candidates", "rank_nodes", "refine_plan", "serialize_plan",
    "validate", "validate_plan", "write_bench", "write_bench_file",
]
