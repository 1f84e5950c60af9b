"""Batch lock/verify/attack campaigns with JSON and CSV reporting.

A campaign cell is one (circuit, key width, style policy) triple.  Each cell
plans, compiles, verifies, and attacks ``candidates_per_pair`` candidates,
refines candidates whose feedback reason is configured for refinement, ranks
everything, and persists the winner's artifacts.  Cell failures are isolated
into failed rows; the campaign always completes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

from .analysis import compute_features, rank_nodes
from .attack import dip_attack
from .compiler import compile_plan
from .netlist import Netlist, emit_verilog, parse_bench_file, write_bench
from .planner import (
    CandidateRecord,
    LlmConfig,
    PlanResult,
    feedback_from_candidate,
    heuristic_plan,
    llm_plan,
    rank_candidates,
    refine_plan,
)
from .verify import verify_locked

ALL_STYLES = ("xor_xnor", "perturb_restore", "mux_lock", "pairwise_subgraph",
              "hybrid")
DEFAULT_REFINE_REASONS = ("parse_fail", "wrong_key_weak")


@dataclass
class CampaignConfig:
    circuits: list[str]
    key_widths: list[int] = field(default_factory=lambda: [8, 16, 32])
    styles: list[str] = field(default_factory=lambda: list(ALL_STYLES))
    candidates_per_pair: int = 1
    seed: int = 0
    planner: str = "heuristic"            # heuristic | llm
    llm_endpoint: str | None = None
    llm_auth_header: str = "Authorization"
    llm_auth_env: str = "BENCHLOCK_LLM_TOKEN"
    llm_timeout_s: float = 30.0
    llm_max_retries: int = 3
    check_patterns: int = 4096
    corruption_inputs: int = 256
    corruption_keys: int = 16
    run_attack: bool = True
    dip_budget: int = 10_000
    time_budget_s: float = 600.0
    count_cap: int = 65_536
    refine_reasons: list[str] = field(
        default_factory=lambda: list(DEFAULT_REFINE_REASONS))
    out_dir: str = "campaign_out"
    jobs: int = 1

    def validate(self) -> None:
        if not self.circuits:
            raise ValueError("config: no circuits given")
        if any(w < 1 for w in self.key_widths):
            raise ValueError("config: key widths must be >= 1")
        if self.candidates_per_pair < 1 or self.jobs < 1:
            raise ValueError("config: counts must be >= 1")
        bad = set(self.styles) - set(ALL_STYLES)
        if bad:
            raise ValueError(f"config: unknown styles {sorted(bad)}")
        if self.planner not in ("heuristic", "llm"):
            raise ValueError(f"config: unknown planner {self.planner!r}")
        if self.planner == "llm" and not self.llm_endpoint:
            raise ValueError("config: llm planner needs llm_endpoint")

    @classmethod
    def from_file(cls, path) -> "CampaignConfig":
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"config: unknown field(s) {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def cell_seed(base: int, circuit: str, width: int, style: str, cand: int) -> int:
    """Stable 64-bit per-candidate seed derived from the campaign seed."""
    h = hashlib.sha256(f"{base}|{circuit}|{width}|{style}|{cand}".encode())
    return int.from_bytes(h.digest()[:8], "big")


def _make_plan(cfg: CampaignConfig, n, feats, ranked, width, style, seed) -> PlanResult:
    if cfg.planner == "llm":
        llm_cfg = LlmConfig(
            endpoint_url=cfg.llm_endpoint,
            auth_header=cfg.llm_auth_header,
            auth_token=os.environ.get(cfg.llm_auth_env),
            timeout_s=cfg.llm_timeout_s,
            max_retries=cfg.llm_max_retries,
        )
        styles = ALL_STYLES[:4] if style == "hybrid" else (style,)
        return llm_plan(n, feats, ranked, width, llm_cfg, seed=seed,
                        allowed_styles=styles)
    return PlanResult(heuristic_plan(n, ranked, width, style, seed), "heuristic")


def _evaluate_candidate(cfg: CampaignConfig, orig, plan_result: PlanResult,
                        seed: int) -> tuple[CandidateRecord, dict]:
    timings = {}
    t0 = time.perf_counter()
    locked = compile_plan(orig, plan_result.plan)
    timings["compile_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    verification = verify_locked(
        orig, locked, check_patterns=cfg.check_patterns,
        corruption_inputs=cfg.corruption_inputs,
        corruption_keys=cfg.corruption_keys, seed=seed)
    timings["verify_s"] = time.perf_counter() - t0
    rec = CandidateRecord(plan_result.plan, locked, verification,
                          provenance=plan_result.provenance)
    if cfg.run_attack and verification.parse_ok:
        t0 = time.perf_counter()
        rec.attack = dip_attack(locked, orig, dip_budget=cfg.dip_budget,
                                time_budget_s=cfg.time_budget_s,
                                count_cap=cfg.count_cap)
        timings["attack_s"] = time.perf_counter() - t0
    return rec, timings


def run_cell(cfg: CampaignConfig, circuit_path: str, width: int,
             style: str) -> dict:
    """Execute one campaign cell; returns its report row."""
    cell_id = None
    try:
        orig = parse_bench_file(circuit_path)
        cell_id = f"{orig.name}_k{width}_{style}"
        t_cell = time.perf_counter()
        feats = compute_features(orig)
        ranked = rank_nodes(orig, feats)

        candidates: list[CandidateRecord] = []
        timings_by_rec: dict[int, dict] = {}
        llm_retries = 0
        llm_fallbacks = 0
        for cand in range(cfg.candidates_per_pair):
            seed = cell_seed(cfg.seed, orig.name, width, style, cand)
            t0 = time.perf_counter()
            plan_result = _make_plan(cfg, orig, feats, ranked, width, style, seed)
            plan_s = time.perf_counter() - t0
            if plan_result.provenance == "llm":
                llm_retries += max(plan_result.attempts - 1, 0)
            elif plan_result.provenance == "fallback":
                llm_retries += plan_result.attempts
                llm_fallbacks += 1
            rec, timings = _evaluate_candidate(cfg, orig, plan_result, seed)
            timings["plan_s"] = plan_s
            candidates.append(rec)
            timings_by_rec[id(rec)] = timings

            fb = feedback_from_candidate(rec)
            if fb is not None and fb.reason in cfg.refine_reasons:
                try:
                    refined_plan = refine_plan(rec.plan, fb, ranked, seed, orig)
                except Exception:
                    continue
                rec2, timings2 = _evaluate_candidate(
                    cfg, orig, PlanResult(refined_plan, rec.provenance), seed)
                timings2["plan_s"] = 0.0
                rec2.provenance = rec.provenance
                candidates.append(rec2)
                timings_by_rec[id(rec2)] = timings2

        ranked_cands = rank_candidates(candidates)
        winner = ranked_cands[0]
        timings = timings_by_rec[id(winner)]

        os.makedirs(cfg.out_dir, exist_ok=True)
        bench_path = os.path.join(cfg.out_dir, f"{cell_id}.bench")
        verilog_path = os.path.join(cfg.out_dir, f"{cell_id}.v")
        with open(bench_path, "w", encoding="utf-8") as f:
            f.write(write_bench(winner.locked))
        with open(verilog_path, "w", encoding="utf-8") as f:
            f.write(emit_verilog(winner.locked))

        v = winner.verification
        row = {
            "cell": cell_id,
            "circuit": orig.name,
            "key_width": width,
            "style": style,
            "planner": winner.provenance,
            "status": "ok",
            "error": "",
            "parse_ok": v.parse_ok,
            "correct_key_ok": v.correct_key_ok,
            "bit_error_rate": v.corruption.bit_error_rate if v.corruption else None,
            "pattern_error_rate": v.corruption.pattern_error_rate if v.corruption else None,
            "gate_overhead_ratio": v.overhead.gate_overhead_ratio if v.overhead else None,
            "key_gate_count": v.overhead.key_gate_count if v.overhead else None,
            "key_input_count": v.overhead.key_input_count if v.overhead else None,
            "attack_outcome": winner.attack.outcome if winner.attack else "",
            "dip_count": winner.attack.dip_count if winner.attack else None,
            "remaining_keys": (winner.attack.remaining_keys.count
                               if winner.attack and winner.attack.remaining_keys else None),
            "remaining_exact": (winner.attack.remaining_keys.exact
                                if winner.attack and winner.attack.remaining_keys else None),
            "attack_time_s": timings.get("attack_s"),
            "plan_time_s": timings.get("plan_s"),
            "compile_time_s": timings.get("compile_s"),
            "verify_time_s": timings.get("verify_s"),
            "cell_time_s": time.perf_counter() - t_cell,
            "candidates": len(candidates),
            "llm_retries": llm_retries,
            "llm_fallbacks": llm_fallbacks,
            "bench_path": bench_path,
            "verilog_path": verilog_path,
        }
        run_path = os.path.join(cfg.out_dir, f"run_{cell_id}.json")
        detail = {
            "row": row,
            "plan": winner.plan.to_dict(),
            "verification": v.to_dict(),
            "attack": winner.attack.to_dict() if winner.attack else None,
            "score": winner.score,
        }
        with open(run_path, "w", encoding="utf-8") as f:
            json.dump(detail, f, indent=2)
            f.write("\n")
        return row
    except Exception as e:  # failure isolation: record, never abort the batch
        return {
            "cell": cell_id or f"{os.path.basename(circuit_path)}_k{width}_{style}",
            "circuit": os.path.splitext(os.path.basename(circuit_path))[0],
            "key_width": width,
            "style": style,
            "planner": cfg.planner,
            "status": "failed",
            "error": f"{type(e).__name__}: {e}",
        }


_ROW_COLUMNS = [
    "cell", "circuit", "key_width", "style", "planner", "status", "error",
    "parse_ok", "correct_key_ok", "bit_error_rate", "pattern_error_rate",
    "gate_overhead_ratio", "key_gate_count", "key_input_count",
    "attack_outcome", "dip_count", "remaining_keys", "remaining_exact",
    "attack_time_s", "plan_time_s", "compile_time_s", "verify_time_s",
    "cell_time_s", "candidates", "llm_retries", "llm_fallbacks",
    "bench_path", "verilog_path",
]


def _mean(vals: list[float]) -> float | None:
    return sum(vals) / len(vals) if vals else None


def aggregate(rows: list[dict]) -> dict:
    """Mean corruption / DIPs / runtime grouped by (planner, key width).

    Works identically on in-memory rows and rows re-read from campaign.csv,
    which is how report fidelity is checked.
    """
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple[str, int], list[dict]] = {}
    for r in rows:
        if r.get("status") != "ok":
            continue
        groups.setdefault((str(r["planner"]), int(r["key_width"])), []).append(r)
    out = []
    for (planner, width), rs in sorted(groups.items()):
        def col(name):
            return [float(r[name]) for r in rs
                    if r.get(name) not in (None, "")]
        out.append({
            "planner": planner,
            "key_width": width,
            "runs": len(rs),
            "mean_bit_error_rate": _mean(col("bit_error_rate")),
            "mean_pattern_error_rate": _mean(col("pattern_error_rate")),
            "mean_gate_overhead_ratio": _mean(col("gate_overhead_ratio")),
            "mean_dip_count": _mean(col("dip_count")),
            "mean_attack_time_s": _mean(col("attack_time_s")),
            "mean_cell_time_s": _mean(col("cell_time_s")),
            "llm_retries": sum(int(r.get("llm_retries") or 0) for r in rs),
            "llm_fallbacks": sum(int(r.get("llm_fallbacks") or 0) for r in rs),
        })
    return {"groups": out,
            "failed_rows": sum(1 for r in rows if r.get("status") != "ok")}


def write_reports(rows: list[dict], out_dir: str) -> tuple[str, str]:
    """Write campaign.csv and campaign.json; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "campaign.csv")
    json_path = os.path.join(out_dir, "campaign.json")
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=_ROW_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k, ""))
                        for k in _ROW_COLUMNS})
    agg = aggregate(rows) if rows else {"groups": [], "failed_rows": 0}
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump({"rows": rows, "aggregate": agg}, f, indent=2)
        f.write("\n")
    return csv_path, json_path


def read_rows_csv(path) -> list[dict]:
    """Re-read campaign.csv rows with numeric fields restored."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        for r in csv.DictReader(f):
            for k, v in r.items():
                if v == "":
                    r[k] = None
            for k in ("key_width", "dip_count", "remaining_keys", "candidates",
                      "llm_retries", "llm_fallbacks", "key_gate_count",
                      "key_input_count"):
                if r.get(k) is not None:
                    r[k] = int(r[k])
            for k in ("bit_error_rate", "pattern_error_rate",
                      "gate_overhead_ratio", "attack_time_s", "plan_time_s",
                      "compile_time_s", "verify_time_s", "cell_time_s"):
                if r.get(k) is not None:
                    r[k] = float(r[k])
            for k in ("parse_ok", "correct_key_ok", "remaining_exact"):
                if r.get(k) is not None:
                    r[k] = r[k] == "True"
            rows.append(r)
    return rows


def _cell_worker(args) -> dict:
    cfg_doc, path, width, style = args
    cfg = CampaignConfig(**cfg_doc)
    return run_cell(cfg, path, width, style)


def run_campaign(cfg: CampaignConfig) -> dict:
    """Run every (circuit, width, style) cell and write all reports.

    Returns ``{"rows": [...], "aggregate": {...}, "csv": path, "json": path}``.
    """
    cfg.validate()
    cells = [(path, width, style)
             for path in cfg.circuits
             for width in cfg.key_widths
             for style in cfg.styles]
    if cfg.jobs > 1:
        tasks = [(cfg.to_dict(), p, w, s) for p, w, s in cells]
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_cell_worker, tasks))
    else:
        rows = [run_cell(cfg, p, w, s) for p, w, s in cells]
    rows.sort(key=lambda r: (str(r.get("circuit")), int(r.get("key_width", 0)),
                             str(r.get("style"))))
    csv_path, json_path = write_reports(rows, cfg.out_dir)
    return {"rows": rows, "aggregate": aggregate(rows) if rows else {},
            "csv": csv_path, "json": json_path}
