"""Lock-plan generation: deterministic heuristic, LLM endpoint client, and
feedback-driven refinement, plus candidate ranking.

The heuristic planner walks the ranked site list and is a pure function of
(netlist, ranking, policy, seed).  The LLM planner speaks a single-POST
JSON contract and falls back to the heuristic when the endpoint cannot
produce a valid plan within its retry budget.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .analysis import NodeFeatures, RankedSites
from .attack import AttackReport
from .netlist import Netlist
from .plan import STYLES, LockInstance, LockPlan, PlanError, plan_from_dict, \
    serialize_plan, validate_plan
from .sim import CorruptionEstimate
from .verify import VerificationReport

WEAK_CORRUPTION_THRESHOLD = 0.01
PERTURB_GROUP_BITS = 4
PERTURB_HELPERS = 2


class InsufficientSitesError(ValueError):
    """Not enough eligible lock sites for the requested key width."""


class RefinementError(ValueError):
    """No legal refinement exists for the given plan and feedback."""


@dataclass(frozen=True)
class PlannerFeedback:
    reason: str                        # parse_fail | wrong_key_weak | sat_recovered
    corruption: Optional[CorruptionEstimate] = None
    attack: Optional[AttackReport] = None
    invalid_targets: tuple[str, ...] = ()


@dataclass
class CandidateRecord:
    plan: LockPlan
    locked: Netlist
    verification: VerificationReport
    attack: Optional[AttackReport] = None
    provenance: str = "heuristic"
    score: Optional[float] = None


# ----------------------------------------------------------------------
# site allocation shared by the heuristic planner and refinement
# ----------------------------------------------------------------------

class _SiteAllocator:
    """Rank-ordered site consumption with an incremental cycle-safety model.

    Mirrors the rewiring semantics of the compiler: each committed instance
    splices a fresh node into the target's sink edges and taps its helper
    and decoy wires, so reachability questions about candidate decoys and
    pairwise partners are answered on the post-insertion graph.
    """

    def __init__(self, n: Netlist, ranked: RankedSites):
        self.n = n
        self.sites = list(ranked.nodes())
        self.used: set[str] = set()
        self.succ: dict = {s: set() for s in n.signals}
        for g in n.gates:
            for f in g.fanin:
                self.succ.setdefault(f, set()).add(g.output)
        self._counter = 0

    def _reaches(self, src: str, dst: str) -> bool:
        if src == dst:
            return True
        seen = set()
        stack = [src]
        succ = self.succ
        while stack:
            s = stack.pop()
            for t in succ.get(s, ()):
                if t == dst:
                    return True
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return False

    def commit(self, inst: LockInstance) -> None:
        snapshots = [set(self.succ.get(w, ())) for w in inst.targets]
        nodes = []
        for _ in inst.targets:
            nodes.append(("lk", self._counter))
            self._counter += 1
        for t_i, w in enumerate(inst.targets):
            self.succ[nodes[t_i]] = snapshots[t_i]
            self.succ[w] = {nodes[t_i]}
            self.used.add(w)
        for t_i, w in enumerate(inst.targets):
            taps = [h for h, _ in inst.helpers]
            if inst.style == "pairwise_subgraph":
                taps.append(inst.targets[1 - t_i])
            for h in taps:
                self.succ.setdefault(h, set()).add(nodes[t_i])

    def free_sites(self):
        return (s for s in self.sites if s not in self.used)

    def take_xor_site(self) -> Optional[str]:
        return next(self.free_sites(), None)

    def find_decoy(self, target: str) -> Optional[str]:
        for cand in self.sites:
            if cand != target and not self._reaches(target, cand):
                return cand
        return None

    def find_partner(self, target: str) -> Optional[str]:
        for cand in self.free_sites():
            if cand == target:
                continue
            if not self._reaches(target, cand) and not self._reaches(cand, target):
                return cand
        return None


def _draw_bits(rng: random.Random, k: int) -> tuple[int, ...]:
    return tuple(rng.getrandbits(1) for _ in range(k))


def _style_cycle(style_policy: str):
    if style_policy == "hybrid":
        return list(STYLES)
    if style_policy not in STYLES:
        raise ValueError(f"unknown style policy {style_policy!r}")
    return [style_policy]


def heuristic_plan(n: Netlist, ranked: RankedSites, key_width: int,
                   style_policy: str = "xor_xnor", seed: int = 0) -> LockPlan:
    """Deterministic rank-driven plan construction.

    Sites are consumed in rank order under the per-style validity rules;
    ``hybrid`` rotates through all four styles.  perturb_restore groups take
    up to four key bits with two primary-input helpers.  Identical inputs
    always produce the identical plan.

    Raises
    ------
    InsufficientSitesError
        When the ranked list cannot supply enough eligible sites.
    """
    if key_width < 1:
        raise ValueError("key_width must be >= 1")
    rng = random.Random(seed)
    alloc = _SiteAllocator(n, ranked)
    cycle = _style_cycle(style_policy)
    instances: list[LockInstance] = []
    next_bit = 0
    turn = 0
    pis = list(n.primary_inputs)

    while next_bit < key_width:
        remaining = key_width - next_bit
        style = cycle[turn % len(cycle)]
        turn += 1
        if style == "perturb_restore" and remaining < 2:
            style = "xor_xnor"
        inst = None
        if style == "xor_xnor":
            site = alloc.take_xor_site()
            if site is None:
                raise InsufficientSitesError(
                    f"{n.name}: no free site for key bit {next_bit}")
            inst = LockInstance("xor_xnor", (site,), (next_bit,),
                                _draw_bits(rng, 1))
        elif style == "mux_lock":
            for site in list(alloc.free_sites()):
                decoy = alloc.find_decoy(site)
                if decoy is not None:
                    inst = LockInstance("mux_lock", (site,), (next_bit,),
                                        _draw_bits(rng, 1), ((decoy, 0),))
                    break
            if inst is None:
                raise InsufficientSitesError(
                    f"{n.name}: no mux site/decoy for key bit {next_bit}")
        elif style == "pairwise_subgraph":
            for site in list(alloc.free_sites()):
                partner = alloc.find_partner(site)
                if partner is not None:
                    inst = LockInstance("pairwise_subgraph", (site, partner),
                                        (next_bit,), _draw_bits(rng, 1))
                    break
            if inst is None:
                raise InsufficientSitesError(
                    f"{n.name}: no pairwise pair for key bit {next_bit}")
        else:  # perturb_restore
            group = min(PERTURB_GROUP_BITS, remaining)
            site = alloc.take_xor_site()
            if site is None:
                raise InsufficientSitesError(
                    f"{n.name}: no free site for key bit {next_bit}")
            k = min(PERTURB_HELPERS, len(pis))
            helpers = tuple((h, rng.getrandbits(1))
                            for h in (rng.sample(pis, k) if k else ()))
            if not helpers:
                raise InsufficientSitesError(
                    f"{n.name}: no helper inputs available")
            bits = tuple(range(next_bit, next_bit + group))
            inst = LockInstance("perturb_restore", (site,), bits,
                                _draw_bits(rng, group), helpers)
        alloc.commit(inst)
        instances.append(inst)
        next_bit += len(inst.key_bits)

    plan = LockPlan(n.name, key_width, seed, tuple(instances))
    bad = validate_plan(plan, n)
    if bad:
        raise InsufficientSitesError(f"{n.name}: planned instances do not "
                                     f"validate: {bad[0]}")
    return plan


# ----------------------------------------------------------------------
# LLM endpoint planner
# ----------------------------------------------------------------------

CONSTRAINTS_DOC = (
    "Return exactly one lockplan_v1 JSON object. Key-bit groups must "
    "partition 0..key_width-1; targets must be distinct gate outputs of the "
    "circuit; xor_xnor/mux_lock/pairwise_subgraph take one key bit, "
    "perturb_restore at least two; mux_lock needs one decoy helper outside "
    "the target's fanout; perturb_restore helpers must stay outside the "
    "target's fanout."
)


@dataclass(frozen=True)
class LlmConfig:
    endpoint_url: str
    auth_header: str = "Authorization"
    auth_token: Optional[str] = None
    timeout_s: float = 30.0
    max_retries: int = 3
    shortlist_size: int = 24


@dataclass(frozen=True)
class PlanResult:
    plan: LockPlan
    provenance: str            # heuristic | llm | fallback
    attempts: int = 0
    error: Optional[str] = None


def _shortlist(ranked: RankedSites, feats: dict[str, NodeFeatures], size: int):
    entries = []
    for node, score in ranked.entries[:size]:
        f = feats[node]
        entries.append({
            "node": node,
            "score": score,
            "features": {
                "depth": f.depth,
                "fanout": f.fanout,
                "tfo_size": f.tfo_size,
                "cone_coverage": f.cone_coverage,
                "observability": f.observability,
            },
        })
    return entries


def llm_plan(n: Netlist, feats: dict[str, NodeFeatures], ranked: RankedSites,
             key_width: int, config: LlmConfig, seed: int = 0,
             allowed_styles: tuple[str, ...] = STYLES) -> PlanResult:
    """Request a lock plan from a planner HTTP endpoint.

    Sends one JSON POST per attempt; the response body must be exactly one
    lockplan_v1 document.  Schema or validation failures are fed back to the
    endpoint as a machine-readable violation list for up to
    ``config.max_retries`` attempts, after which the deterministic heuristic
    takes over (provenance ``fallback``).
    """
    import requests

    request = {
        "task": "lockplan_v1",
        "circuit": {
            "name": n.name,
            "n_inputs": len(n.primary_inputs),
            "n_outputs": len(n.primary_outputs),
            "n_gates": len(n.gates),
            "depth": ranked.circuit_stats.max_depth,
        },
        "shortlist": _shortlist(ranked, feats, config.shortlist_size),
        "key_width": key_width,
        "allowed_styles": list(allowed_styles),
        "constraints_doc": CONSTRAINTS_DOC,
    }
    headers = {"Content-Type": "application/json"}
    if config.auth_token:
        headers[config.auth_header] = config.auth_token

    last_error = None
    for attempt in range(1, config.max_retries + 1):
        try:
            resp = requests.post(config.endpoint_url, json=request,
                                 headers=headers, timeout=config.timeout_s)
            resp.raise_for_status()
            doc = resp.json()
            plan = plan_from_dict(doc)
            problems = []
            if plan.source_circuit != n.name:
                problems.append({"code": "wrong-circuit", "subject": plan.source_circuit,
                                 "message": f"plan names circuit {plan.source_circuit!r}, "
                                            f"expected {n.name!r}"})
            if plan.key_width != key_width:
                problems.append({"code": "wrong-width", "subject": str(plan.key_width),
                                 "message": f"plan key_width {plan.key_width}, "
                                            f"expected {key_width}"})
            if any(i.style not in allowed_styles for i in plan.instances):
                problems.append({"code": "style-not-allowed", "subject": "instances",
                                 "message": f"allowed styles: {list(allowed_styles)}"})
            problems.extend(
                {"code": v.code, "subject": v.subject, "message": v.message}
                for v in validate_plan(plan, n))
            if not problems:
                return PlanResult(plan, "llm", attempts=attempt)
            last_error = json.dumps(problems)
            request = {**request, "violations": problems,
                       "previous_response": doc}
        except (requests.RequestException, ValueError, PlanError) as e:
            last_error = str(e)
            request = {**request,
                       "violations": [{"code": "invalid-response",
                                       "subject": "", "message": str(e)}]}
    fallback = heuristic_plan(n, ranked, key_width, "hybrid", seed)
    return PlanResult(fallback, "fallback", attempts=config.max_retries,
                      error=last_error)


# ----------------------------------------------------------------------
# refinement
# ----------------------------------------------------------------------

def _rank_index(ranked: RankedSites) -> dict[str, int]:
    return {node: i for i, node in enumerate(ranked.nodes())}


def refine_plan(prev: LockPlan, fb: PlannerFeedback, ranked: RankedSites,
                seed: int, n: Netlist) -> LockPlan:
    """Produce an improved plan from verification/security feedback.

    * ``parse_fail``: drop the offending instances and re-cover their key
      bits with xor_xnor on fresh high-rank sites.
    * ``wrong_key_weak``: move the lowest-ranked instance's target to the
      next unused higher-rank site, and merge two xor_xnor instances into a
      single-helper perturb_restore (a wider pattern detector).
    * ``sat_recovered``: regroup all xor_xnor instances into one
      perturb_restore group (a larger restore comparator).

    Raises
    ------
    RefinementError
        If none of the applicable rewrites leaves a valid, changed plan.
    """
    rng = random.Random(seed)
    pos = _rank_index(ranked)
    worst = max(len(pos), 1)

    def inst_rank(inst: LockInstance) -> int:
        return min((pos.get(t, worst) for t in inst.targets), default=worst)

    instances = list(prev.instances)

    if fb.reason == "parse_fail":
        dropped = [i for i in instances
                   if set(i.targets) & set(fb.invalid_targets)]
        if not dropped:
            raise RefinementError("parse_fail feedback names no instance")
        kept = [i for i in instances if i not in dropped]
        alloc = _SiteAllocator(n, ranked)
        for i in kept:
            alloc.commit(i)
        rebuilt = list(kept)
        for d in dropped:
            for bit, cbit in zip(d.key_bits, d.correct_bits):
                site = alloc.take_xor_site()
                if site is None:
                    raise RefinementError("no free sites to re-place dropped bits")
                inst = LockInstance("xor_xnor", (site,), (bit,), (cbit,))
                alloc.commit(inst)
                rebuilt.append(inst)
        new = LockPlan(prev.source_circuit, prev.key_width, prev.seed,
                       tuple(rebuilt))
    elif fb.reason == "wrong_key_weak":
        order = sorted(range(len(instances)), key=lambda i: inst_rank(instances[i]))
        weakest = order[-1]
        alloc = _SiteAllocator(n, ranked)
        for i, inst in enumerate(instances):
            if i != weakest:
                alloc.commit(inst)
        moved = _move_instance(instances[weakest], alloc, rng)
        if moved is None:
            raise RefinementError("no higher-rank site accepts the weak instance")
        instances[weakest] = moved
        alloc.commit(moved)
        xors = [i for i, inst in enumerate(instances)
                if inst.style == "xor_xnor"]
        if len(xors) >= 2:
            a, b = sorted(xors, key=lambda i: inst_rank(instances[i]))[:2]
            merged = _merge_to_perturb([instances[a], instances[b]], n, rng,
                                       helpers=1)
            instances = [inst for i, inst in enumerate(instances)
                         if i not in (a, b)]
            instances.append(merged)
        new = LockPlan(prev.source_circuit, prev.key_width, prev.seed,
                       tuple(instances))
    elif fb.reason == "sat_recovered":
        xors = [inst for inst in instances if inst.style == "xor_xnor"]
        if len(xors) < 2:
            raise RefinementError(
                "sat_recovered regrouping needs at least two xor_xnor instances")
        rest = [inst for inst in instances if inst.style != "xor_xnor"]
        merged = _merge_to_perturb(xors, n, rng, helpers=PERTURB_HELPERS)
        new = LockPlan(prev.source_circuit, prev.key_width, prev.seed,
                       tuple(rest + [merged]))
    else:
        raise ValueError(f"unknown feedback reason {fb.reason!r}")

    bad = validate_plan(new, n)
    if bad:
        raise RefinementError(f"refined plan does not validate: {bad[0]}")
    if new == prev:
        raise RefinementError("refinement left the plan unchanged")
    return new


def _move_instance(inst: LockInstance, alloc: _SiteAllocator,
                   rng: random.Random) -> Optional[LockInstance]:
    """Re-target an instance onto the best free site that fits its style."""
    if inst.style == "mux_lock":
        for site in alloc.free_sites():
            if site in inst.targets:
                continue
            decoy = alloc.find_decoy(site)
            if decoy is not None:
                return LockInstance(inst.style, (site,), inst.key_bits,
                                    inst.correct_bits, ((decoy, 0),))
        return None
    if inst.style == "pairwise_subgraph":
        for site in alloc.free_sites():
            if site in inst.targets:
                continue
            partner = alloc.find_partner(site)
            if partner is not None and partner not in inst.targets:
                return LockInstance(inst.style, (site, partner), inst.key_bits,
                                    inst.correct_bits)
        return None
    for site in alloc.free_sites():
        if site not in inst.targets:
            return LockInstance(inst.style, (site,), inst.key_bits,
                                inst.correct_bits, inst.helpers)
    return None


def _merge_to_perturb(insts: list[LockInstance], n: Netlist,
                      rng: random.Random, helpers: int) -> LockInstance:
    """Fuse xor_xnor instances into one perturb_restore over their key bits."""
    bits = tuple(b for i in insts for b in i.key_bits)
    cbits = tuple(b for i in insts for b in i.correct_bits)
    target = insts[0].targets[0]
    pis = list(n.primary_inputs)
    k = min(helpers, len(pis))
    hs = tuple((h, rng.getrandbits(1)) for h in rng.sample(pis, k))
    return LockInstance("perturb_restore", (target,), bits, cbits, hs)


# ----------------------------------------------------------------------
# candidate ranking
# ----------------------------------------------------------------------

def feedback_from_candidate(rec: CandidateRecord,
                            weak_threshold: float = WEAK_CORRUPTION_THRESHOLD
                            ) -> Optional[PlannerFeedback]:
    """Derive the strongest applicable feedback signal for a candidate."""
    v = rec.verification
    if not v.parse_ok or not v.correct_key_ok:
        return PlannerFeedback("parse_fail", v.corruption, rec.attack,
                               invalid_targets=rec.plan.all_targets())
    if v.corruption is not None and v.corruption.bit_error_rate < weak_threshold:
        return PlannerFeedback("wrong_key_weak", v.corruption, rec.attack)
    if rec.attack is not None and rec.attack.outcome == "key_recovered":
        return PlannerFeedback("sat_recovered", v.corruption, rec.attack)
    return None


def candidate_score(rec: CandidateRecord) -> float:
    v = rec.verification
    ber = v.corruption.bit_error_rate if v.corruption else 0.0
    gor = v.overhead.gate_overhead_ratio if v.overhead else 0.0
    return (1.0 * (1 if v.correct_key_ok else 0)
            + 2.0 * min(ber, 0.5) / 0.5
            - 0.5 * min(gor, 1.0)
            - 10.0 * (0 if v.parse_ok else 1))


def _plan_digest(p: LockPlan) -> str:
    return hashlib.sha256(serialize_plan(p).encode()).hexdigest()


def rank_candidates(cands: list[CandidateRecord]) -> list[CandidateRecord]:
    """Order candidates by score, breaking ties toward lower overhead."""
    for rec in cands:
        rec.score = candidate_score(rec)
    return sorted(
        cands,
        key=lambda r: (
            -r.score,
            r.verification.overhead.gate_overhead_ratio
            if r.verification.overhead else float("inf"),
            _plan_digest(r.plan),
        ),
    )
