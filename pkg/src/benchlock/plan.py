"""Lock-plan intermediate representation: JSON schema, parsing, validation.

A plan is the boundary object between planners (heuristic or LLM-backed)
and the deterministic compiler.  The schema is closed: unknown fields are
rejected so malformed planner output fails loudly instead of compiling to
something unintended.

Schema (version ``lockplan_v1``)::

    {
      "version": "lockplan_v1",
      "source_circuit": "<name>",
      "key_width": <int >= 1>,
      "seed": <uint64>,
      "instances": [
        {
          "style": "xor_xnor" | "perturb_restore" | "mux_lock" | "pairwise_subgraph",
          "targets": ["<wire>"] (2 wires for pairwise_subgraph),
          "key_bits": [<int>, ...],
          "correct_bits": [<0|1>, ...],
          "helpers": [["<wire>", <0|1>], ...]   # optional, defaults to []
        }, ...
      ]
    }

Key-bit groups must partition ``0 .. key_width-1`` exactly.  Helpers carry a
polarity bit; perturb_restore reads them as pattern-detector inputs and
mux_lock as a single decoy wire (polarity ignored).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .netlist import Netlist, Violation, transitive_fanout

PLAN_VERSION = "lockplan_v1"
STYLES = ("xor_xnor", "perturb_restore", "mux_lock", "pairwise_subgraph")
RESERVED_PREFIX = "lk_"
MAX_HELPERS = 8


class PlanError(ValueError):
    """Raised when a plan document violates the schema or its invariants."""


@dataclass(frozen=True)
class LockInstance:
    style: str
    targets: tuple[str, ...]
    key_bits: tuple[int, ...]
    correct_bits: tuple[int, ...]
    helpers: tuple[tuple[str, int], ...] = ()

    def to_dict(self) -> dict:
        return {
            "style": self.style,
            "targets": list(self.targets),
            "key_bits": list(self.key_bits),
            "correct_bits": list(self.correct_bits),
            "helpers": [[h, p] for h, p in self.helpers],
        }


@dataclass(frozen=True)
class LockPlan:
    source_circuit: str
    key_width: int
    seed: int
    instances: tuple[LockInstance, ...]

    def to_dict(self) -> dict:
        return {
            "version": PLAN_VERSION,
            "source_circuit": self.source_circuit,
            "key_width": self.key_width,
            "seed": self.seed,
            "instances": [i.to_dict() for i in self.instances],
        }

    def all_targets(self) -> tuple[str, ...]:
        return tuple(t for i in self.instances for t in i.targets)


def serialize_plan(p: LockPlan) -> str:
    return json.dumps(p.to_dict(), indent=2) + "\n"


def _require_fields(d: dict, required: dict, optional: dict, where: str) -> None:
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise PlanError(f"{where}: unknown field(s) {sorted(unknown)}")
    for f in required:
        if f not in d:
            raise PlanError(f"{where}: missing field {f!r}")
    for f, v in d.items():
        want = required.get(f, optional.get(f))
        if not isinstance(v, want):
            raise PlanError(f"{where}: field {f!r} must be {want}")


def plan_from_dict(doc: dict) -> LockPlan:
    """Build a :class:`LockPlan` from a parsed JSON document (strict schema)."""
    if not isinstance(doc, dict):
        raise PlanError("plan document must be a JSON object")
    _require_fields(
        doc,
        {"version": str, "source_circuit": str, "key_width": int,
         "seed": int, "instances": list},
        {},
        "plan",
    )
    if doc["version"] != PLAN_VERSION:
        raise PlanError(f"plan: unsupported version {doc['version']!r}")
    key_width = doc["key_width"]
    if isinstance(key_width, bool) or key_width < 1:
        raise PlanError("plan: key_width must be an integer >= 1")
    seed = doc["seed"]
    if isinstance(seed, bool) or not (0 <= seed < 2**64):
        raise PlanError("plan: seed must be an unsigned 64-bit integer")

    instances = []
    for idx, inst in enumerate(doc["instances"]):
        where = f"instances[{idx}]"
        if not isinstance(inst, dict):
            raise PlanError(f"{where}: must be a JSON object")
        _require_fields(
            inst,
            {"style": str, "targets": list, "key_bits": list,
             "correct_bits": list},
            {"helpers": list},
            where,
        )
        style = inst["style"]
        if style not in STYLES:
            raise PlanError(f"{where}: unknown style {style!r}")
        targets = tuple(inst["targets"])
        if any(not isinstance(t, str) for t in targets):
            raise PlanError(f"{where}: targets must be strings")
        key_bits = tuple(inst["key_bits"])
        correct_bits = tuple(inst["correct_bits"])
        if any(isinstance(b, bool) or not isinstance(b, int) for b in key_bits):
            raise PlanError(f"{where}: key_bits must be integers")
        if any(b not in (0, 1) for b in correct_bits):
            raise PlanError(f"{where}: correct_bits must be 0/1")
        helpers = []
        for h in inst.get("helpers", []):
            if (not isinstance(h, (list, tuple)) or len(h) != 2
                    or not isinstance(h[0], str) or h[1] not in (0, 1)):
                raise PlanError(f"{where}: helpers must be [signal, 0|1] pairs")
            helpers.append((h[0], h[1]))
        instances.append(LockInstance(style, targets, key_bits,
                                      correct_bits, tuple(helpers)))

    plan = LockPlan(doc["source_circuit"], key_width, seed, tuple(instances))
    _check_structure(plan)
    return plan


def parse_plan(text: str) -> LockPlan:
    """Parse a lockplan_v1 JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise PlanError(f"plan is not valid JSON: {e}") from None
    return plan_from_dict(doc)


def _check_structure(p: LockPlan) -> None:
    """Structural invariants that need no netlist: arities and the key-bit partition."""
    claimed: dict[int, int] = {}
    targets_seen: dict[str, int] = {}
    for idx, inst in enumerate(p.instances):
        where = f"instances[{idx}]"
        n_targets = 2 if inst.style == "pairwise_subgraph" else 1
        if len(inst.targets) != n_targets:
            raise PlanError(f"{where}: {inst.style} takes exactly "
                            f"{n_targets} target(s)")
        if inst.style == "pairwise_subgraph" and inst.targets[0] == inst.targets[1]:
            raise PlanError(f"{where}: pairwise targets must differ")
        if inst.style == "perturb_restore":
            if len(inst.key_bits) < 2:
                raise PlanError(f"{where}: perturb_restore needs >= 2 key bits")
            if not inst.helpers:
                raise PlanError(f"{where}: perturb_restore needs helper signals")
        else:
            if len(inst.key_bits) != 1:
                raise PlanError(f"{where}: {inst.style} uses exactly 1 key bit")
        if inst.style == "mux_lock" and len(inst.helpers) != 1:
            raise PlanError(f"{where}: mux_lock needs exactly 1 decoy helper")
        if inst.style in ("xor_xnor", "pairwise_subgraph") and inst.helpers:
            raise PlanError(f"{where}: {inst.style} takes no helpers")
        if len(inst.correct_bits) != len(inst.key_bits):
            raise PlanError(f"{where}: correct_bits length != key_bits length")
        for b in inst.key_bits:
            if b in claimed:
                raise PlanError(
                    f"{where}: key bit {b} already claimed by "
                    f"instances[{claimed[b]}]")
            if not 0 <= b < p.key_width:
                raise PlanError(f"{where}: key bit {b} outside 0..{p.key_width - 1}")
            claimed[b] = idx
        for t in inst.targets:
            if t in targets_seen:
                raise PlanError(
                    f"{where}: target {t} already locked by "
                    f"instances[{targets_seen[t]}]")
            targets_seen[t] = idx
    missing = set(range(p.key_width)) - set(claimed)
    if missing:
        raise PlanError(f"plan: key bits {sorted(missing)} are not assigned "
                        "to any instance")


def validate_plan(p: LockPlan, n: Netlist, max_helpers: int = MAX_HELPERS) -> list[Violation]:
    """Check a structurally sound plan against a concrete key-free netlist.

    Returns an empty list when the plan can be compiled safely: all targets
    are gate outputs, decoys/pairs/helpers respect the transitive-fanout
    rules, and the insertion as a whole introduces no combinational cycle.
    """
    violations = []
    if n.key_inputs:
        violations.append(Violation("locked-source", n.name,
                                    "plan validation requires a key-free netlist"))
        return violations
    gate_outs = {g.output for g in n.gates}
    known = gate_outs | set(n.primary_inputs)
    for s in known:
        if s.startswith(RESERVED_PREFIX):
            violations.append(Violation("reserved-prefix", s,
                                        f"circuit already uses reserved prefix "
                                        f"{RESERVED_PREFIX!r}"))
            return violations

    for idx, inst in enumerate(p.instances):
        where = f"instances[{idx}]"
        for t in inst.targets:
            if t not in gate_outs:
                violations.append(Violation(
                    "invalid-target", t,
                    f"{where}: target must be an existing gate output"))
        if any(t not in gate_outs for t in inst.targets):
            continue
        if inst.style == "mux_lock":
            decoy = inst.helpers[0][0]
            if decoy not in known:
                violations.append(Violation("unknown-helper", decoy,
                                            f"{where}: decoy is not a signal"))
            else:
                tfo = transitive_fanout(n, [inst.targets[0]])
                if decoy == inst.targets[0] or decoy in tfo:
                    violations.append(Violation(
                        "cycle-risk", decoy,
                        f"{where}: decoy lies in the target's transitive fanout"))
        elif inst.style == "pairwise_subgraph":
            w1, w2 = inst.targets
            if w2 in transitive_fanout(n, [w1]) or w1 in transitive_fanout(n, [w2]):
                violations.append(Violation(
                    "cycle-risk", f"{w1}/{w2}",
                    f"{where}: pairwise targets lie in each other's fanout"))
        elif inst.style == "perturb_restore":
            if not 1 <= len(inst.helpers) <= max_helpers:
                violations.append(Violation(
                    "helper-count", inst.targets[0],
                    f"{where}: helper count {len(inst.helpers)} outside "
                    f"1..{max_helpers}"))
            tfo = transitive_fanout(n, [inst.targets[0]])
            for h, _ in inst.helpers:
                if h not in known:
                    violations.append(Violation("unknown-helper", h,
                                                f"{where}: helper is not a signal"))
                elif h == inst.targets[0] or h in tfo:
                    violations.append(Violation(
                        "cycle-risk", h,
                        f"{where}: helper lies in the target's transitive fanout"))

    if not violations and _insertion_creates_cycle(n, p.instances):
        violations.append(Violation("cycle-risk", p.source_circuit,
                                    "instances jointly create a combinational cycle"))
    return violations


def _insertion_creates_cycle(n: Netlist, instances) -> bool:
    """Dry-run the rewiring on a plain successor graph and cycle-check it."""
    succ: dict = {s: set() for s in n.signals}
    for g in n.gates:
        for f in g.fanin:
            succ.setdefault(f, set()).add(g.output)
    for idx, inst in enumerate(instances):
        # snapshot current sinks and rewire every target first; tap edges are
        # added afterwards because the lock blocks read the pre-lock wires
        snapshots = [set(succ.get(w, ())) for w in inst.targets]
        nodes = [("lk", idx, t_i) for t_i in range(len(inst.targets))]
        for t_i, w in enumerate(inst.targets):
            succ[nodes[t_i]] = snapshots[t_i]
            succ[w] = {nodes[t_i]}
        for t_i, w in enumerate(inst.targets):
            taps = [h for h, _ in inst.helpers]
            if inst.style == "pairwise_subgraph":
                taps.append(inst.targets[1 - t_i])
            for h in taps:
                succ.setdefault(h, set()).add(nodes[t_i])
    # iterative three-color DFS
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {s: WHITE for s in succ}
    for root in succ:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                c = color.get(nxt, WHITE)
                if c == GRAY:
                    return True
                if c == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return False
