"""SAT-based security evaluation: CEC, the oracle-guided DIP attack, and
key-space measurement.

The attack encodes circuits through a hash-consed AND/XOR literal encoder
with constant folding, so structurally identical cones (the non-key logic
shared by both miter copies, or the matching halves of an equivalence
miter) collapse onto the same solver variables.  Per-DIP constraints fold
the fixed input pattern through the netlist and only key-dependent logic
reaches the solver.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .cnf import CnfFormula
from .netlist import KeyVector, Netlist, bind_key
from .sim import EXHAUSTIVE_INPUT_LIMIT, PatternBlock, evaluate, evaluate_single
from .solver import Solver, SolverTimeout

DEFAULT_DIP_BUDGET = 10_000
DEFAULT_TIME_BUDGET_S = 600.0
DEFAULT_COUNT_CAP = 65_536
ENUM_KEY_WIDTH_LIMIT = 20

_KEYINPUT_RE = re.compile(r"keyinput(\d+)$")


class AttackError(RuntimeError):
    """Internal inconsistency (encoder/compiler bug), not a normal outcome."""


# ----------------------------------------------------------------------
# hash-consed literal encoder
# ----------------------------------------------------------------------

TRUE = 1
FALSE = -1


class LitEncoder:
    """Emit CNF for gate networks over signed literals with structural hashing.

    Variable 1 is pinned true, so the literals ``+1`` / ``-1`` double as the
    constants and folding never needs a special case.  ``sink`` is anything
    with ``new_var()`` and ``add_clause()``.
    """

    def __init__(self, sink):
        self.sink = sink
        v = sink.new_var()
        assert v == 1, "encoder must own a fresh solver/formula"
        sink.add_clause([TRUE])
        self._and_cache: dict[tuple[int, int], int] = {}
        self._xor_cache: dict[tuple[int, int], int] = {}

    def new_input(self) -> int:
        return self.sink.new_var()

    def const(self, bit: int) -> int:
        return TRUE if bit else FALSE

    def and2(self, a: int, b: int) -> int:
        if a == FALSE or b == FALSE or a == -b:
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE or a == b:
            return a
        key = (a, b) if a < b else (b, a)
        y = self._and_cache.get(key)
        if y is None:
            y = self.sink.new_var()
            self.sink.add_clause([-y, a])
            self.sink.add_clause([-y, b])
            self.sink.add_clause([y, -a, -b])
            self._and_cache[key] = y
        return y

    def and_many(self, lits) -> int:
        acc = TRUE
        for l in lits:
            acc = self.and2(acc, l)
            if acc == FALSE:
                return FALSE
        return acc

    def or_many(self, lits) -> int:
        return -self.and_many([-l for l in lits])

    def xor2(self, a: int, b: int) -> int:
        neg = 1
        if a < 0:
            a, neg = -a, -neg
        if b < 0:
            b, neg = -b, -neg
        if a > b:
            a, b = b, a
        if a == 1:  # xor with constant true
            return neg * -b
        if a == b:
            return neg * FALSE
        y = self._xor_cache.get((a, b))
        if y is None:
            y = self.sink.new_var()
            self.sink.add_clause([-y, a, b])
            self.sink.add_clause([-y, -a, -b])
            self.sink.add_clause([y, -a, b])
            self.sink.add_clause([y, a, -b])
            self._xor_cache[(a, b)] = y
        return neg * y

    def gate(self, kind: str, fan: list[int]) -> int:
        if kind == "AND":
            return self.and_many(fan)
        if kind == "NAND":
            return -self.and_many(fan)
        if kind == "OR":
            return self.or_many(fan)
        if kind == "NOR":
            return -self.or_many(fan)
        if kind == "XOR":
            return self.xor2(fan[0], fan[1])
        if kind == "XNOR":
            return -self.xor2(fan[0], fan[1])
        if kind == "NOT":
            return -fan[0]
        return fan[0]  # BUFF


def encode_signals(enc: LitEncoder, n: Netlist, base: dict[str, int]) -> dict[str, int]:
    """Encode all gates on top of preassigned input literals (constants fold)."""
    lits = dict(base)
    for g in n.topo_gates():
        lits[g.output] = enc.gate(g.kind, [lits[f] for f in g.fanin])
    return lits


def _lit_value(solver, lit: int) -> int:
    if lit == TRUE:
        return 1
    if lit == FALSE:
        return 0
    v = solver.model_value(abs(lit))
    return int(v) if lit > 0 else 1 - int(v)


# ----------------------------------------------------------------------
# combinational equivalence checking
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CecResult:
    equivalent: bool
    counterexample: Optional[dict[str, int]] = None

    def __bool__(self):
        return self.equivalent


def cec_check(a: Netlist, b: Netlist, solver_factory=Solver) -> CecResult:
    """SAT miter equivalence check of two key-free netlists.

    Outputs are compared positionally; the primary-input name sets must
    match.  Returns a distinguishing input assignment when inequivalent.
    """
    if a.key_inputs or b.key_inputs:
        raise ValueError("cec_check expects key-free netlists")
    if set(a.primary_inputs) != set(b.primary_inputs):
        raise ValueError("primary-input interfaces differ")
    if len(a.primary_outputs) != len(b.primary_outputs):
        raise ValueError("primary-output counts differ")
    s = solver_factory()
    enc = LitEncoder(s)
    base = {pi: enc.new_input() for pi in a.primary_inputs}
    la = encode_signals(enc, a, base)
    lb = encode_signals(enc, b, base)
    diffs = []
    for oa, ob in zip(a.primary_outputs, b.primary_outputs):
        d = enc.xor2(la[oa], lb[ob])
        if d != FALSE:
            diffs.append(d)
    if not diffs:
        return CecResult(True)
    s.add_clause(diffs)
    if not s.solve():
        return CecResult(True)
    cex = {pi: _lit_value(s, base[pi]) for pi in a.primary_inputs}
    return CecResult(False, cex)


# ----------------------------------------------------------------------
# key enumeration (brute force ground truth)
# ----------------------------------------------------------------------

def enumerate_keys(locked: Netlist, oracle: Netlist) -> list[KeyVector]:
    """Brute-force the full functional key equivalence class.

    Exhaustive simulation decides equivalence for small input counts; wider
    circuits fall back to one CEC per key.  Guarded to <= 20 key bits.
    """
    width = len(locked.key_inputs)
    if width == 0:
        raise ValueError("netlist has no key inputs")
    if width > ENUM_KEY_WIDTH_LIMIT:
        raise ValueError(f"key width {width} exceeds enumeration guard "
                         f"({ENUM_KEY_WIDTH_LIMIT})")
    good = []
    if len(oracle.primary_inputs) <= EXHAUSTIVE_INPUT_LIMIT:
        blk = PatternBlock.exhaustive(list(oracle.primary_inputs))
        ref = evaluate(oracle, blk)
        ref_cols = [ref[o] for o in oracle.primary_outputs]
        for kv in range(1 << width):
            key = KeyVector.from_int(kv, width)
            got = evaluate(locked, blk, key)
            got_cols = [got[o] for o in locked.primary_outputs]
            if all((r == g).all() for r, g in zip(ref_cols, got_cols)):
                good.append(key)
    else:
        for kv in range(1 << width):
            key = KeyVector.from_int(kv, width)
            if cec_check(bind_key(locked, key), oracle).equivalent:
                good.append(key)
    return good


# ----------------------------------------------------------------------
# remaining-key-space counting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class KeySpaceCount:
    count: int
    exact: bool

    def __str__(self):
        return str(self.count) if self.exact else f">={self.count}"

    def to_dict(self) -> dict:
        return {"count": self.count, "exact": self.exact}


def _key_vars(var_map: dict[str, int]) -> list[int]:
    keyed = []
    for sig, var in var_map.items():
        m = _KEYINPUT_RE.match(sig)
        if m:
            keyed.append((int(m.group(1)), var))
    keyed.sort()
    return [v for _, v in keyed]


def dip_constraint_formula(locked: Netlist, dips: Sequence[tuple[int, ...]],
                           responses: Sequence[tuple[int, ...]]) -> CnfFormula:
    """Key-variable constraint system of a finished (or stopped) attack.

    One folded copy of the locked circuit per DIP, inputs fixed to the DIP
    pattern and outputs pinned to the oracle response; ``var_maps[0]`` maps
    the key inputs.  A key satisfies the formula iff it is consistent with
    every recorded DIP.
    """
    f = CnfFormula()
    enc = LitEncoder(f)
    key_map = {s: enc.new_input() for s in locked.key_inputs}
    f.var_maps.append(dict(key_map))
    for x, y in zip(dips, responses):
        base = dict(key_map)
        for s, bit in zip(locked.primary_inputs, x):
            base[s] = enc.const(bit)
        lits = encode_signals(enc, locked, base)
        for o, bit in zip(locked.primary_outputs, y):
            lit = lits[o] if bit else -lits[o]
            if lit == FALSE:
                raise AttackError(
                    f"DIP response contradicts the netlist on output {o}")
            if lit != TRUE:
                f.add_clause([lit])
    return f


def count_remaining_keys(constraints: CnfFormula, cap: int = DEFAULT_COUNT_CAP,
                         solver_factory=Solver) -> KeySpaceCount:
    """Count keys satisfying an attack constraint system by model enumeration.

    Enumerates assignments of the copy-1 key variables with blocking clauses
    until exhaustion (exact count) or ``cap`` models (lower bound).
    """
    if not constraints.var_maps:
        raise ValueError("constraint formula carries no variable map")
    kvars = _key_vars(constraints.var_maps[0])
    s = solver_factory()
    while s.nvars < constraints.num_vars:
        s.new_var()
    ok = True
    for c in constraints.clauses:
        ok = s.add_clause(list(c)) and ok
    if not ok:
        return KeySpaceCount(0, True)
    count = 0
    while count < cap:
        if not s.solve():
            return KeySpaceCount(count, True)
        count += 1
        block = [-v if s.model_value(v) else v for v in kvars]
        if not block or not s.add_clause(block):
            return KeySpaceCount(count, True)
    return KeySpaceCount(cap, False)


# ----------------------------------------------------------------------
# the oracle-guided DIP attack
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AttackReport:
    outcome: str                       # key_recovered | budget_exhausted | timeout
    recovered_key: Optional[KeyVector]
    dip_count: int
    dips: tuple[tuple[int, ...], ...]  # bits in locked.primary_inputs order
    solver_time_s: float
    remaining_keys: Optional[KeySpaceCount]
    budget: dict

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "recovered_key": (self.recovered_key.to_string()
                              if self.recovered_key else None),
            "dip_count": self.dip_count,
            "dips": ["".join(map(str, x)) for x in self.dips],
            "solver_time_s": self.solver_time_s,
            "remaining_keys": (self.remaining_keys.to_dict()
                               if self.remaining_keys else None),
            "budget": self.budget,
        }


def dip_attack(locked: Netlist, oracle: Netlist,
               dip_budget: int = DEFAULT_DIP_BUDGET,
               time_budget_s: float = DEFAULT_TIME_BUDGET_S,
               count_cap: int = DEFAULT_COUNT_CAP,
               solver_factory=Solver) -> AttackReport:
    """Classic oracle-guided distinguishing-input-pattern attack.

    Builds a two-copy shared-input miter over the locked netlist demanding
    differing outputs under two candidate keys.  While it stays satisfiable,
    each model yields a DIP; the oracle's response is appended as a
    constraint on both key copies.  Once no distinguishing input remains,
    any key consistent with the recorded responses is functionally correct;
    one is extracted, CEC-verified against the oracle, and reported together
    with the remaining-key-space count.

    Parameters
    ----------
    locked: Netlist
        Netlist with free key inputs (its ``correct_key`` is never consulted).
    oracle: Netlist
        Key-free functional original, queried by simulation only.
    dip_budget, time_budget_s:
        Loop limits; exceeding one yields outcome ``budget_exhausted`` or
        ``timeout`` instead of a recovered key.
    """
    if not locked.key_inputs:
        raise ValueError("locked netlist has no key inputs")
    if oracle.key_inputs:
        raise ValueError("oracle must be key-free")
    if set(oracle.primary_inputs) != set(locked.primary_inputs):
        raise ValueError("primary-input interfaces differ")
    if len(oracle.primary_outputs) != len(locked.primary_outputs):
        raise ValueError("primary-output counts differ")

    t_start = time.monotonic()
    deadline = t_start + time_budget_s
    budget = {"dip_budget": dip_budget, "time_budget_s": time_budget_s}

    s = solver_factory()
    enc = LitEncoder(s)
    base = {pi: enc.new_input() for pi in locked.primary_inputs}
    keys1 = {kn: enc.new_input() for kn in locked.key_inputs}
    keys2 = {kn: enc.new_input() for kn in locked.key_inputs}
    lits1 = encode_signals(enc, locked, {**base, **keys1})
    lits2 = encode_signals(enc, locked, {**base, **keys2})
    diffs = [d for d in (enc.xor2(lits1[o], lits2[o])
                         for o in locked.primary_outputs) if d != FALSE]
    act = s.new_var()
    s.add_clause([-act] + diffs)

    dips: list[tuple[int, ...]] = []
    responses: list[tuple[int, ...]] = []

    def _report(outcome, key=None):
        elapsed = time.monotonic() - t_start
        remaining = None
        try:
            remaining = count_remaining_keys(
                dip_constraint_formula(locked, dips, responses), cap=count_cap,
                solver_factory=solver_factory)
        except AttackError:
            raise
        return AttackReport(outcome, key, len(dips), tuple(dips),
                            elapsed, remaining, budget)

    while True:
        if len(dips) >= dip_budget:
            return _report("budget_exhausted")
        try:
            sat = s.solve([act], deadline=deadline)
        except SolverTimeout:
            return _report("timeout")
        if not sat:
            break
        x = tuple(_lit_value(s, base[pi]) for pi in locked.primary_inputs)
        y = evaluate_single(oracle, dict(zip(locked.primary_inputs, x)))
        dips.append(x)
        responses.append(y)
        # pin both key copies to the oracle response on this pattern
        const_base = {pi: enc.const(b) for pi, b in zip(locked.primary_inputs, x)}
        for key_map in (keys1, keys2):
            lits = encode_signals(enc, locked, {**const_base, **key_map})
            for o, bit in zip(locked.primary_outputs, y):
                lit = lits[o] if bit else -lits[o]
                if lit == FALSE:
                    raise AttackError(
                        f"oracle response contradicts key-independent logic "
                        f"on output {o}")
                if lit != TRUE:
                    s.add_clause([lit])
        if time.monotonic() > deadline:
            return _report("timeout")

    # key space collapsed: any DIP-consistent key is functionally correct
    try:
        sat = s.solve(deadline=deadline)
    except SolverTimeout:
        return _report("timeout")
    if not sat:
        raise AttackError("DIP constraints unsatisfiable: no key reproduces "
                          "the oracle (encoder or compiler bug)")
    bits = tuple(_lit_value(s, keys1[kn]) for kn in locked.key_inputs)
    key = KeyVector(bits)
    check = cec_check(bind_key(locked, key), oracle, solver_factory=solver_factory)
    if not check.equivalent:
        raise AttackError("recovered key failed CEC verification "
                          "(encoder or compiler bug)")
    return _report("key_recovered", key)
