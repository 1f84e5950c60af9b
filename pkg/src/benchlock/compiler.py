"""Deterministic compilation of lock plans into locked netlists.

Lock styles, in basis gates (2-input insertions only):

* ``xor_xnor``: ``w' = XOR(w, k)`` when the correct bit is 0, else XNOR.
* ``mux_lock``: 2:1 mux ``w' = OR(AND(NOT(k), a0), AND(k, a1))`` where the
  correct key bit selects the original wire and the wrong one a decoy.
* ``perturb_restore``: pattern detector ``p`` over helper literals, restore
  comparator ``r`` over key literals, ``w' = XOR(w, AND(p, NOT(r)))``.
* ``pairwise_subgraph``: two muxes cross-swapping a wire pair; the correct
  key bit routes each wire to itself.

Every former reader of a target (gates and OUTPUT declarations, including
lock gates inserted by earlier instances) is rewired to the new wire.  All
fresh names use the reserved ``lk_`` prefix with deterministic numbering.
"""
from __future__ import annotations

from dataclasses import dataclass

from .netlist import Gate, KeyVector, Netlist
from .plan import LockInstance, LockPlan, PlanError, validate_plan


@dataclass(frozen=True)
class OverheadMetrics:
    gate_overhead_ratio: float
    key_gate_count: int
    key_input_count: int

    def to_dict(self) -> dict:
        return {
            "gate_overhead_ratio": self.gate_overhead_ratio,
            "key_gate_count": self.key_gate_count,
            "key_input_count": self.key_input_count,
        }


class _Builder:
    """Mutable gate list with sink rewiring, used only during compilation."""

    def __init__(self, n: Netlist):
        self.gates: list[Gate] = list(n.gates)
        self.outputs: list[str] = list(n.primary_outputs)
        self.index: dict[str, list[int]] = {}
        for i, g in enumerate(self.gates):
            for f in g.fanin:
                self.index.setdefault(f, []).append(i)

    def add(self, out: str, kind: str, fanin: tuple[str, ...]) -> str:
        g = Gate(out, kind, fanin)
        self.gates.append(g)
        i = len(self.gates) - 1
        for f in fanin:
            self.index.setdefault(f, []).append(i)
        return out

    def rewire(self, old: str, new: str, skip: set[int]) -> None:
        """Point every reader of ``old`` (except gate indexes in ``skip``) at ``new``."""
        for i in list(self.index.get(old, ())):
            if i in skip:
                continue
            g = self.gates[i]
            fanin = tuple(new if f == old else f for f in g.fanin)
            self.gates[i] = Gate(g.output, g.kind, fanin)
            self.index[old].remove(i)
            self.index.setdefault(new, []).append(i)
        self.outputs = [new if o == old else o for o in self.outputs]


def _and_chain(b: _Builder, prefix: str, lits: list[str]) -> str:
    """Left-associated 2-input AND chain; a single literal passes through."""
    acc = lits[0]
    for j, nxt in enumerate(lits[1:]):
        acc = b.add(f"{prefix}{j}", "AND", (acc, nxt))
    return acc


def _mux(b: _Builder, prefix: str, sel: str, a0: str, a1: str) -> str:
    """w = a0 when sel=0, a1 when sel=1; 4 gates."""
    ns = b.add(f"{prefix}ns", "NOT", (sel,))
    p0 = b.add(f"{prefix}a0", "AND", (ns, a0))
    p1 = b.add(f"{prefix}a1", "AND", (sel, a1))
    return b.add(f"{prefix}mx", "OR", (p0, p1))


def _apply_xor_xnor(b: _Builder, i: int, inst: LockInstance, key_name: str) -> None:
    w = inst.targets[0]
    kind = "XOR" if inst.correct_bits[0] == 0 else "XNOR"
    before = len(b.gates)
    wp = b.add(f"lk_{i}_xg", kind, (w, key_name))
    b.rewire(w, wp, skip={before})


def _apply_mux_lock(b: _Builder, i: int, inst: LockInstance, key_name: str) -> None:
    w = inst.targets[0]
    decoy = inst.helpers[0][0]
    before = len(b.gates)
    if inst.correct_bits[0] == 0:
        wp = _mux(b, f"lk_{i}_", key_name, w, decoy)
    else:
        wp = _mux(b, f"lk_{i}_", key_name, decoy, w)
    b.rewire(w, wp, skip=set(range(before, len(b.gates))))


def _apply_perturb_restore(b: _Builder, i: int, inst: LockInstance,
                           key_names: list[str]) -> None:
    w = inst.targets[0]
    before = len(b.gates)
    hlits = []
    for j, (h, pol) in enumerate(inst.helpers):
        hlits.append(h if pol else b.add(f"lk_{i}_hn{j}", "NOT", (h,)))
    p = _and_chain(b, f"lk_{i}_p", hlits)
    klits = []
    for j, (k, c) in enumerate(zip(key_names, inst.correct_bits)):
        klits.append(k if c else b.add(f"lk_{i}_kn{j}", "NOT", (k,)))
    r = _and_chain(b, f"lk_{i}_r", klits)
    nr = b.add(f"lk_{i}_nr", "NOT", (r,))
    flip = b.add(f"lk_{i}_fl", "AND", (p, nr))
    wp = b.add(f"lk_{i}_xg", "XOR", (w, flip))
    b.rewire(w, wp, skip=set(range(before, len(b.gates))))


def _apply_pairwise(b: _Builder, i: int, inst: LockInstance, key_name: str) -> None:
    w1, w2 = inst.targets
    before = len(b.gates)
    if inst.correct_bits[0] == 0:
        wp1 = _mux(b, f"lk_{i}_s0", key_name, w1, w2)
        wp2 = _mux(b, f"lk_{i}_s1", key_name, w2, w1)
    else:
        wp1 = _mux(b, f"lk_{i}_s0", key_name, w2, w1)
        wp2 = _mux(b, f"lk_{i}_s1", key_name, w1, w2)
    skip = set(range(before, len(b.gates)))
    b.rewire(w1, wp1, skip=skip)
    b.rewire(w2, wp2, skip=skip)


def compile_plan(n: Netlist, p: LockPlan) -> Netlist:
    """Compile a validated plan into a locked netlist.

    The output declares ``keyinput0 .. keyinput<w-1>``, carries the plan's
    correct key, applies every instance in order, and passes ``validate``.

    Raises
    ------
    PlanError
        If the plan does not validate against ``n``.
    """
    bad = validate_plan(p, n)
    if bad:
        raise PlanError(f"plan does not validate against {n.name}: {bad[0]}")

    b = _Builder(n)
    key_names = [f"keyinput{j}" for j in range(p.key_width)]
    correct_bits = [0] * p.key_width
    for i, inst in enumerate(p.instances):
        for kb, cb in zip(inst.key_bits, inst.correct_bits):
            correct_bits[kb] = cb
        if inst.style == "xor_xnor":
            _apply_xor_xnor(b, i, inst, key_names[inst.key_bits[0]])
        elif inst.style == "mux_lock":
            _apply_mux_lock(b, i, inst, key_names[inst.key_bits[0]])
        elif inst.style == "perturb_restore":
            _apply_perturb_restore(b, i, inst,
                                   [key_names[kb] for kb in inst.key_bits])
        elif inst.style == "pairwise_subgraph":
            _apply_pairwise(b, i, inst, key_names[inst.key_bits[0]])
        else:  # pragma: no cover - schema rejects unknown styles
            raise PlanError(f"unknown style {inst.style}")

    return Netlist(
        n.name,
        n.primary_inputs,
        tuple(key_names),
        tuple(b.outputs),
        tuple(b.gates),
        KeyVector(tuple(correct_bits)),
    )


def overhead(n: Netlist, locked: Netlist) -> OverheadMetrics:
    """Structural cost of a locked netlist relative to its original."""
    added = len(locked.gates) - len(n.gates)
    return OverheadMetrics(
        gate_overhead_ratio=added / len(n.gates) if n.gates else 0.0,
        key_gate_count=added,
        key_input_count=len(locked.key_inputs),
    )
