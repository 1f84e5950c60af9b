"""Tseitin CNF encoding of netlists and DIMACS serialization."""
from __future__ import annotations

from dataclasses import dataclass, field

from .netlist import Netlist


@dataclass
class CnfFormula:
    """Plain clause container with per-copy signal-to-variable maps."""

    num_vars: int = 0
    clauses: list[list[int]] = field(default_factory=list)
    var_maps: list[dict[str, int]] = field(default_factory=list)

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, lits) -> None:
        lits = list(lits)
        if not lits:
            raise ValueError("empty clause")
        self.clauses.append(lits)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def _gate_clauses(out: int, kind: str, fan: list[int]) -> list[list[int]]:
    y = out
    if kind == "AND":
        cl = [[-y, a] for a in fan]
        cl.append([y] + [-a for a in fan])
    elif kind == "NAND":
        cl = [[y, a] for a in fan]
        cl.append([-y] + [-a for a in fan])
    elif kind == "OR":
        cl = [[y, -a] for a in fan]
        cl.append([-y] + list(fan))
    elif kind == "NOR":
        cl = [[-y, -a] for a in fan]
        cl.append([y] + list(fan))
    elif kind == "XOR":
        a, b = fan
        cl = [[-y, a, b], [-y, -a, -b], [y, -a, b], [y, a, -b]]
    elif kind == "XNOR":
        a, b = fan
        cl = [[y, a, b], [y, -a, -b], [-y, -a, b], [-y, a, -b]]
    elif kind == "NOT":
        a = fan[0]
        cl = [[-y, -a], [y, a]]
    else:  # BUFF
        a = fan[0]
        cl = [[-y, a], [y, -a]]
    return cl


def encode_cnf(n: Netlist, copies: int = 1, shared_inputs: bool = False) -> CnfFormula:
    """Standard Tseitin encoding, one variable per signal per copy.

    With ``copies=2`` and ``shared_inputs=True`` the primary-input variables
    are shared between both copies while key-input (and gate) variables stay
    per-copy -- the building block of key-comparison miters.
    """
    if copies not in (1, 2):
        raise ValueError("copies must be 1 or 2")
    f = CnfFormula()
    topo = n.topo_gates()
    shared: dict[str, int] = {}
    if copies == 2 and shared_inputs:
        for s in n.primary_inputs:
            shared[s] = f.new_var()
    for _ in range(copies):
        vmap: dict[str, int] = dict(shared)
        for s in n.primary_inputs:
            if s not in vmap:
                vmap[s] = f.new_var()
        for s in n.key_inputs:
            vmap[s] = f.new_var()
        for g in topo:
            vmap[g.output] = f.new_var()
        for g in topo:
            out = vmap[g.output]
            fan = [vmap[x] for x in g.fanin]
            for cl in _gate_clauses(out, g.kind, fan):
                f.add_clause(cl)
        f.var_maps.append(vmap)
    return f
