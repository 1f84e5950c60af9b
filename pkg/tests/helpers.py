"""Shared test utilities: independent oracles and random-instance generators.

The scalar evaluator here is deliberately written from gate truth tables
with no imports from the package's simulator, so tests can cross-check the
production code against an independent path.
"""
from __future__ import annotations

import random

from benchlock.netlist import Gate, KeyVector, Netlist
from benchlock.plan import LockInstance, LockPlan, validate_plan


def eval_scalar(n: Netlist, assignment: dict[str, int],
                key: KeyVector | None = None) -> tuple[int, ...]:
    """Reference single-pattern evaluator (truth-table semantics)."""
    vals = dict(assignment)
    if key is not None:
        for s, b in zip(n.key_inputs, key.bits):
            vals[s] = b
    remaining = list(n.gates)
    while remaining:
        progressed = False
        rest = []
        for g in remaining:
            if all(f in vals for f in g.fanin):
                ins = [vals[f] for f in g.fanin]
                if g.kind == "AND":
                    v = int(all(ins))
                elif g.kind == "NAND":
                    v = int(not all(ins))
                elif g.kind == "OR":
                    v = int(any(ins))
                elif g.kind == "NOR":
                    v = int(not any(ins))
                elif g.kind == "XOR":
                    v = ins[0] ^ ins[1]
                elif g.kind == "XNOR":
                    v = 1 - (ins[0] ^ ins[1])
                elif g.kind == "NOT":
                    v = 1 - ins[0]
                elif g.kind == "BUFF":
                    v = ins[0]
                else:
                    raise ValueError(g.kind)
                vals[g.output] = v
                progressed = True
            else:
                rest.append(g)
        if not progressed:
            raise ValueError("not a DAG or missing inputs")
        remaining = rest
    return tuple(vals[o] for o in n.primary_outputs)


def truth_table(n: Netlist, key: KeyVector | None = None) -> list[tuple[int, ...]]:
    """All outputs over all input patterns, pattern index = packed input bits."""
    ins = n.primary_inputs
    rows = []
    for p in range(1 << len(ins)):
        assignment = {s: (p >> i) & 1 for i, s in enumerate(ins)}
        rows.append(eval_scalar(n, assignment, key))
    return rows


def random_netlist(rng: random.Random, n_inputs: int, n_gates: int,
                   n_outputs: int, name: str = "rand") -> Netlist:
    """Random valid combinational DAG with mixed gate kinds."""
    inputs = [f"i{k}" for k in range(n_inputs)]
    signals = list(inputs)
    gates = []
    kinds = ["AND", "OR", "NAND", "NOR", "XOR", "XNOR", "NOT", "BUFF"]
    for k in range(n_gates):
        kind = rng.choice(kinds)
        if kind in ("NOT", "BUFF"):
            fanin = [rng.choice(signals)]
        elif kind in ("XOR", "XNOR"):
            fanin = [rng.choice(signals), rng.choice(signals)]
        else:
            arity = rng.randint(2, 4)
            fanin = [rng.choice(signals) for _ in range(arity)]
        out = f"g{k}"
        gates.append(Gate(out, kind, tuple(fanin)))
        signals.append(out)
    gate_outs = [g.output for g in gates]
    n_outputs = min(n_outputs, len(gate_outs))
    outputs = rng.sample(gate_outs, n_outputs)
    return Netlist(name, inputs, (), outputs, gates)


def random_plan(rng: random.Random, n: Netlist, key_width: int) -> LockPlan | None:
    """Random valid plan over a netlist, or None if sampling fails."""
    from benchlock.analysis import compute_features, rank_nodes
    from benchlock.planner import heuristic_plan

    style = rng.choice(["xor_xnor", "perturb_restore", "mux_lock",
                        "pairwise_subgraph", "hybrid"])
    ranked = rank_nodes(n, compute_features(n))
    try:
        plan = heuristic_plan(n, ranked, key_width, style,
                              seed=rng.getrandbits(32))
    except Exception:
        return None
    return plan if not validate_plan(plan, n) else None


def handcrafted_plan(style: str, target: str, key_bits, correct_bits,
                     helpers=(), key_width=None, targets=None,
                     source="c17", seed=0) -> LockPlan:
    inst = LockInstance(style, tuple(targets or (target,)), tuple(key_bits),
                        tuple(correct_bits), tuple(helpers))
    return LockPlan(source, key_width or len(key_bits), seed, (inst,))


# -- multiprocessing workers (top level for picklability) -------------------

def attack_cell_dips(args) -> tuple:
    """(circuit_name, style, width, seed) -> (args..., dip_count)."""
    circuit, style, width, seed = args
    from benchlock import benchgen
    from benchlock.analysis import compute_features, rank_nodes
    from benchlock.attack import dip_attack
    from benchlock.compiler import compile_plan
    from benchlock.planner import heuristic_plan

    orig = benchgen.generate(circuit)
    ranked = rank_nodes(orig, compute_features(orig))
    plan = heuristic_plan(orig, ranked, width, style, seed=seed)
    locked = compile_plan(orig, plan)
    rep = dip_attack(locked, orig)
    return circuit, style, width, seed, rep.outcome, rep.dip_count


def oracle_agreement_case(seed: int) -> dict:
    """One random small instance for attack/enumeration agreement checks."""
    from benchlock.attack import (count_remaining_keys, dip_attack,
                                  dip_constraint_formula, enumerate_keys)
    from benchlock.compiler import compile_plan
    from benchlock.sim import evaluate_single

    rng = random.Random(seed)
    plan = None
    while plan is None:
        n = random_netlist(rng, rng.randint(3, 12), rng.randint(6, 30),
                           rng.randint(1, 6), name=f"r{seed}")
        width = rng.randint(1, 8)
        plan = random_plan(rng, n, width)
    locked = compile_plan(n, plan)
    rep = dip_attack(locked, n)
    klass = {k.to_int() for k in enumerate_keys(locked, n)}
    responses = [evaluate_single(n, dict(zip(locked.primary_inputs, x)))
                 for x in rep.dips]
    count = count_remaining_keys(dip_constraint_formula(locked, rep.dips,
                                                        responses))
    return {
        "seed": seed,
        "outcome": rep.outcome,
        "recovered": rep.recovered_key.to_int() if rep.recovered_key else None,
        "class": klass,
        "count": count.count,
        "count_exact": count.exact,
        "report_count": rep.remaining_keys.count,
        "report_exact": rep.remaining_keys.exact,
    }
