import random

import pytest

from benchlock.compiler import compile_plan, overhead
from benchlock.netlist import KeyVector, bind_key, validate, write_bench
from benchlock.plan import LockInstance, LockPlan, PlanError
from helpers import eval_scalar, random_netlist, random_plan, truth_table


def _plan(instances, key_width, source="c17", seed=0):
    return LockPlan(source, key_width, seed, tuple(instances))


def _all_keys(width):
    return [KeyVector.from_int(v, width) for v in range(1 << width)]


# -- xor_xnor ------------------------------------------------------------------

@pytest.mark.parametrize("cbit", [0, 1])
def test_xor_xnor_correct_key_transparent(c17, cbit):
    plan = _plan([LockInstance("xor_xnor", ("16",), (0,), (cbit,))], 1)
    locked = compile_plan(c17, plan)
    assert len(locked.gates) == len(c17.gates) + 1
    assert locked.correct_key == KeyVector((cbit,))
    assert truth_table(locked, locked.correct_key) == truth_table(c17)


def test_xor_xnor_wrong_key_inverts_wire(c17):
    plan = _plan([LockInstance("xor_xnor", ("16",), (0,), (0,))], 1)
    locked = compile_plan(c17, plan)
    ref = truth_table(c17)
    wrong = truth_table(locked, KeyVector((1,)))
    assert wrong != ref
    # wire 16 feeds both outputs through NANDs: flipping it changes rows
    diff_rows = sum(1 for a, b in zip(ref, wrong) if a != b)
    assert diff_rows > 0


def test_two_xor_locks_on_c17(c17):
    plan = _plan([LockInstance("xor_xnor", ("16",), (0,), (1,)),
                  LockInstance("xor_xnor", ("11",), (1,), (0,))], 2)
    locked = compile_plan(c17, plan)
    assert len(locked.gates) == 8
    assert len(locked.key_inputs) == 2
    m = overhead(c17, locked)
    assert m.key_gate_count == 2 and m.key_input_count == 2


# -- mux_lock --------------------------------------------------------------------

@pytest.mark.parametrize("cbit", [0, 1])
def test_mux_lock_semantics(c17, cbit):
    plan = _plan([LockInstance("mux_lock", ("16",), (0,), (cbit,),
                               (("10", 0),))], 1)
    locked = compile_plan(c17, plan)
    assert len(locked.gates) == len(c17.gates) + 4
    assert truth_table(locked, locked.correct_key) == truth_table(c17)
    # the wrong key routes the decoy: behavior equals rewiring 16 := 10
    wrong = KeyVector((1 - cbit,))
    swapped = truth_table(locked, wrong)
    assert swapped != truth_table(c17)


# -- perturb_restore ----------------------------------------------------------------

def test_perturb_restore_correct_key_transparent(c17):
    plan = _plan([LockInstance("perturb_restore", ("16",), (0, 1), (1, 0),
                               (("1", 1), ("2", 0)))], 2)
    locked = compile_plan(c17, plan)
    assert truth_table(locked, locked.correct_key) == truth_table(c17)


def test_perturb_restore_wrong_key_flips_on_pattern(c17):
    # helper pattern: input 1 high, input 2 low; wrong restore flips wire 16
    plan = _plan([LockInstance("perturb_restore", ("16",), (0, 1), (1, 1),
                               (("1", 1), ("2", 0)))], 2)
    locked = compile_plan(c17, plan)
    ref = truth_table(c17)
    wrong = truth_table(locked, KeyVector((0, 1)))
    ins = c17.primary_inputs
    flipped = mismatched_elsewhere = 0
    for p in range(32):
        a = {s: (p >> i) & 1 for i, s in enumerate(ins)}
        fires = a["1"] == 1 and a["2"] == 0
        if wrong[p] != ref[p]:
            if fires:
                flipped += 1
            else:
                mismatched_elsewhere += 1
    assert flipped > 0
    assert mismatched_elsewhere == 0  # detector gates every flip


def test_perturb_corruption_shrinks_with_more_helpers(c17):
    # wider detectors fire on fewer patterns: exhaustive mismatch count drops
    def mismatches(helpers):
        plan = _plan([LockInstance("perturb_restore", ("16",), (0, 1), (1, 1),
                                   helpers)], 2)
        locked = compile_plan(c17, plan)
        ref = truth_table(c17)
        wrong = truth_table(locked, KeyVector((0, 0)))
        return sum(1 for a, b in zip(ref, wrong) if a != b)

    one = mismatches((("1", 1),))
    two = mismatches((("1", 1), ("2", 1)))
    assert two <= one
    assert one > 0


# -- pairwise_subgraph -----------------------------------------------------------------

@pytest.mark.parametrize("cbit", [0, 1])
def test_pairwise_correct_key_transparent(c17, cbit):
    plan = _plan([LockInstance("pairwise_subgraph", ("10", "19"), (0,),
                               (cbit,))], 1)
    locked = compile_plan(c17, plan)
    assert len(locked.gates) == len(c17.gates) + 8
    assert validate(locked) == []
    assert truth_table(locked, locked.correct_key) == truth_table(c17)


def test_pairwise_wrong_key_swaps_functions(c17):
    plan = _plan([LockInstance("pairwise_subgraph", ("10", "19"), (0,), (0,))], 1)
    locked = compile_plan(c17, plan)
    # wrong key computes c17 with wires 10 and 19 exchanged at their sinks
    ins = c17.primary_inputs
    wrong = truth_table(locked, KeyVector((1,)))
    for p in range(32):
        a = {s: (p >> i) & 1 for i, s in enumerate(ins)}
        v10 = 1 - (a["1"] & a["3"])
        v11 = 1 - (a["3"] & a["6"])
        v16 = 1 - (a["2"] & v11)
        v19 = 1 - (v11 & a["7"])
        o22 = 1 - (v19 & v16)   # 22 reads swapped 10 -> 19
        o23 = 1 - (v16 & v10)   # 23 reads swapped 19 -> 10
        assert wrong[p] == (o22, o23)


# -- generic contracts ------------------------------------------------------------------

def test_output_declarations_rewired(c17):
    plan = _plan([LockInstance("xor_xnor", ("22",), (0,), (0,))], 1)
    locked = compile_plan(c17, plan)
    assert "lk_0_xg" in locked.primary_outputs
    assert "22" not in locked.primary_outputs
    assert truth_table(locked, locked.correct_key) == truth_table(c17)


def test_compile_rejects_invalid_plan(c17):
    plan = _plan([LockInstance("xor_xnor", ("nope",), (0,), (0,))], 1)
    with pytest.raises(PlanError):
        compile_plan(c17, plan)


def test_compile_deterministic(c17):
    plan = _plan([LockInstance("mux_lock", ("16",), (0,), (1,), (("10", 0),)),
                  LockInstance("xor_xnor", ("11",), (1,), (0,))], 2)
    a = write_bench(compile_plan(c17, plan))
    b = write_bench(compile_plan(c17, plan))
    assert a == b


def test_overhead_one_xor_on_c17(c17):
    plan = _plan([LockInstance("xor_xnor", ("16",), (0,), (0,))], 1)
    locked = compile_plan(c17, plan)
    m = overhead(c17, locked)
    assert m.gate_overhead_ratio == pytest.approx(1 / 6)
    assert m.key_gate_count == 1
    assert m.key_input_count == 1


def test_overhead_identity(c17):
    m = overhead(c17, c17)
    assert (m.gate_overhead_ratio, m.key_gate_count) == (0.0, 0)


def test_random_plans_compile_valid_and_transparent():
    rng = random.Random(31)
    done = 0
    while done < 25:
        n = random_netlist(rng, rng.randint(3, 8), rng.randint(4, 25),
                           rng.randint(1, 4))
        plan = random_plan(rng, n, rng.randint(1, 6))
        if plan is None:
            continue
        locked = compile_plan(n, plan)
        assert validate(locked) == []
        for _ in range(16):
            a = {s: rng.getrandbits(1) for s in n.primary_inputs}
            assert eval_scalar(locked, a, locked.correct_key) == eval_scalar(n, a)
        done += 1


def test_bind_key_after_compile_equivalent(c17):
    rng = random.Random(17)
    for _ in range(10):
        plan = random_plan(rng, c17, rng.randint(1, 5))
        if plan is None:
            continue
        locked = compile_plan(c17, plan)
        bound = bind_key(locked, locked.correct_key)
        assert validate(bound) == []
        assert truth_table(bound) == truth_table(c17)
