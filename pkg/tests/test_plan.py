import json

import pytest

from benchlock.netlist import parse_bench
from benchlock.plan import (
    LockInstance,
    LockPlan,
    PlanError,
    parse_plan,
    plan_from_dict,
    serialize_plan,
    validate_plan,
)


def _doc(instances, key_width=1, **over):
    doc = {
        "version": "lockplan_v1",
        "source_circuit": "c17",
        "key_width": key_width,
        "seed": 0,
        "instances": instances,
    }
    doc.update(over)
    return doc


def _xor_inst(target="16", bit=0, cbit=1):
    return {"style": "xor_xnor", "targets": [target], "key_bits": [bit],
            "correct_bits": [cbit], "helpers": []}


def test_parse_minimal_plan():
    p = parse_plan(json.dumps(_doc([_xor_inst("w")], key_width=1,
                                   source_circuit="x")))
    assert p.key_width == 1
    assert p.instances[0].style == "xor_xnor"
    assert p.instances[0].targets == ("w",)


def test_partition_overlap_rejected():
    doc = _doc([_xor_inst("a", 0), _xor_inst("b", 0)], key_width=1)
    with pytest.raises(PlanError, match="already claimed"):
        plan_from_dict(doc)


def test_partition_gap_rejected():
    doc = _doc([_xor_inst("a", 0)], key_width=2)
    with pytest.raises(PlanError, match="not assigned"):
        plan_from_dict(doc)


def test_unknown_style_rejected():
    doc = _doc([{**_xor_inst(), "style": "rot_lock"}])
    with pytest.raises(PlanError, match="rot_lock"):
        plan_from_dict(doc)


def test_unknown_field_rejected():
    doc = _doc([_xor_inst()])
    doc["surprise"] = 1
    with pytest.raises(PlanError, match="surprise"):
        plan_from_dict(doc)


def test_unknown_instance_field_rejected():
    doc = _doc([{**_xor_inst(), "extra": True}])
    with pytest.raises(PlanError, match="extra"):
        plan_from_dict(doc)


def test_duplicate_target_rejected():
    doc = _doc([_xor_inst("a", 0), _xor_inst("a", 1)], key_width=2)
    with pytest.raises(PlanError, match="already locked"):
        plan_from_dict(doc)


def test_wrong_version_rejected():
    doc = _doc([_xor_inst()], version="lockplan_v0")
    with pytest.raises(PlanError, match="version"):
        plan_from_dict(doc)


def test_perturb_needs_two_bits_and_helpers():
    inst = {"style": "perturb_restore", "targets": ["w"], "key_bits": [0],
            "correct_bits": [0], "helpers": [["h", 1]]}
    with pytest.raises(PlanError, match=">= 2 key bits"):
        plan_from_dict(_doc([inst]))


def test_mux_needs_one_decoy():
    inst = {"style": "mux_lock", "targets": ["w"], "key_bits": [0],
            "correct_bits": [0], "helpers": []}
    with pytest.raises(PlanError, match="decoy"):
        plan_from_dict(_doc([inst]))


def test_serialize_parse_identity(c17):
    p = LockPlan("c17", 6, 99, (
        LockInstance("xor_xnor", ("16",), (0,), (1,)),
        LockInstance("perturb_restore", ("19",), (1, 2, 3, 4), (0, 1, 1, 0),
                     (("1", 1), ("2", 0))),
        LockInstance("mux_lock", ("11",), (5,), (0,), (("10", 0),)),
    ))
    assert parse_plan(serialize_plan(p)) == p


# -- validate_plan over a concrete netlist -----------------------------------

def test_validate_mux_decoy_in_tfo(c17):
    p = LockPlan("c17", 1, 0, (
        LockInstance("mux_lock", ("11",), (0,), (0,), (("22", 0),)),))
    v = validate_plan(p, c17)
    assert any(x.code == "cycle-risk" for x in v)


def test_validate_pairwise_c17_10_19_ok(c17):
    p = LockPlan("c17", 1, 0, (
        LockInstance("pairwise_subgraph", ("10", "19"), (0,), (0,)),))
    assert validate_plan(p, c17) == []


def test_validate_target_is_input(c17):
    p = LockPlan("c17", 1, 0, (
        LockInstance("xor_xnor", ("1",), (0,), (0,)),))
    assert any(x.code == "invalid-target" for x in validate_plan(p, c17))


def test_validate_requires_key_free(c17):
    text = "# key=0\nINPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)"
    locked = parse_bench(text)
    p = LockPlan("t", 1, 0, (LockInstance("xor_xnor", ("y",), (0,), (0,)),))
    assert any(x.code == "locked-source" for x in validate_plan(p, locked))


def test_validate_reserved_prefix():
    n = parse_bench("INPUT(a)\nOUTPUT(lk_0)\nlk_0 = NOT(a)")
    p = LockPlan("t", 1, 0, (LockInstance("xor_xnor", ("lk_0",), (0,), (0,)),))
    assert any(x.code == "reserved-prefix" for x in validate_plan(p, n))


def test_validate_perturb_helper_in_tfo(c17):
    p = LockPlan("c17", 2, 0, (
        LockInstance("perturb_restore", ("11",), (0, 1), (0, 0),
                     (("23", 1),)),))
    assert any(x.code == "cycle-risk" for x in validate_plan(p, c17))


def test_validate_helper_count_bound(c17):
    helpers = tuple((s, 1) for s in ("1", "2", "3", "6", "7", "1", "2", "3", "6"))
    p = LockPlan("c17", 2, 0, (
        LockInstance("perturb_restore", ("11",), (0, 1), (0, 0), helpers),))
    assert any(x.code == "helper-count" for x in validate_plan(p, c17))


def test_validate_joint_cycle_between_instances():
    # a locks q with helper inside TFO(p); b locks p with helper inside
    # TFO(q): each instance alone is fine, together they loop
    n = parse_bench(
        "INPUT(i1)\nINPUT(i2)\nOUTPUT(x2)\nOUTPUT(y2)\n"
        "p = NOT(i1)\nx1 = NOT(p)\nx2 = NOT(x1)\n"
        "q = NOT(i2)\ny1 = NOT(q)\ny2 = NOT(y1)")
    p = LockPlan("t", 4, 0, (
        LockInstance("perturb_restore", ("q",), (0, 1), (0, 0), (("x2", 1),)),
        LockInstance("perturb_restore", ("p",), (2, 3), (0, 0), (("y2", 1),)),
    ))
    per_instance_ok = validate_plan(
        LockPlan("t", 2, 0, p.instances[:1]), n) == [] and validate_plan(
        LockPlan("t", 2, 0, (LockInstance("perturb_restore", ("p",), (0, 1),
                                          (0, 0), (("y2", 1),)),)), n) == []
    assert per_instance_ok
    assert any(x.code == "cycle-risk" for x in validate_plan(p, n))
