import random

import pytest

from benchlock.netlist import (
    BenchParseError,
    Gate,
    KeyVector,
    KeyWidthError,
    Netlist,
    bind_key,
    emit_verilog,
    parse_bench,
    transitive_fanout,
    validate,
    write_bench,
)
from helpers import eval_scalar, random_netlist, truth_table

AND_TEXT = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)"


def test_parse_minimal_and():
    n = parse_bench(AND_TEXT)
    assert n.primary_inputs == ("a", "b")
    assert n.primary_outputs == ("y",)
    assert n.gates == (Gate("y", "AND", ("a", "b")),)


def test_parse_c17_counts(c17):
    assert len(c17.primary_inputs) == 5
    assert len(c17.primary_outputs) == 2
    assert len(c17.gates) == 6
    assert all(g.kind == "NAND" for g in c17.gates)


def test_parse_case_insensitive_and_buf_alias():
    n = parse_bench("input(a)\noutput(y)\ny = buf(a)")
    assert n.gates[0].kind == "BUFF"


def test_parse_comments_and_blank_lines():
    n = parse_bench("# header\n\nINPUT(a)  # trailing\nOUTPUT(y)\ny = NOT(a)\n")
    assert n.gates[0].kind == "NOT"


def test_parse_unknown_kind_names_it():
    with pytest.raises(BenchParseError, match="FOO"):
        parse_bench("INPUT(a)\nOUTPUT(y)\ny = FOO(a)")


def test_parse_error_has_line_number():
    with pytest.raises(BenchParseError) as ei:
        parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a a)")
    assert ei.value.line == 3


def test_parse_duplicate_driver():
    text = "INPUT(a)\nOUTPUT(x)\nx = NOT(a)\nx = BUFF(a)"
    with pytest.raises(BenchParseError, match="duplicate driver"):
        parse_bench(text)


def test_parse_undeclared_signal():
    with pytest.raises(BenchParseError, match="undeclared"):
        parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, ghost)")


def test_parse_cycle():
    text = "INPUT(i)\nOUTPUT(a)\na = BUFF(b)\nb = BUFF(a)"
    with pytest.raises(BenchParseError, match="cycl"):
        parse_bench(text)


def test_parse_key_inputs_and_header():
    text = "# key=10\nINPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\n" \
           "t = XOR(a, keyinput0)\ny = XOR(t, keyinput1)"
    n = parse_bench(text)
    assert n.key_inputs == ("keyinput0", "keyinput1")
    assert n.primary_inputs == ("a",)
    assert n.correct_key == KeyVector((1, 0))


def test_parse_key_width_mismatch():
    text = "# key=1\nINPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\n" \
           "y = XOR(keyinput0, keyinput1)"
    with pytest.raises(BenchParseError, match="key"):
        parse_bench(text)


def test_parse_key_inputs_without_header():
    with pytest.raises(BenchParseError, match="key"):
        parse_bench("INPUT(keyinput0)\nOUTPUT(y)\ny = BUFF(keyinput0)")


def test_parse_keyinput_needs_numeric_suffix():
    with pytest.raises(BenchParseError, match="suffix"):
        parse_bench("INPUT(keyinputx)\nOUTPUT(y)\ny = BUFF(keyinputx)")


def test_key_order_follows_suffix_not_declaration():
    text = "# key=01\nINPUT(keyinput1)\nINPUT(keyinput0)\nINPUT(a)\nOUTPUT(y)\n" \
           "t = XOR(a, keyinput0)\ny = XOR(t, keyinput1)"
    n = parse_bench(text)
    assert n.key_inputs == ("keyinput0", "keyinput1")


def test_roundtrip_minimal():
    n = parse_bench(AND_TEXT)
    again = parse_bench(write_bench(n))
    assert again.primary_inputs == n.primary_inputs
    assert again.primary_outputs == n.primary_outputs
    assert again.gates == n.gates


def test_write_key_header_first_line():
    n = Netlist("t", ("a",), ("keyinput0", "keyinput1"), ("y",),
                [Gate("t0", "XOR", ("a", "keyinput0")),
                 Gate("y", "XOR", ("t0", "keyinput1"))],
                KeyVector((0, 1)))
    assert write_bench(n).splitlines()[0] == "# key=01"


def test_roundtrip_random_netlists():
    rng = random.Random(7)
    for _ in range(40):
        n = random_netlist(rng, rng.randint(1, 6), rng.randint(1, 25),
                           rng.randint(1, 4))
        t1 = write_bench(n)
        n2 = parse_bench(t1, name=n.name)
        assert n2.primary_inputs == n.primary_inputs
        assert n2.primary_outputs == n.primary_outputs
        assert {g.output: g for g in n2.gates} == {g.output: g for g in n.gates}
        assert write_bench(n2) == t1


def test_validate_ok_c17(c17):
    assert validate(c17) == []


def test_validate_duplicate_driver_names_signal():
    n = Netlist("t", ("a",), (), ("x",),
                [Gate("x", "NOT", ("a",)), Gate("x", "BUFF", ("a",))])
    codes = {(v.code, v.subject) for v in validate(n)}
    assert ("duplicate-driver", "x") in codes


def test_validate_cycle_buff_pair():
    n = Netlist("t", ("i",), (), ("a",),
                [Gate("a", "BUFF", ("b",)), Gate("b", "BUFF", ("a",))])
    assert any(v.code == "cycle" for v in validate(n))


def test_validate_arity():
    n = Netlist("t", ("a",), (), ("y",), [Gate("y", "XOR", ("a",))])
    assert any(v.code == "bad-arity" for v in validate(n))


def test_validate_missing_key_metadata():
    n = Netlist("t", ("a",), ("keyinput0",), ("y",),
                [Gate("y", "XOR", ("a", "keyinput0"))])
    assert any(v.code == "missing-key" for v in validate(n))


# -- Verilog ----------------------------------------------------------------

def test_verilog_minimal_and():
    n = parse_bench(AND_TEXT)
    v = emit_verilog(n)
    assert "assign y = a & b;" in v
    assert v.startswith("module bench (a, b, y);")


def test_verilog_numeric_ids_sanitized():
    n = parse_bench("INPUT(10)\nINPUT(16)\nOUTPUT(22)\n22 = NAND(10, 16)")
    v = emit_verilog(n)
    assert "assign n_22 = ~(n_10 & n_16);" in v


def test_verilog_deterministic(suite):
    for n in suite.values():
        assert emit_verilog(n) == emit_verilog(n)


def test_verilog_gate_forms():
    text = ("INPUT(a)\nINPUT(b)\nOUTPUT(o1)\nOUTPUT(o2)\nOUTPUT(o3)\n"
            "o1 = XNOR(a, b)\no2 = NOR(a, b)\no3 = NOT(a)")
    v = emit_verilog(parse_bench(text))
    assert "assign o1 = ~(a ^ b);" in v
    assert "assign o2 = ~(a | b);" in v
    assert "assign o3 = ~a;" in v


def test_verilog_output_also_input():
    n = parse_bench("INPUT(a)\nOUTPUT(a)\nOUTPUT(y)\ny = NOT(a)")
    v = emit_verilog(n)
    assert "output a_po;" in v
    assert "assign a_po = a;" in v


# -- bind_key ----------------------------------------------------------------

def _locked_wire(kind, bit):
    text = (f"# key={bit}\nINPUT(w)\nINPUT(keyinput0)\nOUTPUT(y)\n"
            f"y = {kind}(w, keyinput0)")
    return parse_bench(text)


def test_bind_xor_zero_becomes_buff():
    n = _locked_wire("XOR", 0)
    bound = bind_key(n, KeyVector((0,)))
    assert bound.gates == (Gate("y", "BUFF", ("w",)),)
    assert bound.key_inputs == () and bound.correct_key is None


def test_bind_xnor_zero_becomes_not():
    n = _locked_wire("XNOR", 0)
    bound = bind_key(n, KeyVector((0,)))
    assert bound.gates == (Gate("y", "NOT", ("w",)),)


def test_bind_width_mismatch():
    n = _locked_wire("XOR", 0)
    with pytest.raises(KeyWidthError):
        bind_key(n, KeyVector((0, 1)))


def test_bind_constant_output_materialized():
    text = "# key=1\nINPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = BUFF(keyinput0)"
    n = parse_bench(text)
    bound = bind_key(n, KeyVector((1,)))
    assert validate(bound) == []
    assert truth_table(bound) == [(1,), (1,)]


def test_bind_key_matches_locked_evaluation():
    rng = random.Random(21)
    for _ in range(30):
        base = random_netlist(rng, rng.randint(2, 5), rng.randint(2, 15),
                              rng.randint(1, 3))
        width = rng.randint(1, 3)
        keys = tuple(f"keyinput{i}" for i in range(width))
        gates = list(base.gates)
        # xor the keys onto random gate outputs via extra sink gates
        outs = [g.output for g in gates]
        extra = [Gate(f"kx{i}", "XOR", (rng.choice(outs), keys[i]))
                 for i in range(width)]
        final = Gate("mix", "AND",
                     tuple(f"kx{i}" for i in range(width)) + (rng.choice(outs),))
        n = Netlist("t", base.primary_inputs, keys,
                    base.primary_outputs + ("mix",),
                    gates + extra + [final], KeyVector((0,) * width))
        if validate(n):
            continue
        key = KeyVector(tuple(rng.getrandbits(1) for _ in range(width)))
        bound = bind_key(n, key)
        assert validate(bound) == []
        for _ in range(10):
            assignment = {s: rng.getrandbits(1) for s in n.primary_inputs}
            assert eval_scalar(bound, assignment) == eval_scalar(n, assignment, key)


def test_transitive_fanout_c17(c17):
    assert transitive_fanout(c17, ["11"]) == {"16", "19", "22", "23"}
    assert transitive_fanout(c17, ["10"]) == {"22"}
