"""Gate-level combinational netlist model and the `.bench` file format.

A :class:`Netlist` is an immutable DAG of single-output gates plus declared
primary inputs, key inputs, and primary outputs.  Key inputs follow the
``keyinput<N>`` naming convention used by circulating locked-benchmark
suites; the correct key travels with a locked netlist in a ``# key=...``
header comment.
"""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

GATE_KINDS = ("AND", "OR", "NAND", "NOR", "XOR", "XNOR", "NOT", "BUFF")

# gates where fanin order is irrelevant
_VARIADIC = {"AND", "OR", "NAND", "NOR"}

_ID_RE = re.compile(r"[A-Za-z0-9_]+")
_KEYINPUT_RE = re.compile(r"keyinput(\d+)$")


class BenchParseError(ValueError):
    """Raised on malformed or inconsistent `.bench` input."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" at line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{message}{where}")


class KeyWidthError(ValueError):
    """Key vector width does not match the netlist's key-input count."""


@dataclass(frozen=True)
class KeyVector:
    """Fixed-width assignment of one bit per key input (bit i -> keyinput i)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("key bits must be 0 or 1")

    @property
    def width(self) -> int:
        return len(self.bits)

    @classmethod
    def from_string(cls, s: str) -> "KeyVector":
        if not re.fullmatch(r"[01]*", s):
            raise ValueError(f"invalid key bitstring {s!r}")
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_int(cls, value: int, width: int) -> "KeyVector":
        if value < 0 or value >= (1 << width):
            raise ValueError(f"key value {value} out of range for width {width}")
        return cls(tuple((value >> i) & 1 for i in range(width)))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_int(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))


@dataclass(frozen=True)
class Gate:
    """Single-output gate: ``output = kind(fanin...)``."""

    output: str
    kind: str
    fanin: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        object.__setattr__(self, "fanin", tuple(self.fanin))

    def arity_ok(self) -> bool:
        n = len(self.fanin)
        if self.kind in ("NOT", "BUFF"):
            return n == 1
        if self.kind in ("XOR", "XNOR"):
            return n == 2
        return n >= 2


@dataclass(frozen=True)
class Violation:
    """One structural-invariant violation found by :func:`validate`."""

    code: str
    subject: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.subject}: {self.message}"


class Netlist:
    """Immutable combinational circuit.

    Parameters
    ----------
    name: str
        Circuit name (used as Verilog module name).
    primary_inputs: sequence of str
        Primary input identifiers, key inputs excluded.
    key_inputs: sequence of str
        Key input identifiers in key-bit order (index = bit position).
    primary_outputs: sequence of str
        Primary output identifiers.
    gates: sequence of Gate
        Gates in file/creation order (any order; topological not required).
    correct_key: KeyVector, optional
        Correct key of a locked netlist; present iff key_inputs is non-empty.
    """

    __slots__ = (
        "name",
        "primary_inputs",
        "key_inputs",
        "primary_outputs",
        "gates",
        "correct_key",
        "_driver",
        "_sinks",
        "_topo",
    )

    def __init__(
        self,
        name: str,
        primary_inputs: Sequence[str],
        key_inputs: Sequence[str],
        primary_outputs: Sequence[str],
        gates: Sequence[Gate],
        correct_key: Optional[KeyVector] = None,
    ):
        self.name = name
        self.primary_inputs = tuple(primary_inputs)
        self.key_inputs = tuple(key_inputs)
        self.primary_outputs = tuple(primary_outputs)
        self.gates = tuple(gates)
        self.correct_key = correct_key
        # first driver wins on (invalid) duplicates; validate() reports them
        driver = {}
        for g in self.gates:
            driver.setdefault(g.output, g)
        self._driver = driver
        self._sinks = None
        self._topo = None

    # -- derived views -------------------------------------------------

    @property
    def signals(self) -> tuple[str, ...]:
        """All declared signals in declaration order (inputs, keys, gate outputs)."""
        return self.primary_inputs + self.key_inputs + tuple(g.output for g in self.gates)

    @property
    def inputs_all(self) -> tuple[str, ...]:
        return self.primary_inputs + self.key_inputs

    def driver(self, sig: str) -> Optional[Gate]:
        return self._driver.get(sig)

    def is_input(self, sig: str) -> bool:
        return sig in self._input_set()

    def _input_set(self):
        return set(self.primary_inputs) | set(self.key_inputs)

    def sink_map(self) -> dict[str, list[Gate]]:
        """Map signal -> gates reading it (computed once, cached)."""
        if self._sinks is None:
            sinks: dict[str, list[Gate]] = {s: [] for s in self.signals}
            for g in self.gates:
                for f in g.fanin:
                    sinks.setdefault(f, []).append(g)
            self._sinks = sinks
        return self._sinks

    def topo_gates(self) -> tuple[Gate, ...]:
        """Gates in a stable topological order (original order among ready gates).

        Raises
        ------
        BenchParseError
            If the dependency graph is cyclic.
        """
        if self._topo is None:
            order = _stable_topo(self)
            if order is None:
                raise BenchParseError(f"netlist {self.name}: cyclic dependency")
            self._topo = tuple(order)
        return self._topo

    def with_name(self, name: str) -> "Netlist":
        return Netlist(name, self.primary_inputs, self.key_inputs,
                       self.primary_outputs, self.gates, self.correct_key)

    def stats(self) -> dict:
        return {
            "name": self.name,
            "n_inputs": len(self.primary_inputs),
            "n_key_inputs": len(self.key_inputs),
            "n_outputs": len(self.primary_outputs),
            "n_gates": len(self.gates),
        }

    def __repr__(self):
        return (f"Netlist({self.name!r}, inputs={len(self.primary_inputs)}, "
                f"keys={len(self.key_inputs)}, outputs={len(self.primary_outputs)}, "
                f"gates={len(self.gates)})")


def _stable_topo(n: Netlist):
    """Kahn's algorithm keyed by original gate position; None on cycle."""
    pos = {g.output: i for i, g in enumerate(n.gates)}
    indeg = {}
    dependents: dict[str, list[str]] = {}
    inputs = n._input_set()
    for g in n.gates:
        deg = 0
        for f in g.fanin:
            if f in inputs or f not in pos:
                continue
            deg += 1
            dependents.setdefault(f, []).append(g.output)
        indeg[g.output] = deg
    ready = [pos[o] for o, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        g = n.gates[i]
        order.append(g)
        for dep in dependents.get(g.output, ()):
            indeg[dep] -= 1
            if indeg[dep] == 0:
                heapq.heappush(ready, pos[dep])
    if len(order) != len(n.gates):
        return None
    return order


# ----------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------

def validate(n: Netlist) -> list[Violation]:
    """Check every structural invariant; an empty list means the netlist is valid."""
    violations = []
    declared_inputs = []
    seen = set()
    for s in n.primary_inputs + n.key_inputs:
        if s in seen:
            violations.append(Violation("duplicate-input", s, "input declared more than once"))
        seen.add(s)
        declared_inputs.append(s)
    inputs = set(declared_inputs)

    seen_out = set()
    for g in n.gates:
        if g.output in seen_out:
            violations.append(Violation("duplicate-driver", g.output,
                                        "signal driven by more than one gate"))
        seen_out.add(g.output)
        if g.output in inputs:
            violations.append(Violation("input-driven", g.output,
                                        "signal is both an input and a gate output"))
        if g.kind not in GATE_KINDS:
            violations.append(Violation("unknown-kind", g.output,
                                        f"unknown gate kind {g.kind}"))
        elif not g.arity_ok():
            violations.append(Violation("bad-arity", g.output,
                                        f"{g.kind} with {len(g.fanin)} fanin"))

    known = inputs | seen_out
    for g in n.gates:
        for f in g.fanin:
            if f not in known:
                violations.append(Violation("undeclared-signal", g.output,
                                            f"fanin {f} is not declared"))

    for o in n.primary_outputs:
        if o not in known:
            violations.append(Violation("undriven-output", o,
                                        "output is neither an input nor a gate output"))
    out_seen = set()
    for o in n.primary_outputs:
        if o in out_seen:
            violations.append(Violation("duplicate-output", o, "output declared more than once"))
        out_seen.add(o)

    if n.key_inputs and n.correct_key is None:
        violations.append(Violation("missing-key", n.name,
                                    "key inputs present but no correct key recorded"))
    if not n.key_inputs and n.correct_key is not None:
        violations.append(Violation("spurious-key", n.name,
                                    "correct key recorded but no key inputs"))
    if n.correct_key is not None and n.correct_key.width != len(n.key_inputs):
        violations.append(Violation("key-width", n.name,
                                    f"key width {n.correct_key.width} != "
                                    f"{len(n.key_inputs)} key inputs"))

    if _stable_topo(n) is None:
        cyc = _find_cycle_signal(n)
        violations.append(Violation("cycle", cyc, "signal participates in a dependency cycle"))
    return violations


def _find_cycle_signal(n: Netlist) -> str:
    # any gate left out of a maximal topological prefix is on/behind a cycle
    done = {g.output for g in (_stable_topo_prefix(n))}
    for g in n.gates:
        if g.output not in done:
            return g.output
    return n.name


def _stable_topo_prefix(n: Netlist):
    order = _stable_topo(n)
    if order is not None:
        return order
    # rerun Kahn but return the partial order
    pos = {g.output: i for i, g in enumerate(n.gates)}
    inputs = n._input_set()
    indeg = {}
    dependents: dict[str, list[str]] = {}
    for g in n.gates:
        deg = 0
        for f in g.fanin:
            if f in inputs or f not in pos:
                continue
            deg += 1
            dependents.setdefault(f, []).append(g.output)
        indeg[g.output] = deg
    ready = [pos[o] for o, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        g = n.gates[i]
        order.append(g)
        for dep in dependents.get(g.output, ()):
            indeg[dep] -= 1
            if indeg[dep] == 0:
                heapq.heappush(ready, pos[dep])
    return order


# ----------------------------------------------------------------------
# .bench parsing and writing
# ----------------------------------------------------------------------

_INPUT_RE = re.compile(r"INPUT\s*\(\s*([A-Za-z0-9_]+)\s*\)\s*$", re.IGNORECASE)
_OUTPUT_RE = re.compile(r"OUTPUT\s*\(\s*([A-Za-z0-9_]+)\s*\)\s*$", re.IGNORECASE)
_GATE_RE = re.compile(
    r"([A-Za-z0-9_]+)\s*=\s*([A-Za-z]+)\s*\(\s*([A-Za-z0-9_]+(?:\s*,\s*[A-Za-z0-9_]+)*)\s*\)\s*$"
)
_KEY_COMMENT_RE = re.compile(r"#\s*key\s*=\s*([01]+)\s*$")

_KIND_ALIASES = {"BUF": "BUFF"}


def parse_bench(text: str, name: str = "bench") -> Netlist:
    """Parse `.bench` text into a validated :class:`Netlist`.

    Inputs named ``keyinput<N>`` are treated as key inputs ordered by N; a
    ``# key=<bits>`` comment supplies the correct key (bit i -> keyinput i).
    ``BUF`` is accepted as an alias of ``BUFF``; gate kinds are
    case-insensitive.

    Raises
    ------
    BenchParseError
        On any syntax error (with line/column) or violated invariant.
    """
    plain_inputs: list[str] = []
    key_inputs: list[tuple[int, str, int]] = []  # (bit index, name, line)
    outputs: list[str] = []
    gates: list[Gate] = []
    key_string = None
    declared: set[str] = set()
    gate_lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw
        m = _KEY_COMMENT_RE.search(line)
        if m and line.lstrip().startswith("#"):
            if key_string is not None:
                raise BenchParseError("duplicate '# key=' header", lineno)
            key_string = m.group(1)
            continue
        if "#" in line:
            line = line[: line.index("#")]
        line = line.strip()
        if not line:
            continue

        m = _INPUT_RE.match(line)
        if m:
            sig = m.group(1)
            if sig in declared:
                raise BenchParseError(f"duplicate declaration of input {sig}", lineno)
            declared.add(sig)
            if sig.startswith("keyinput"):
                km = _KEYINPUT_RE.match(sig)
                if not km:
                    raise BenchParseError(
                        f"key input {sig} must have an integer suffix", lineno)
                key_inputs.append((int(km.group(1)), sig, lineno))
            else:
                plain_inputs.append(sig)
            continue

        m = _OUTPUT_RE.match(line)
        if m:
            sig = m.group(1)
            if sig in outputs:
                raise BenchParseError(f"duplicate declaration of output {sig}", lineno)
            outputs.append(sig)
            continue

        m = _GATE_RE.match(line)
        if m:
            out, kind, args = m.group(1), m.group(2).upper(), m.group(3)
            kind = _KIND_ALIASES.get(kind, kind)
            if kind not in GATE_KINDS:
                raise BenchParseError(f"unknown gate kind {m.group(2)}", lineno,
                                      line.index(m.group(2)) + 1)
            if out in declared:
                raise BenchParseError(
                    f"signal {out} is both an input and a gate output", lineno)
            if out in gate_lines:
                raise BenchParseError(
                    f"duplicate driver for signal {out} "
                    f"(first driven at line {gate_lines[out]})", lineno)
            gate_lines[out] = lineno
            fanin = tuple(a.strip() for a in args.split(","))
            g = Gate(out, kind, fanin)
            if not g.arity_ok():
                raise BenchParseError(
                    f"{kind} gate {out} has {len(fanin)} fanin", lineno)
            gates.append(g)
            continue

        raise BenchParseError(f"cannot parse line {line!r}", lineno,
                              _error_column(line))

    key_inputs.sort()
    for idx, (suffix, _, lineno) in enumerate(key_inputs):
        if any(suffix == o for o, _, _ in key_inputs[:idx]):
            raise BenchParseError(f"duplicate key input index {suffix}", lineno)
    key_names = tuple(s for _, s, _ in key_inputs)

    correct_key = None
    if key_string is not None:
        if len(key_string) != len(key_names):
            raise BenchParseError(
                f"key header has {len(key_string)} bits but netlist declares "
                f"{len(key_names)} key inputs")
        correct_key = KeyVector.from_string(key_string)
    elif key_names:
        raise BenchParseError(
            "netlist declares key inputs but carries no '# key=' header")

    known = declared | set(gate_lines)
    for g in gates:
        for f in g.fanin:
            if f not in known:
                raise BenchParseError(
                    f"gate {g.output} references undeclared signal {f}",
                    gate_lines[g.output])
    for o in outputs:
        if o not in known:
            raise BenchParseError(f"output {o} is never driven")

    n = Netlist(name, plain_inputs, key_names, outputs, gates, correct_key)
    if _stable_topo(n) is None:
        raise BenchParseError(
            f"cyclic dependency through signal {_find_cycle_signal(n)}")
    return n


def _error_column(line: str) -> int:
    # first structurally implausible character, 1-based
    for i, ch in enumerate(line):
        if not (_ID_RE.match(ch) or ch in " =(),\t"):
            return i + 1
    return len(line) + 1


def parse_bench_file(path, name: str | None = None) -> Netlist:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if name is None:
        import os
        name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_bench(text, name=name)


def write_bench(n: Netlist) -> str:
    """Serialize to `.bench` text; inverse of :func:`parse_bench`.

    Emits the key header (when present), INPUT lines (primary inputs then
    key inputs), OUTPUT lines, and gates in a stable topological order, so
    parse(write(n)) reproduces signals, gates, and their orders.
    """
    bad = validate(n)
    if bad:
        raise ValueError(f"refusing to write invalid netlist: {bad[0]}")
    lines = []
    if n.correct_key is not None:
        lines.append(f"# key={n.correct_key.to_string()}")
    lines.extend(f"INPUT({s})" for s in n.primary_inputs)
    lines.extend(f"INPUT({s})" for s in n.key_inputs)
    lines.extend(f"OUTPUT({s})" for s in n.primary_outputs)
    for g in n.topo_gates():
        lines.append(f"{g.output} = {g.kind}({', '.join(g.fanin)})")
    return "\n".join(lines) + "\n"


def write_bench_file(n: Netlist, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_bench(n))


# ----------------------------------------------------------------------
# Verilog emission
# ----------------------------------------------------------------------

_VERILOG_KEYWORDS = frozenset(
    "module endmodule input output inout wire reg assign begin end always initial "
    "if else case endcase for while integer real parameter localparam function "
    "endfunction task endtask posedge negedge or and not nand nor xor xnor buf "
    "supply0 supply1 tri".split()
)

_VL_OP = {"AND": " & ", "NAND": " & ", "OR": " | ", "NOR": " | ",
          "XOR": " ^ ", "XNOR": " ^ "}
_VL_NEGATED = {"NAND", "NOR", "XNOR", "NOT"}


def _sanitize_ids(names: Iterable[str]) -> dict[str, str]:
    """Deterministic bench-id -> Verilog-id map: prefix names that do not
    start with a letter or underscore with ``n_``, replace illegal characters
    with ``_``, and disambiguate collisions with numeric suffixes."""
    mapping = {}
    used = set()
    for name in names:
        v = re.sub(r"[^A-Za-z0-9_]", "_", name)
        if not re.match(r"[A-Za-z_]", v) or v in _VERILOG_KEYWORDS:
            v = "n_" + v
        base = v
        k = 2
        while v in used:
            v = f"{base}_{k}"
            k += 1
        used.add(v)
        mapping[name] = v
    return mapping


def emit_verilog(n: Netlist) -> str:
    """Emit structural Verilog-2001 (single module, continuous assigns only)."""
    bad = validate(n)
    if bad:
        raise ValueError(f"refusing to emit invalid netlist: {bad[0]}")
    ins = list(n.primary_inputs) + list(n.key_inputs)
    # an output that is also an input needs a distinct port fed by an assign
    out_ports = []
    passthrough = []
    in_set = set(ins)
    for o in n.primary_outputs:
        if o in in_set:
            out_ports.append(o + "_po")
            passthrough.append((o + "_po", o))
        else:
            out_ports.append(o)
    ids = _sanitize_ids(list(dict.fromkeys(ins + out_ports + [g.output for g in n.gates])))

    mod = _sanitize_ids([n.name or "top"])[n.name or "top"]
    ports = [ids[s] for s in ins] + [ids[o] for o in out_ports]
    out_set = set(out_ports)
    wires = [ids[g.output] for g in n.topo_gates() if g.output not in out_set]

    lines = [f"module {mod} ({', '.join(ports)});"]
    for s in ins:
        lines.append(f"  input {ids[s]};")
    for o in out_ports:
        lines.append(f"  output {ids[o]};")
    for w in wires:
        lines.append(f"  wire {w};")
    for g in n.topo_gates():
        fan = [ids[f] for f in g.fanin]
        if g.kind == "BUFF":
            rhs = fan[0]
        elif g.kind == "NOT":
            rhs = f"~{fan[0]}"
        else:
            expr = _VL_OP[g.kind].join(fan)
            rhs = f"~({expr})" if g.kind in _VL_NEGATED else expr
        lines.append(f"  assign {ids[g.output]} = {rhs};")
    for port, src in passthrough:
        lines.append(f"  assign {ids[port]} = {ids[src]};")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# key binding with constant propagation
# ----------------------------------------------------------------------

def bind_key(n: Netlist, k: KeyVector) -> Netlist:
    """Substitute key bits as constants and fold them through the logic.

    Local Boolean identities only: constants absorb/neutralize through each
    gate kind, single-operand survivors become BUFF/NOT, and gates no longer
    feeding any output are swept.  The result has no key inputs and behaves
    on primary inputs exactly like ``n`` evaluated under ``k``.
    """
    if k.width != len(n.key_inputs):
        raise KeyWidthError(
            f"key width {k.width} != {len(n.key_inputs)} key inputs")
    const: dict[str, int] = {s: b for s, b in zip(n.key_inputs, k.bits)}
    new_gates: list[Gate] = []

    for g in n.topo_gates():
        kind = g.kind
        fan = g.fanin
        if kind in ("AND", "NAND", "OR", "NOR"):
            neutral = 1 if kind in ("AND", "NAND") else 0
            absorbing = 1 - neutral
            keep = []
            val = None
            for f in fan:
                c = const.get(f)
                if c is None:
                    keep.append(f)
                elif c == absorbing:
                    val = absorbing
                    break
            inverted = kind in ("NAND", "NOR")
            if val is not None:
                const[g.output] = (1 - val) if inverted else val
                continue
            if not keep:
                const[g.output] = (1 - neutral) if inverted else neutral
                continue
            if len(keep) == 1:
                new_gates.append(Gate(g.output, "NOT" if inverted else "BUFF", (keep[0],)))
            else:
                new_gates.append(Gate(g.output, kind, tuple(keep)))
        elif kind in ("XOR", "XNOR"):
            a, b = fan
            ca, cb = const.get(a), const.get(b)
            invert = 1 if kind == "XNOR" else 0
            if ca is not None and cb is not None:
                const[g.output] = (ca ^ cb) ^ invert
            elif ca is not None or cb is not None:
                sig = b if ca is not None else a
                c = ca if ca is not None else cb
                if c ^ invert:
                    new_gates.append(Gate(g.output, "NOT", (sig,)))
                else:
                    new_gates.append(Gate(g.output, "BUFF", (sig,)))
            else:
                new_gates.append(Gate(g.output, kind, fan))
        elif kind == "NOT":
            c = const.get(fan[0])
            if c is not None:
                const[g.output] = 1 - c
            else:
                new_gates.append(g)
        elif kind == "BUFF":
            c = const.get(fan[0])
            if c is not None:
                const[g.output] = c
            else:
                new_gates.append(g)
        else:  # pragma: no cover - validate() rejects unknown kinds
            raise ValueError(f"unknown gate kind {kind}")

    # materialize constant primary outputs (.bench has no constant literal)
    gates_by_out = {g.output: g for g in new_gates}
    extra: list[Gate] = []
    anchor = n.primary_inputs[0] if n.primary_inputs else None
    for o in n.primary_outputs:
        if o in const:
            if anchor is None:
                raise ValueError("cannot materialize constant output without inputs")
            kind = "XNOR" if const[o] else "XOR"
            extra.append(Gate(o, kind, (anchor, anchor)))
    new_gates.extend(extra)
    gates_by_out.update({g.output: g for g in extra})

    # sweep gates that no longer reach any primary output
    live: set[str] = set()
    stack = [o for o in n.primary_outputs if o in gates_by_out]
    while stack:
        s = stack.pop()
        if s in live:
            continue
        live.add(s)
        g = gates_by_out.get(s)
        if g:
            stack.extend(f for f in g.fanin if f in gates_by_out and f not in live)
    kept = [g for g in new_gates if g.output in live]

    return Netlist(n.name, n.primary_inputs, (), n.primary_outputs, kept, None)


# ----------------------------------------------------------------------
# reachability helpers shared by analysis/planning
# ----------------------------------------------------------------------

def transitive_fanout(n: Netlist, sources: Iterable[str]) -> set[str]:
    """Gate outputs strictly downstream of any source signal."""
    sinks = n.sink_map()
    seen: set[str] = set()
    stack = [g.output for s in sources for g in sinks.get(s, ())]
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        stack.extend(g.output for g in sinks.get(s, ()))
    return seen
