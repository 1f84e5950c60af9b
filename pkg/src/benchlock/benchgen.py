"""Deterministic generators for the benchmark circuit suite.

``c17`` is the canonical six-NAND netlist.  The seven larger circuits are
functional reconstructions built from the documented architectures of the
classic ISCAS-85 set (interrupt controller, single-error correctors, ALUs,
adder/comparators) with the canonical primary-input/output counts; their
gate-level structure and gate counts are this project's own and are smaller
than the historical netlists.  Every generator is a pure function, so
regenerated files are byte-identical across runs.
"""
from __future__ import annotations

import random

from .netlist import Gate, Netlist

C17_TEXT = """\
# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
"""


class _B:
    """Sequential-id netlist builder (ids mimic the numeric ISCAS style)."""

    def __init__(self, name: str):
        self.name = name
        self._next = 1
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.gates: list[Gate] = []

    def _id(self) -> str:
        s = str(self._next)
        self._next += 1
        return s

    def inp(self) -> str:
        s = self._id()
        self.inputs.append(s)
        return s

    def inps(self, k: int) -> list[str]:
        return [self.inp() for _ in range(k)]

    def g(self, kind: str, *fanin: str) -> str:
        out = self._id()
        self.gates.append(Gate(out, kind, tuple(fanin)))
        return out

    def mark_out(self, *sigs: str) -> None:
        self.outputs.extend(sigs)

    def xor_tree(self, sigs: list[str]) -> str:
        level = list(sigs)
        while len(level) > 1:
            nxt = [self.g("XOR", level[i], level[i + 1])
                   for i in range(0, len(level) - 1, 2)]
            if len(level) & 1:
                nxt.append(level[-1])
            level = nxt
        return level[0]

    def and_tree(self, sigs: list[str]) -> str:
        level = list(sigs)
        while len(level) > 1:
            nxt = [self.g("AND", level[i], level[i + 1])
                   for i in range(0, len(level) - 1, 2)]
            if len(level) & 1:
                nxt.append(level[-1])
            level = nxt
        return level[0]

    def mux(self, sel: str, a0: str, a1: str) -> str:
        ns = self.g("NOT", sel)
        return self.g("OR", self.g("AND", ns, a0), self.g("AND", sel, a1))

    def adder(self, xs: list[str], ys: list[str], cin: str) -> tuple[list[str], str]:
        """Ripple-carry adder; returns (sum bits, carry out)."""
        carry = cin
        sums = []
        for x, y in zip(xs, ys):
            p = self.g("XOR", x, y)
            sums.append(self.g("XOR", p, carry))
            carry = self.g("OR", self.g("AND", x, y), self.g("AND", p, carry))
        return sums, carry

    def build(self) -> Netlist:
        return Netlist(self.name, self.inputs, (), self.outputs, self.gates)


def _pick_columns(rng: random.Random, width: int, count: int) -> list[int]:
    """Distinct nonzero column codes with ~half-weight, for parity matrices."""
    pool = [v for v in range(1, 1 << width) if 3 <= bin(v).count("1")]
    return rng.sample(pool, count)


def gen_c17() -> Netlist:
    from .netlist import parse_bench
    return parse_bench(C17_TEXT, name="c17")


def gen_c432() -> Netlist:
    """27-channel interrupt controller: 36 inputs, 7 outputs."""
    b = _B("c432")
    e = b.inps(9)
    req = [b.inps(9) for _ in range(3)]  # channel groups A, B, C
    gated = [[b.g("AND", r, en) for r, en in zip(group, e)] for group in req]
    group_act = [b.g("OR", *g) for g in gated]
    n_a = b.g("NOT", group_act[0])
    n_b = b.g("NOT", group_act[1])
    grant = [group_act[0],
             b.g("AND", n_a, group_act[1]),
             b.g("AND", n_a, n_b, group_act[2])]
    # per-line select of the winning group, AND-OR as NAND-NAND
    sel = []
    for i in range(9):
        terms = [b.g("NAND", gated[g][i], grant[g]) for g in range(3)]
        sel.append(b.g("NAND", *terms))
    # priority encode, highest line wins
    nsel = [b.g("NOT", s) for s in sel]
    cum = [None] * 9
    cum[8] = nsel[8]
    for i in range(7, 0, -1):
        cum[i] = b.g("AND", nsel[i], cum[i + 1])
    hp = [None] * 9
    hp[8] = sel[8]
    for i in range(8):
        hp[i] = b.g("AND", sel[i], cum[i + 1])
    enc0 = b.xor_tree([hp[1], hp[3], hp[5], hp[7]])
    enc1 = b.xor_tree([hp[2], hp[3], hp[6], hp[7]])
    enc2 = b.xor_tree([hp[4], hp[5], hp[6], hp[7]])
    b.mark_out(grant[0], grant[1], grant[2], enc0, enc1, enc2, hp[8])
    return b.build()


def _sec_corrector(b: _B, data: list[str], checks: list[str], enable: str,
                   cols: list[int], cw: int) -> tuple[list[str], list[str]]:
    """Single-error corrector with a syndrome echo on the data outputs.

    Corrected bit j is ``d_j ^ decode_j(syndrome) ^ (enable & syn_{j mod cw})``;
    the echo stamps the correction signature onto the data word.
    """
    syn = []
    for r in range(cw):
        taps = [d for d, c in zip(data, cols) if (c >> r) & 1]
        syn.append(b.g("XOR", b.xor_tree(taps), checks[r]))
    half = cw // 2
    nsyn = [b.g("NOT", s) for s in syn]
    lo_used = sorted({c & ((1 << half) - 1) for c in cols})
    hi_used = sorted({c >> half for c in cols})
    lo_dec = {v: b.and_tree([syn[i] if (v >> i) & 1 else nsyn[i]
                             for i in range(half)]) for v in lo_used}
    hi_dec = {v: b.and_tree([syn[half + i] if (v >> i) & 1 else nsyn[half + i]
                             for i in range(cw - half)]) for v in hi_used}
    echo = [b.g("AND", s, enable) for s in syn]
    corrected = []
    for j, (d, c) in enumerate(zip(data, cols)):
        flip = b.g("AND", lo_dec[c & ((1 << half) - 1)], hi_dec[c >> half])
        corrected.append(b.g("XOR", b.g("XOR", d, flip), echo[j % cw]))
    return corrected, syn


def gen_c499() -> Netlist:
    """32-bit single-error corrector: 41 inputs, 32 outputs."""
    rng = random.Random(499)
    b = _B("c499")
    data = b.inps(32)
    checks = b.inps(8)
    enable = b.inp()
    cols = _pick_columns(rng, 8, 32)
    corrected, _ = _sec_corrector(b, data, checks, enable, cols, 8)
    b.mark_out(*corrected)
    return b.build()


def _expand_xor_nand(n: Netlist) -> Netlist:
    """Rewrite every 2-input XOR into the classic four-NAND network."""
    gates: list[Gate] = []
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"nx{counter[0]}"

    for g in n.gates:
        if g.kind == "XOR":
            a, c = g.fanin
            t1 = fresh()
            t2 = fresh()
            t3 = fresh()
            gates.append(Gate(t1, "NAND", (a, c)))
            gates.append(Gate(t2, "NAND", (a, t1)))
            gates.append(Gate(t3, "NAND", (c, t1)))
            gates.append(Gate(g.output, "NAND", (t2, t3)))
        else:
            gates.append(g)
    return Netlist(n.name, n.primary_inputs, (), n.primary_outputs, gates)


def gen_c1355() -> Netlist:
    """Same function as c499 with the XORs expanded to NAND networks."""
    n = gen_c499()
    out = _expand_xor_nand(n)
    return out.with_name("c1355")


def gen_c880() -> Netlist:
    """8-bit ALU slice: 60 inputs, 26 outputs."""
    b = _B("c880")
    A = b.inps(8)
    Bv = b.inps(8)
    C = b.inps(8)
    D = b.inps(8)
    M = b.inps(8)
    f = b.inps(4)
    cin, inv, pass_, osel = b.inp(), b.inp(), b.inp(), b.inp()
    T = b.inps(8)
    g = b.inps(4)

    bi = [b.g("XOR", x, inv) for x in Bv]
    sums, cout = b.adder(A, bi, cin)
    # logic unit over C, D selected by f0, f1
    nf0, nf1 = b.g("NOT", f[0]), b.g("NOT", f[1])
    le = []
    for x, y in zip(C, D):
        land = b.g("AND", x, y)
        lor = b.g("OR", x, y)
        lx = b.g("XOR", x, y)
        lnot = b.g("NOT", x)
        le.append(b.g("OR",
                      b.g("AND", land, nf0, nf1),
                      b.g("AND", lor, f[0], nf1),
                      b.g("AND", lx, nf0, f[1]),
                      b.g("AND", lnot, f[0], f[1])))
    nos = b.g("NOT", osel)
    res = [b.g("OR", b.g("AND", nos, s), b.g("AND", osel, l))
           for s, l in zip(sums, le)]
    masked = [b.g("AND", r, m) for r, m in zip(res, M)]
    tied = [b.g("OR", mo, b.g("AND", t, pass_)) for mo, t in zip(masked, T)]
    # comparator A vs C
    eqbus = [b.g("XNOR", x, y) for x, y in zip(A, C)]
    eq = b.g("AND", *eqbus)
    borrow = g[0]
    for x, y in zip(A, C):
        nx = b.g("NOT", x)
        borrow = b.g("OR", b.g("AND", nx, y),
                     b.g("AND", b.g("XNOR", x, y), borrow))
    parA = b.xor_tree(A + [g[1]])
    parS = b.xor_tree(sums + [g[2]])
    zero = b.g("NOR", *tied)
    ovf = b.g("XOR", cout, b.g("AND", f[2], f[3]))
    b.mark_out(*tied)
    b.mark_out(*eqbus)
    b.mark_out(cout, ovf, eq, borrow, parA, parS, zero,
               b.g("AND", g[3], cout), b.g("OR", eq, borrow),
               b.g("XOR", parA, parS))
    return b.build()


def gen_c1908() -> Netlist:
    """16-bit SEC/DED corrector: 33 inputs, 25 outputs."""
    rng = random.Random(1908)
    b = _B("c1908")
    data = b.inps(16)
    checks = b.inps(6)
    r_en = b.inp()
    d_en = b.inp()
    p_in = b.inp()
    M = b.inps(8)
    cols = _pick_columns(rng, 6, 16)
    corrected, syn = _sec_corrector(b, data, checks, r_en, cols, 6)
    masked = [b.g("AND", c, M[i % 8]) for i, c in enumerate(corrected)]
    overall = b.xor_tree(data + [p_in])
    nonzero = b.g("OR", *syn)
    padj = b.g("XOR", overall, d_en)
    single = b.g("AND", nonzero, padj)
    double = b.g("AND", nonzero, b.g("NOT", padj))
    b.mark_out(*masked)
    b.mark_out(*syn)
    b.mark_out(single, double, nonzero)
    n = b.build()
    return _expand_xor_nand(n).with_name("c1908")


def gen_c3540() -> Netlist:
    """8-bit ALU with rotate and BCD adjust: 50 inputs, 22 outputs."""
    b = _B("c3540")
    A = b.inps(8)
    Bv = b.inps(8)
    K = b.inps(8)
    M = b.inps(8)
    sh = b.inps(3)
    f = b.inps(3)
    cin, inv, arith, bcd_en, pass_ = (b.inp() for _ in range(5))
    sp = b.inps(7)

    bi = [b.g("XOR", x, inv) for x in Bv]
    sums, cout = b.adder(A, bi, cin)
    # barrel rotate-left of A by sh
    stage = list(A)
    for s_i, amount in enumerate((1, 2, 4)):
        ns = b.g("NOT", sh[s_i])
        stage = [b.g("OR", b.g("AND", ns, stage[i]),
                     b.g("AND", sh[s_i], stage[(i - amount) % 8]))
                 for i in range(8)]
    # logic unit over A, K
    nf0, nf1 = b.g("NOT", f[0]), b.g("NOT", f[1])
    le = []
    for x, y in zip(A, K):
        le.append(b.g("OR",
                      b.g("AND", b.g("AND", x, y), nf0, nf1),
                      b.g("AND", b.g("OR", x, y), f[0], nf1),
                      b.g("AND", b.g("XOR", x, y), nf0, f[1]),
                      b.g("AND", b.g("NOT", x), f[0], f[1])))
    nar = b.g("NOT", arith)
    mid = [b.g("OR", b.g("AND", arith, s), b.g("AND", nar, r))
           for s, r in zip(sums, stage)]
    nf2 = b.g("NOT", f[2])
    res = [b.g("OR", b.g("AND", nf2, m), b.g("AND", f[2], l))
           for m, l in zip(mid, le)]
    # BCD adjust per nibble: add 6 where the nibble exceeds 9
    adj = []
    gt9s = []
    for nib in (res[0:4], res[4:8]):
        gt9 = b.g("OR", b.g("AND", nib[3], nib[2]), b.g("AND", nib[3], nib[1]))
        gt9s.append(gt9)
        add = b.g("AND", gt9, bcd_en)
        zero = b.g("XOR", add, add)  # constant 0 in gate form
        six = [zero, add, add, zero]
        nsum, _ = b.adder(nib, six, zero)
        adj.extend(nsum)
    out = [b.g("OR", b.g("AND", pass_, r), b.g("AND", b.g("NOT", pass_), a))
           for r, a in zip(res, adj)]
    masked = [b.g("AND", o, m) for o, m in zip(out, M)]
    par = b.xor_tree(masked + [sp[0]])
    zero_f = b.g("NOR", *masked)
    ovf = b.g("XOR", cout, b.g("AND", sp[1], sp[2]))
    neg = b.g("AND", masked[7], b.g("OR", sp[3], sp[4]))
    gt9any = b.g("OR", gt9s[0], gt9s[1], b.g("AND", sp[5], sp[6]))
    b.mark_out(*masked)
    b.mark_out(*[b.g("XOR", r, k) for r, k in zip(res[:8], K)])
    b.mark_out(cout, ovf, zero_f, neg, par, gt9any)
    return b.build()


def gen_c5315() -> Netlist:
    """Five parallel 9-bit ALU slices: 178 inputs, 123 outputs."""
    b = _B("c5315")
    slices = []
    for _ in range(5):
        X = b.inps(9)
        Y = b.inps(9)
        M = b.inps(9)
        inv, cin, s0, s1 = (b.inp() for _ in range(4))
        slices.append((X, Y, M, inv, cin, s0, s1))
    P = b.inps(9)
    G = b.inps(14)

    slice_R = []
    slice_pars = []
    slice_flags = []
    for X, Y, M, inv, cin, s0, s1 in slices:
        yi = [b.g("XOR", y, inv) for y in Y]
        sums, cout = b.adder(X, yi, cin)
        ns0, ns1 = b.g("NOT", s0), b.g("NOT", s1)
        le = []
        for x, y in zip(X, Y):
            le.append(b.g("OR",
                          b.g("AND", b.g("AND", x, y), ns0),
                          b.g("AND", b.g("OR", x, y), s0)))
        res = [b.g("OR", b.g("AND", ns1, s), b.g("AND", s1, l))
               for s, l in zip(sums, le)]
        R = [b.g("AND", r, m) for r, m in zip(res, M)]
        eqbus = [b.g("XNOR", x, y) for x, y in zip(X, Y)]
        eq = b.g("AND", *eqbus)
        zero = b.g("NOR", *R)
        par = b.xor_tree(R)
        slice_R.append(R)
        slice_pars.append(par)
        slice_flags.append((cout, zero, par, eq))
        b.mark_out(*R)
        b.mark_out(*eqbus)
        b.mark_out(cout, zero, par, eq)
    pcheck = [b.g("XOR", p, r) for p, r in zip(P, slice_R[0])]
    gpar = b.xor_tree(slice_pars + [G[0]])
    gzero = b.g("AND", *[f[1] for f in slice_flags])
    chain = G[1]
    for f in slice_flags:
        chain = b.g("OR", b.g("AND", f[3], chain), b.g("AND", f[0], G[2]))
    b.mark_out(*pcheck)
    b.mark_out(gpar, gzero, chain, b.g("AND", G[3], gpar))
    return b.build()


def gen_c7552() -> Netlist:
    """32-bit adder/comparator with parity: 207 inputs, 108 outputs."""
    b = _B("c7552")
    X = b.inps(32)
    Y = b.inps(32)
    Z = b.inps(32)
    W = b.inps(32)
    EN = b.inps(32)
    P = b.inps(32)
    cin, inv, csel = b.inp(), b.inp(), b.inp()
    sp = b.inps(12)

    xi = [b.g("AND", x, e) for x, e in zip(X, EN)]
    yi = [b.g("XOR", y, inv) for y in Y]
    sums, cout = b.adder(xi, yi, cin)
    # subtractor X - Z as a second adder (comparator datapath)
    nz = [b.g("NOT", z) for z in Z]
    diff, bout = b.adder(X, nz, csel)
    eqbus = [b.g("XNOR", x, z) for x, z in zip(X, Z)]
    eq = b.g("AND", *eqbus)
    lt = b.g("NOT", bout)
    gt = b.g("AND", b.g("NOT", eq), bout)
    # W-selected bus and parity check against P
    Q = [b.mux(w, z, x) for w, x, z in zip(W, X, Z)]
    E = [b.g("XOR", q, p) for q, p in zip(Q, P)]
    par_bytes = [b.xor_tree(sums[i:i + 8]) for i in range(0, 32, 8)]
    parX = b.xor_tree(X)
    parS = b.xor_tree(par_bytes)
    zero = b.g("NOR", *sums)
    ovf = b.g("XOR", cout, b.g("AND", sp[0], sp[1]))
    b.mark_out(*sums)
    b.mark_out(*E)
    b.mark_out(*diff)
    b.mark_out(cout, ovf, eq, lt, gt, zero, parX, parS)
    b.mark_out(*par_bytes)
    return b.build()


GENERATORS = {
    "c17": gen_c17,
    "c432": gen_c432,
    "c499": gen_c499,
    "c880": gen_c880,
    "c1355": gen_c1355,
    "c1908": gen_c1908,
    "c3540": gen_c3540,
    "c5315": gen_c5315,
    "c7552": gen_c7552,
}

BENCHMARK_SUITE = ("c432", "c499", "c880", "c1355", "c1908", "c3540",
                   "c5315", "c7552")


def generate(name: str) -> Netlist:
    try:
        return GENERATORS[name]()
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}") from None


def write_suite(out_dir, names=("c17",) + BENCHMARK_SUITE) -> list[str]:
    """Write the benchmark `.bench` files; returns the file paths."""
    import os

    from .netlist import write_bench_file

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in names:
        p = os.path.join(str(out_dir), f"{name}.bench")
        write_bench_file(generate(name), p)
        paths.append(p)
    return paths
