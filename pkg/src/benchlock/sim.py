"""Bit-parallel combinational simulation and sampled functional checks.

Signals carry packed ``uint64`` lanes, 64 patterns per word; pattern ``p``
lives in word ``p >> 6``, bit ``p & 63``.  Bits beyond the pattern count are
unspecified and masked at readout.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .netlist import KeyVector, KeyWidthError, Netlist

EXHAUSTIVE_INPUT_LIMIT = 12
DEFAULT_CORRUPTION_INPUTS = 256
DEFAULT_CORRUPTION_KEYS = 16
DEFAULT_CHECK_PATTERNS = 4096

_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


class PatternBlock:
    """Packed assignment of ``n_patterns`` values to a set of signals."""

    def __init__(self, n_patterns: int, lanes: dict[str, np.ndarray] | None = None):
        if n_patterns < 1:
            raise ValueError("need at least one pattern")
        self.n_patterns = n_patterns
        self.n_words = (n_patterns + 63) >> 6
        self.lanes: dict[str, np.ndarray] = lanes if lanes is not None else {}

    def set_constant(self, sig: str, bit: int) -> None:
        fill = _ALL_ONES if bit else np.uint64(0)
        self.lanes[sig] = np.full(self.n_words, fill, dtype=np.uint64)

    def set_bits(self, sig: str, bits) -> None:
        arr = np.zeros(self.n_words, dtype=np.uint64)
        for p, b in enumerate(bits):
            if b:
                arr[p >> 6] |= np.uint64(1) << np.uint64(p & 63)
        self.lanes[sig] = arr

    def get_bit(self, sig: str, p: int) -> int:
        return int(self.lanes[sig][p >> 6] >> np.uint64(p & 63)) & 1

    def tail_mask(self) -> np.ndarray:
        """Per-word mask clearing bits past n_patterns."""
        mask = np.full(self.n_words, _ALL_ONES, dtype=np.uint64)
        rem = self.n_patterns & 63
        if rem:
            mask[-1] = (np.uint64(1) << np.uint64(rem)) - np.uint64(1)
        return mask

    @classmethod
    def exhaustive(cls, signals: list[str]) -> "PatternBlock":
        """All ``2**len(signals)`` patterns; signal i toggles with period ``2**(i+1)``."""
        k = len(signals)
        if k > EXHAUSTIVE_INPUT_LIMIT + 12:
            raise ValueError(f"refusing exhaustive block for {k} signals")
        blk = cls(1 << k if k else 1)
        for i, s in enumerate(signals):
            arr = np.zeros(blk.n_words, dtype=np.uint64)
            if i < 6:
                # within-word toggle patterns: 0101.., 0011.., ...
                bit = np.uint64(0)
                for p in range(min(64, blk.n_patterns)):
                    if (p >> i) & 1:
                        bit |= np.uint64(1) << np.uint64(p)
                arr[:] = bit
            else:
                for w in range(blk.n_words):
                    if (w >> (i - 6)) & 1:
                        arr[w] = _ALL_ONES
            blk.lanes[s] = arr
        return blk

    @classmethod
    def random(cls, signals: list[str], n_patterns: int,
               rng: random.Random) -> "PatternBlock":
        blk = cls(n_patterns)
        for s in signals:
            arr = np.array(
                [rng.getrandbits(64) for _ in range(blk.n_words)], dtype=np.uint64)
            blk.lanes[s] = arr
        return blk

    @classmethod
    def single(cls, assignment: dict[str, int]) -> "PatternBlock":
        blk = cls(1)
        for s, b in assignment.items():
            blk.set_constant(s, b)
        return blk


def evaluate(n: Netlist, inputs: PatternBlock,
             key: KeyVector | None = None) -> dict[str, np.ndarray]:
    """Evaluate all primary outputs over a pattern block.

    Parameters
    ----------
    n: Netlist
        Valid netlist; evaluated in topological order.
    inputs: PatternBlock
        Lanes for every primary input.
    key: KeyVector, optional
        Required exactly when ``n`` has key inputs; broadcast to all patterns.

    Returns
    -------
    dict of str to numpy.uint64 array
        One lane array per primary output (tail bits masked).
    """
    if (key is not None) != bool(n.key_inputs):
        raise KeyWidthError("key must be supplied exactly when the netlist "
                            "has key inputs")
    if key is not None and key.width != len(n.key_inputs):
        raise KeyWidthError(f"key width {key.width} != {len(n.key_inputs)}")
    missing = [s for s in n.primary_inputs if s not in inputs.lanes]
    if missing:
        raise ValueError(f"no assignment for input(s) {missing[:5]}")

    vals: dict[str, np.ndarray] = dict(inputs.lanes)
    if key is not None:
        zero = np.zeros(inputs.n_words, dtype=np.uint64)
        ones = np.full(inputs.n_words, _ALL_ONES, dtype=np.uint64)
        for s, b in zip(n.key_inputs, key.bits):
            vals[s] = ones if b else zero

    for g in n.topo_gates():
        kind = g.kind
        f = g.fanin
        if kind == "AND" or kind == "NAND":
            acc = vals[f[0]] & vals[f[1]]
            for x in f[2:]:
                acc = acc & vals[x]
            vals[g.output] = ~acc if kind == "NAND" else acc
        elif kind == "OR" or kind == "NOR":
            acc = vals[f[0]] | vals[f[1]]
            for x in f[2:]:
                acc = acc | vals[x]
            vals[g.output] = ~acc if kind == "NOR" else acc
        elif kind == "XOR":
            vals[g.output] = vals[f[0]] ^ vals[f[1]]
        elif kind == "XNOR":
            vals[g.output] = ~(vals[f[0]] ^ vals[f[1]])
        elif kind == "NOT":
            vals[g.output] = ~vals[f[0]]
        else:  # BUFF
            vals[g.output] = vals[f[0]]

    mask = inputs.tail_mask()
    return {o: vals[o] & mask for o in n.primary_outputs}


def evaluate_single(n: Netlist, assignment: dict[str, int],
                    key: KeyVector | None = None) -> tuple[int, ...]:
    """Single-pattern convenience wrapper; returns output bits in order."""
    blk = PatternBlock.single(assignment)
    out = evaluate(n, blk, key)
    return tuple(int(out[o][0]) & 1 for o in n.primary_outputs)


def _popcount(arr: np.ndarray) -> int:
    return int(np.unpackbits(arr.view(np.uint8)).sum())


def _input_block(n: Netlist, patterns: int, rng: random.Random) -> PatternBlock:
    ins = list(n.primary_inputs)
    if len(ins) <= EXHAUSTIVE_INPUT_LIMIT:
        return PatternBlock.exhaustive(ins)
    return PatternBlock.random(ins, patterns, rng)


def check_correct_key(orig: Netlist, locked: Netlist,
                      patterns: int = DEFAULT_CHECK_PATTERNS,
                      seed: int = 0) -> tuple[bool, int]:
    """Compare the locked netlist under its correct key against the original.

    Exhaustive when the input count allows it, otherwise ``patterns`` seeded
    random vectors.  Returns ``(match, mismatched_output_bits)``.
    """
    if locked.correct_key is None:
        raise ValueError("locked netlist carries no correct key")
    if set(orig.primary_inputs) != set(locked.primary_inputs):
        raise ValueError("primary-input interfaces differ")
    if len(orig.primary_outputs) != len(locked.primary_outputs):
        raise ValueError("primary-output counts differ")
    blk = _input_block(orig, patterns, random.Random(seed))
    ref = evaluate(orig, blk)
    got = evaluate(locked, blk, locked.correct_key)
    mismatches = 0
    for o_ref, o_got in zip(orig.primary_outputs, locked.primary_outputs):
        mismatches += _popcount(ref[o_ref] ^ got[o_got])
    return mismatches == 0, mismatches


@dataclass(frozen=True)
class CorruptionEstimate:
    """Wrong-key output corruption, sampled or exhaustive."""

    bit_error_rate: float      # mismatched output bits / (outputs * inputs * keys)
    pattern_error_rate: float  # (input, key) samples with >= 1 mismatched output
    samples_inputs: int
    samples_keys: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "bit_error_rate": self.bit_error_rate,
            "pattern_error_rate": self.pattern_error_rate,
            "samples_inputs": self.samples_inputs,
            "samples_keys": self.samples_keys,
            "seed": self.seed,
        }


def measure_corruption(orig: Netlist, locked: Netlist,
                       n_inputs: int = DEFAULT_CORRUPTION_INPUTS,
                       n_keys: int = DEFAULT_CORRUPTION_KEYS,
                       seed: int = 0) -> CorruptionEstimate:
    """Sample output mismatch of the locked netlist under wrong keys.

    Keys are drawn uniformly with replacement, redrawing any draw that hits
    the exact correct key value; inputs are exhaustive for small circuits and
    seeded-random otherwise.  Deterministic for a given seed.
    """
    if locked.correct_key is None:
        raise ValueError("locked netlist carries no correct key")
    width = len(locked.key_inputs)
    if width == 0:
        raise ValueError("locked netlist has no key inputs")
    rng = random.Random(seed)
    blk = _input_block(orig, n_inputs, rng)
    ref = evaluate(orig, blk)
    correct = locked.correct_key.to_int()

    n_outputs = len(orig.primary_outputs)
    total_bits = 0
    bad_bits = 0
    bad_patterns = 0
    for _ in range(n_keys):
        k = rng.getrandbits(width)
        while k == correct:
            k = rng.getrandbits(width)
        got = evaluate(locked, blk, KeyVector.from_int(k, width))
        any_bad = np.zeros(blk.n_words, dtype=np.uint64)
        for o_ref, o_got in zip(orig.primary_outputs, locked.primary_outputs):
            diff = ref[o_ref] ^ got[o_got]
            bad_bits += _popcount(diff)
            any_bad |= diff
        bad_patterns += _popcount(any_bad)
        total_bits += n_outputs * blk.n_patterns
    return CorruptionEstimate(
        bit_error_rate=bad_bits / total_bits if total_bits else 0.0,
        pattern_error_rate=bad_patterns / (blk.n_patterns * n_keys),
        samples_inputs=blk.n_patterns,
        samples_keys=n_keys,
        seed=seed,
    )
