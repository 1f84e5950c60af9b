"""Candidate verification: parse validity, correct-key behavior, corruption, cost."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .compiler import OverheadMetrics, overhead
from .netlist import Netlist, parse_bench, validate, write_bench
from .sim import (
    DEFAULT_CHECK_PATTERNS,
    DEFAULT_CORRUPTION_INPUTS,
    DEFAULT_CORRUPTION_KEYS,
    CorruptionEstimate,
    check_correct_key,
    measure_corruption,
)


@dataclass(frozen=True)
class VerificationReport:
    parse_ok: bool
    correct_key_ok: bool
    correct_key_mismatches: int
    corruption: Optional[CorruptionEstimate]
    overhead: Optional[OverheadMetrics]

    def to_dict(self) -> dict:
        return {
            "parse_ok": self.parse_ok,
            "correct_key_ok": self.correct_key_ok,
            "correct_key_mismatches": self.correct_key_mismatches,
            "corruption": self.corruption.to_dict() if self.corruption else None,
            "overhead": self.overhead.to_dict() if self.overhead else None,
        }


def verify_locked(orig: Netlist, locked: Netlist,
                  check_patterns: int = DEFAULT_CHECK_PATTERNS,
                  corruption_inputs: int = DEFAULT_CORRUPTION_INPUTS,
                  corruption_keys: int = DEFAULT_CORRUPTION_KEYS,
                  seed: int = 0) -> VerificationReport:
    """Run the functional-validity battery on one locked candidate.

    ``parse_ok`` demands a clean serialize/reparse/validate round trip;
    correct-key consistency and wrong-key corruption come from simulation
    against the original.
    """
    try:
        reparsed = parse_bench(write_bench(locked), name=locked.name)
        parse_ok = not validate(reparsed)
    except Exception:
        parse_ok = False
    if not parse_ok:
        return VerificationReport(False, False, -1, None, None)
    ok, mismatches = check_correct_key(orig, locked,
                                       patterns=check_patterns, seed=seed)
    corruption = measure_corruption(orig, locked,
                                    n_inputs=corruption_inputs,
                                    n_keys=corruption_keys, seed=seed)
    return VerificationReport(True, ok, mismatches, corruption,
                              overhead(orig, locked))
