"""Incremental CDCL SAT solver with assumptions.

Self-contained backend for the attack engine: two-watched-literal
propagation, first-UIP learning with reason-based minimization, VSIDS
branching with phase saving, Luby restarts, and activity-driven learned
clause reduction.  Literals are DIMACS-style signed integers; clause
addition and ``solve(assumptions=...)`` calls may be interleaved freely.

Any solver exposing ``new_var`` / ``add_clause`` / ``solve`` /
``model_value`` can replace this one in the attack code.
"""
from __future__ import annotations

import heapq
import time


class SolverTimeout(Exception):
    """Raised when solve() exceeds its wall-clock deadline."""


def _luby(i: int) -> int:
    # Luby restart sequence (0-based): 1 1 2 1 1 2 4 ...
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i %= size
    return 1 << seq


class Solver:
    def __init__(self):
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self._cla_act: dict[int, float] = {}
        self.watches: list[list[list[int]]] = [[], []]  # indexed by literal code
        self.assigns: list[int] = [0]                   # var -> 1 / -1 / 0
        self.level: list[int] = [0]
        self.reason: list = [None]
        self.activity: list[float] = [0.0]
        self.polarity: list[int] = [0]                  # saved phase per var
        self.order: list[tuple[float, int]] = []        # lazy heap of (-act, var)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.cla_inc = 1.0
        self._unsat = False
        self._model: list[int] = []
        self.n_conflicts = 0
        self.n_decisions = 0
        self.n_propagations = 0
        self.max_learnts = 4000.0

    # -- problem construction ---------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        self.assigns.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.polarity.append(0)
        self.watches.append([])
        self.watches.append([])
        return self.nvars

    def _ensure_vars(self, lits) -> None:
        top = max(abs(l) for l in lits)
        while self.nvars < top:
            self.new_var()

    def add_clause(self, lits) -> bool:
        """Add a problem clause; returns False once the instance is UNSAT."""
        if self._unsat:
            return False
        lits = list(lits)
        if not lits:
            self._unsat = True
            return False
        self._ensure_vars(lits)
        if self.trail_lim:
            self._cancel_until(0)
        out = []
        prev = 0
        for l in sorted(set(lits), key=abs):
            if l == -prev:
                return True  # tautology
            prev = l
            v = self.assigns[l] if l > 0 else -self.assigns[-l]
            if v == 1:
                return True  # satisfied at root level
            if v == -1:
                continue     # falsified at root level: drop
            out.append(l)
        if not out:
            self._unsat = True
            return False
        if len(out) == 1:
            if not self._enqueue(out[0], None) or self._propagate() is not None:
                self._unsat = True
                return False
            return True
        self.clauses.append(out)
        self._attach(out)
        return True

    @staticmethod
    def _code(l: int) -> int:
        return l + l if l > 0 else 1 - (l + l)

    def _attach(self, c: list[int]) -> None:
        self.watches[self._code(c[0])].append(c)
        self.watches[self._code(c[1])].append(c)

    # -- assignment ----------------------------------------------------------

    def _value(self, l: int) -> int:
        return self.assigns[l] if l > 0 else -self.assigns[-l]

    def _enqueue(self, l: int, reason) -> bool:
        v = l if l > 0 else -l
        cur = self.assigns[v]
        want = 1 if l > 0 else -1
        if cur != 0:
            return cur == want
        self.assigns[v] = want
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(l)
        return True

    def _propagate(self):
        """Unit propagation; returns the conflicting clause or None."""
        assigns = self.assigns
        watches = self.watches
        trail = self.trail
        level_now = len(self.trail_lim)
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.n_propagations += 1
            neg = -p
            ws = watches[neg + neg if neg > 0 else 1 - (neg + neg)]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                first = c[0]
                if first == neg:
                    c[0] = first = c[1]
                    c[1] = neg
                fv = assigns[first] if first > 0 else -assigns[-first]
                if fv == 1:
                    ws[j] = c
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    if (assigns[lk] if lk > 0 else -assigns[-lk]) != -1:
                        c[1] = lk
                        c[k] = neg
                        watches[lk + lk if lk > 0 else 1 - (lk + lk)].append(c)
                        found = True
                        break
                if found:
                    continue
                ws[j] = c
                j += 1
                if fv == -1:
                    while i < n:  # conflict: keep the rest of the list intact
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    return c
                v = first if first > 0 else -first
                assigns[v] = 1 if first > 0 else -1
                self.level[v] = level_now
                self.reason[v] = c
                trail.append(first)
            del ws[j:]
        return None

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        bound = self.trail_lim[lvl]
        assigns = self.assigns
        order = self.order
        activity = self.activity
        for idx in range(len(self.trail) - 1, bound - 1, -1):
            l = self.trail[idx]
            v = l if l > 0 else -l
            self.polarity[v] = assigns[v]
            assigns[v] = 0
            self.reason[v] = None
            heapq.heappush(order, (-activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    # -- activity --------------------------------------------------------------

    def _bump_var(self, v: int) -> None:
        act = self.activity[v] + self.var_inc
        self.activity[v] = act
        if act > 1e100:
            inv = 1e-100
            for i in range(1, self.nvars + 1):
                self.activity[i] *= inv
            self.var_inc *= inv
            act = self.activity[v]
        if self.assigns[v] == 0:
            heapq.heappush(self.order, (-act, v))

    def _bump_clause(self, c: list[int]) -> None:
        cid = id(c)
        if cid not in self._cla_act:
            return
        act = self._cla_act[cid] + self.cla_inc
        self._cla_act[cid] = act
        if act > 1e20:
            inv = 1e-20
            for k in self._cla_act:
                self._cla_act[k] *= inv
            self.cla_inc *= inv

    # -- learning ----------------------------------------------------------------

    def _analyze(self, confl):
        """First-UIP conflict analysis plus reason-based literal minimization."""
        seen = bytearray(self.nvars + 1)
        learnt = [0]
        path = 0
        p = 0
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        level = self.level
        trail = self.trail
        reason = self.reason
        while True:
            if p != 0:
                self._bump_clause(confl)
            for q in confl:
                if q == p:
                    continue
                v = q if q > 0 else -q
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    self._bump_var(v)
                    if level[v] >= cur_level:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            pl = trail[idx]
            idx -= 1
            v = pl if pl > 0 else -pl
            path -= 1
            if path == 0:
                learnt[0] = -pl
                break
            seen[v] = 0
            confl = reason[v]
            p = pl
        # drop literals implied by the remaining ones through their reasons
        minimized = [learnt[0]]
        for q in learnt[1:]:
            r = reason[abs(q)]
            if r is None:
                minimized.append(q)
                continue
            for other in r:
                ov = abs(other)
                if ov != abs(q) and not seen[ov] and level[ov] > 0:
                    minimized.append(q)
                    break
        learnt = minimized
        bt = 0 if len(learnt) == 1 else max(level[abs(q)] for q in learnt[1:])
        return learnt, bt

    def _record_learnt(self, learnt: list[int]) -> None:
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
            return
        best = 1
        for k in range(2, len(learnt)):
            if self.level[abs(learnt[k])] > self.level[abs(learnt[best])]:
                best = k
        learnt[1], learnt[best] = learnt[best], learnt[1]
        self.learnts.append(learnt)
        self._cla_act[id(learnt)] = self.cla_inc
        self._attach(learnt)
        self._enqueue(learnt[0], learnt)

    def _reduce_db(self) -> None:
        reasons = {id(self.reason[abs(l)]) for l in self.trail
                   if self.reason[abs(l)] is not None}
        ranked = sorted(self.learnts, key=lambda c: self._cla_act.get(id(c), 0.0))
        drop = set()
        for c in ranked[: len(ranked) // 2]:
            if len(c) > 2 and id(c) not in reasons:
                drop.add(id(c))
        if not drop:
            return
        self.learnts = [c for c in self.learnts if id(c) not in drop]
        for code in range(2, 2 * self.nvars + 2):
            ws = self.watches[code]
            if ws:
                self.watches[code] = [c for c in ws if id(c) not in drop]
        for cid in drop:
            del self._cla_act[cid]

    # -- search -------------------------------------------------------------------

    def _pick_branch_var(self):
        order = self.order
        assigns = self.assigns
        activity = self.activity
        while order:
            negact, v = heapq.heappop(order)
            if assigns[v] == 0 and -negact == activity[v]:
                return v
        for v in range(1, self.nvars + 1):  # stale-heap fallback
            if assigns[v] == 0:
                return v
        return None

    def solve(self, assumptions=(), deadline: float | None = None) -> bool:
        """Search for a model consistent with the given assumption literals.

        Raises :class:`SolverTimeout` if ``deadline`` (a ``time.monotonic``
        timestamp) passes before the search finishes.
        """
        if self._unsat:
            return False
        assumptions = list(assumptions)
        if assumptions:
            self._ensure_vars(assumptions)
        self._cancel_until(0)
        if self._propagate() is not None:
            self._unsat = True
            return False
        self.order = [(-self.activity[v], v)
                      for v in range(1, self.nvars + 1) if self.assigns[v] == 0]
        heapq.heapify(self.order)
        self.max_learnts = max(self.max_learnts, len(self.clauses) / 3.0)

        restart_round = 1
        conflicts_left = 100 * _luby(restart_round)
        while True:
            confl = self._propagate()
            if confl is not None:
                self.n_conflicts += 1
                conflicts_left -= 1
                if deadline is not None and not (self.n_conflicts & 127) \
                        and time.monotonic() > deadline:
                    self._cancel_until(0)
                    raise SolverTimeout
                if not self.trail_lim:
                    self._unsat = True
                    return False
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                self._record_learnt(learnt)
                self.var_inc /= 0.95
                self.cla_inc /= 0.999
                continue
            if conflicts_left <= 0:
                restart_round += 1
                conflicts_left = 100 * _luby(restart_round)
                self._cancel_until(0)
                continue
            if len(self.learnts) - len(self.trail) >= self.max_learnts:
                self.max_learnts *= 1.3
                self._reduce_db()
            lvl = len(self.trail_lim)
            if lvl < len(assumptions):
                a = assumptions[lvl]
                av = self._value(a)
                if av == -1:
                    self._cancel_until(0)
                    return False
                self.trail_lim.append(len(self.trail))
                if av == 0:
                    self._enqueue(a, None)
                continue
            v = self._pick_branch_var()
            if v is None:
                self._model = self.assigns[:]
                self._cancel_until(0)
                return True
            self.n_decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(v if self.polarity[v] > 0 else -v, None)

    # -- results --------------------------------------------------------------------

    def model_value(self, var: int) -> bool:
        return self._model[var] > 0

    def model_lits(self) -> list[int]:
        return [v if self._model[v] > 0 else -v for v in range(1, self.nvars + 1)]

    @property
    def stats(self) -> dict:
        return {
            "vars": self.nvars,
            "clauses": len(self.clauses),
            "learnts": len(self.learnts),
            "conflicts": self.n_conflicts,
            "decisions": self.n_decisions,
            "propagations": self.n_propagations,
        }
