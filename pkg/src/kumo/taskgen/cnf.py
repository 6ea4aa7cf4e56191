"""CNF construction and a small complete SAT solver.

Variables are positive integers; literals are signed integers (DIMACS
convention). Cardinality constraints use the sequential-counter encoding,
which is linear in ``n * k`` and propagates well under unit propagation.

The solver is an iterative DPLL with two-watched-literal unit propagation
and chronological backtracking. Instances produced by the task generator
are small and under-constrained, so conflict-driven learning would be
overkill; completeness is what matters (UNSAT must be trusted).
"""

from __future__ import annotations

from typing import Iterable, Sequence


class CnfBuilder:
    """Accumulates clauses and allocates fresh variables."""

    def __init__(self):
        self.num_vars = 0
        self.clauses: list[list[int]] = []

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    def add_clause(self, lits: Iterable[int]):
        clause = list(lits)
        assert clause, "empty clause must be added via add_contradiction"
        self.clauses.append(clause)

    def add_contradiction(self):
        self.clauses.append([])

    def at_least_one(self, lits: Sequence[int]):
        if not lits:
            self.add_contradiction()
        else:
            self.add_clause(lits)

    def at_most_k(self, lits: Sequence[int], k: int):
        """Sequential-counter encoding of sum(lits) <= k."""
        n = len(lits)
        if k < 0:
            self.add_contradiction()
            return
        if k == 0:
            for x in lits:
                self.add_clause([-x])
            return
        if k >= n:
            return
        # s[i][j] true => at least j+1 of lits[0..i] are true.
        s = [[self.new_var() for _ in range(k)] for _ in range(n - 1)]
        self.add_clause([-lits[0], s[0][0]])
        for j in range(1, k):
            self.add_clause([-s[0][j]])
        for i in range(1, n - 1):
            self.add_clause([-lits[i], s[i][0]])
            self.add_clause([-s[i - 1][0], s[i][0]])
            for j in range(1, k):
                self.add_clause([-lits[i], -s[i - 1][j - 1], s[i][j]])
                self.add_clause([-s[i - 1][j], s[i][j]])
            self.add_clause([-lits[i], -s[i - 1][k - 1]])
        self.add_clause([-lits[n - 1], -s[n - 2][k - 1]])

    def at_most_one(self, lits: Sequence[int]):
        self.at_most_k(lits, 1)


def solve(
    num_vars: int,
    clauses: Sequence[Sequence[int]],
    decision_order: Sequence[int] | None = None,
) -> list[bool] | None:
    """Complete satisfiability check.

    Returns a model as a bool list indexed by variable (index 0 unused), or
    None when unsatisfiable. ``decision_order`` fixes the branching order
    over variables; unlisted variables are appended in index order, so a
    partial order (e.g. just the problem variables, leaving encoder
    auxiliaries to propagation) is fine. Branches try False first.
    """
    UNASSIGNED, TRUE, FALSE = 0, 1, -1
    assign = [UNASSIGNED] * (num_vars + 1)

    # Normalize: drop tautologies and duplicate literals; collect units.
    watched: list[list[int]] = []  # per clause: the two watched literals live at [0],[1]
    watch_map: dict[int, list[int]] = {}
    units: list[int] = []
    for raw in clauses:
        seen: set[int] = set()
        taut = False
        lits: list[int] = []
        for lit in raw:
            if -lit in seen:
                taut = True
                break
            if lit not in seen:
                seen.add(lit)
                lits.append(lit)
        if taut:
            continue
        if not lits:
            return None
        if len(lits) == 1:
            units.append(lits[0])
            continue
        cid = len(watched)
        watched.append(lits)
        watch_map.setdefault(lits[0], []).append(cid)
        watch_map.setdefault(lits[1], []).append(cid)

    trail: list[int] = []  # literals assigned true, in order

    def value(lit: int) -> int:
        v = assign[abs(lit)]
        if v == UNASSIGNED:
            return UNASSIGNED
        return v if lit > 0 else -v

    def enqueue(lit: int) -> bool:
        v = value(lit)
        if v == TRUE:
            return True
        if v == FALSE:
            return False
        assign[abs(lit)] = TRUE if lit > 0 else FALSE
        trail.append(lit)
        return True

    def propagate(start: int) -> bool:
        """Unit-propagate from trail position ``start``; False on conflict."""
        qhead = start
        while qhead < len(trail):
            false_lit = -trail[qhead]
            qhead += 1
            watchers = watch_map.get(false_lit)
            if not watchers:
                continue
            kept: list[int] = []
            i = 0
            while i < len(watchers):
                cid = watchers[i]
                i += 1
                lits = watched[cid]
                # Ensure the false literal sits at position 1.
                if lits[0] == false_lit:
                    lits[0], lits[1] = lits[1], lits[0]
                other = lits[0]
                if value(other) == TRUE:
                    kept.append(cid)
                    continue
                moved = False
                for j in range(2, len(lits)):
                    if value(lits[j]) != FALSE:
                        lits[1], lits[j] = lits[j], lits[1]
                        watch_map.setdefault(lits[1], []).append(cid)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(cid)
                if not enqueue(other):
                    kept.extend(watchers[i:])
                    watch_map[false_lit] = kept
                    return False
            watch_map[false_lit] = kept
        return True

    for lit in units:
        if not enqueue(lit):
            return None
    if not propagate(0):
        return None

    order = []
    listed = set()
    if decision_order is not None:
        for v in decision_order:
            if v not in listed:
                listed.add(v)
                order.append(v)
    order.extend(v for v in range(1, num_vars + 1) if v not in listed)

    # Decision stack entries: (var, trail length before decide, flipped?)
    decisions: list[list] = []
    cursor = 0

    def undo_to(mark: int):
        while len(trail) > mark:
            assign[abs(trail.pop())] = UNASSIGNED

    while True:
        # Find next unassigned decision variable.
        while cursor < len(order) and assign[order[cursor]] != UNASSIGNED:
            cursor += 1
        if cursor >= len(order):
            return [False] + [assign[v] == TRUE for v in range(1, num_vars + 1)]
        var = order[cursor]
        decisions.append([var, len(trail), False, cursor])
        enqueue(-var)  # try False first
        while not propagate(decisions[-1][1] if decisions else 0):
            # Conflict: flip the most recent unflipped decision.
            while decisions and decisions[-1][2]:
                undo_to(decisions[-1][1])
                decisions.pop()
            if not decisions:
                return None
            d = decisions[-1]
            undo_to(d[1])
            d[2] = True
            cursor = d[3]
            enqueue(d[0])  # flipped branch: True
