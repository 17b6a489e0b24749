"""A trail-based CP micro-solver used to dogfood the testing harness.

It provides realistic stateful propagators (bounds-consistent sum,
forward-checking and matching-based alldifferent) plus a small corpus of
seeded bugs reachable only through an explicit `with_bug` selector. The
trail records per-removal undo entries, so backtracking restores domains
exactly; propagators run on a FIFO queue until fixpoint.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .comparator import Filter
from .domains import (
    INCONSISTENT,
    ContractViolationError,
    Domain,
    Filtered,
    FilterOutcome,
    Instance,
)
from .stateful import FilterWithState, Pop, Push, RestrictDomain, BranchOp


class Inconsistency(Exception):
    """Raised inside the solver when a domain empties."""


class Trail:
    """Undo log of (variable, removed value) entries with frame markers."""

    def __init__(self) -> None:
        self._entries: list[tuple["TrailedVar", int]] = []
        self._marks: list[int] = []

    @property
    def frames(self) -> int:
        return len(self._marks)

    def record(self, var: "TrailedVar", value: int) -> None:
        self._entries.append((var, value))

    def push(self) -> None:
        self._marks.append(len(self._entries))

    def pop(self) -> None:
        if not self._marks:
            raise ContractViolationError("pop_state with no open frame")
        mark = self._marks.pop()
        while len(self._entries) > mark:
            var, value = self._entries.pop()
            var._values.add(value)


class TrailedVar:
    """An integer variable whose removals are undone exactly on backtrack."""

    __slots__ = ("vid", "_values", "_solver", "watchers")

    def __init__(self, solver: "Solver", vid: int, values: Iterable[int]) -> None:
        self.vid = vid
        self._values = set(values)
        self._solver = solver
        self.watchers: list["Propagator"] = []
        if not self._values:
            raise ValueError("a solver variable needs a non-empty domain")

    def values(self) -> tuple[int, ...]:
        return tuple(sorted(self._values))

    def size(self) -> int:
        return len(self._values)

    def is_fixed(self) -> bool:
        return len(self._values) == 1

    def value(self) -> int:
        if len(self._values) != 1:
            raise ValueError("variable is not fixed")
        return next(iter(self._values))

    def min(self) -> int:
        return min(self._values)

    def max(self) -> int:
        return max(self._values)

    def __contains__(self, v: int) -> bool:
        return v in self._values

    def _removed(self, vs: list[int]) -> bool:
        trail = self._solver.trail
        for v in vs:
            trail.record(self, v)
            self._values.discard(v)
        if not self._values:
            raise Inconsistency(f"domain of x{self.vid} emptied")
        if vs:
            self._solver.on_change(self)
        return bool(vs)

    def remove_value(self, v: int) -> bool:
        if v not in self._values:
            return False
        return self._removed([v])

    def remove_below(self, bound: int) -> bool:
        return self._removed([v for v in self._values if v < bound])

    def remove_above(self, bound: int) -> bool:
        return self._removed([v for v in self._values if v > bound])

    def assign(self, v: int) -> bool:
        if v not in self._values:
            raise Inconsistency(f"x{self.vid} cannot take value {v}")
        return self._removed([w for w in self._values if w != v])


class Propagator:
    """Contracting filtering procedure over a scope of trailed variables."""

    def __init__(self, scope: list[TrailedVar]) -> None:
        self.scope = scope
        self.queued = False

    def propagate(self) -> None:
        raise NotImplementedError


class Solver:
    """Single-owner micro-solver: variables, trail, FIFO propagation queue."""

    def __init__(self, queue_policy: str = "fifo") -> None:
        if queue_policy not in ("fifo", "lifo"):
            raise ValueError("queue_policy must be 'fifo' or 'lifo'")
        self.trail = Trail()
        self.variables: list[TrailedVar] = []
        self.propagators: list[Propagator] = []
        self._queue: deque[Propagator] = deque()
        self._policy = queue_policy

    def int_var(self, values: Iterable[int]) -> TrailedVar:
        var = TrailedVar(self, len(self.variables), values)
        self.variables.append(var)
        return var

    def on_change(self, var: TrailedVar) -> None:
        for p in var.watchers:
            self._schedule(p)

    def _schedule(self, p: Propagator) -> None:
        if not p.queued:
            p.queued = True
            self._queue.append(p)

    def schedule_all(self) -> None:
        for p in self.propagators:
            self._schedule(p)

    def post(self, p: Propagator) -> None:
        self.propagators.append(p)
        for var in p.scope:
            var.watchers.append(p)
        self._schedule(p)
        self.fixpoint()

    def fixpoint(self) -> None:
        try:
            while self._queue:
                p = self._queue.popleft() if self._policy == "fifo" else self._queue.pop()
                p.queued = False
                p.propagate()
        except Inconsistency:
            while self._queue:
                self._queue.pop().queued = False
            raise

    def push_state(self) -> None:
        self.trail.push()

    def pop_state(self) -> None:
        self.trail.pop()


class BugId(enum.Enum):
    NONE = "NONE"
    BUG_SUM_REVERSED_BOUND = "BUG_SUM_REVERSED_BOUND"
    BUG_ALLDIFF_FC_SKIP_LAST = "BUG_ALLDIFF_FC_SKIP_LAST"
    BUG_TRAIL_NO_RESTORE = "BUG_TRAIL_NO_RESTORE"


class SumEqualsBC(Propagator):
    """Bounds-consistent sum-equals-constant propagator.

    With BUG_TRAIL_NO_RESTORE, the set of fixed variables and their values
    is cached without trail entries, so the cache goes stale after a pop.
    """

    def __init__(self, total: int, scope: list[TrailedVar], bug: BugId = BugId.NONE) -> None:
        super().__init__(scope)
        self.total = total
        self.bug = bug
        self._seen_fixed: dict[int, int] = {}  # deliberately not trailed

    def propagate(self) -> None:
        stale = self.bug is BugId.BUG_TRAIL_NO_RESTORE
        reverse = self.bug is BugId.BUG_SUM_REVERSED_BOUND
        changed = True
        while changed:
            changed = False
            if stale:
                for i, var in enumerate(self.scope):
                    if i not in self._seen_fixed and var.is_fixed():
                        self._seen_fixed[i] = var.value()
            mins, maxs = [], []
            for i, var in enumerate(self.scope):
                if stale and i in self._seen_fixed:
                    mins.append(self._seen_fixed[i])
                    maxs.append(self._seen_fixed[i])
                else:
                    mins.append(var.min())
                    maxs.append(var.max())
            total_min, total_max = sum(mins), sum(maxs)
            for i, var in enumerate(self.scope):
                others_min = total_min - mins[i]
                others_max = total_max - maxs[i]
                lo = self.total - others_max
                hi = self.total - others_min
                if reverse:
                    lo, hi = self.total - others_min, self.total - others_max
                if var.remove_below(lo):
                    changed = True
                if var.remove_above(hi):
                    changed = True


class AllDifferentFC(Propagator):
    """Forward checking: the value of every fixed variable is pruned from
    the other domains.

    BUG_ALLDIFF_FC_SKIP_LAST never prunes the highest-index variable.
    BUG_TRAIL_NO_RESTORE remembers fixed (variable, value) pairs without
    trail entries and keeps pruning them after a pop.
    """

    def __init__(self, scope: list[TrailedVar], bug: BugId = BugId.NONE) -> None:
        super().__init__(scope)
        self.bug = bug
        self._seen_fixed: dict[int, int] = {}  # deliberately not trailed

    def _fixed_pairs(self) -> list[tuple[int, int]]:
        if self.bug is BugId.BUG_TRAIL_NO_RESTORE:
            for i, var in enumerate(self.scope):
                if i not in self._seen_fixed and var.is_fixed():
                    self._seen_fixed[i] = var.value()
            return sorted(self._seen_fixed.items())
        return [(i, v.value()) for i, v in enumerate(self.scope) if v.is_fixed()]

    def propagate(self) -> None:
        last = len(self.scope) - 1
        skip_last = self.bug is BugId.BUG_ALLDIFF_FC_SKIP_LAST
        changed = True
        while changed:
            changed = False
            for i, value in self._fixed_pairs():
                for j, var in enumerate(self.scope):
                    if j == i or (skip_last and j == last):
                        continue
                    if var.remove_value(value):
                        changed = True


def _tarjan_scc(nodes: list, succ: dict) -> dict:
    """Iterative Tarjan; returns node -> component id."""
    index: dict = {}
    lowlink: dict = {}
    comp: dict = {}
    on_stack: set = set()
    stack: list = []
    counter = 0
    comp_id = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = comp_id
                    if w == node:
                        break
                comp_id += 1
    return comp


class AllDifferentAC(Propagator):
    """Matching-based (Regin-style) arc-consistent alldifferent.

    The maximum matching is kept across calls and only repaired where the
    domains invalidated it, which makes the propagator genuinely stateful.
    With BUG_TRAIL_NO_RESTORE, fixed (variable, value) pairs are remembered
    without trail entries and pre-pruned from the other domains, which is
    sound during a descent but wrong after a pop.
    """

    def __init__(self, scope: list[TrailedVar], bug: BugId = BugId.NONE) -> None:
        super().__init__(scope)
        self.bug = bug
        self._match: dict[int, int] = {}  # var index -> matched value
        self._seen_fixed: dict[int, int] = {}  # deliberately not trailed

    def _stale_prune(self) -> None:
        for i, var in enumerate(self.scope):
            if i not in self._seen_fixed and var.is_fixed():
                self._seen_fixed[i] = var.value()
        for i, value in sorted(self._seen_fixed.items()):
            for j, var in enumerate(self.scope):
                if j != i:
                    var.remove_value(value)

    def _repair_matching(self) -> dict[int, int]:
        match = self._match
        for i, var in list(match.items()):
            if match[i] not in self.scope[i]:
                del match[i]
        owner = {v: i for i, v in match.items()}

        def augment(i: int, visited: set[int]) -> bool:
            for v in self.scope[i].values():
                if v in visited:
                    continue
                visited.add(v)
                holder = owner.get(v)
                if holder is None or augment(holder, visited):
                    match[i] = v
                    owner[v] = i
                    return True
            return False

        for i in range(len(self.scope)):
            if i not in match and not augment(i, set()):
                raise Inconsistency("alldifferent: no saturating matching")
        return match

    def propagate(self) -> None:
        if self.bug is BugId.BUG_TRAIL_NO_RESTORE:
            self._stale_prune()
        match = self._repair_matching()

        # Residual digraph: matched edges var -> value, others value -> var.
        var_node = [("v", i) for i in range(len(self.scope))]
        values = sorted({v for var in self.scope for v in var.values()})
        succ: dict = {("x", v): [] for v in values}
        for i, var in enumerate(self.scope):
            succ[("v", i)] = [("x", match[i])]
            for v in var.values():
                if v != match[i]:
                    succ[("x", v)].append(("v", i))

        comp = _tarjan_scc(var_node + [("x", v) for v in values], succ)

        matched_values = set(match.values())
        reach: set = set()
        frontier = [("x", v) for v in values if v not in matched_values]
        reach.update(frontier)
        while frontier:
            node = frontier.pop()
            for nxt in succ[node]:
                if nxt not in reach:
                    reach.add(nxt)
                    frontier.append(nxt)

        for i, var in enumerate(self.scope):
            for v in var.values():
                if v == match[i]:
                    continue
                if comp[("x", v)] != comp[("v", i)] and ("x", v) not in reach:
                    var.remove_value(v)


@dataclass(frozen=True)
class Recipe:
    """A named propagator construction, optionally with an injected bug."""

    name: str
    kind: str  # "sum-bc" | "alldiff-fc" | "alldiff-ac"
    total: Optional[int] = None
    bug: BugId = BugId.NONE

    def display_name(self) -> str:
        if self.bug is BugId.NONE:
            return self.name
        return f"{self.name}+bug:{self.bug.value}"

    def build(self, solver: Solver, scope: list[TrailedVar]) -> None:
        if self.kind == "sum-bc":
            solver.post(SumEqualsBC(self.total, scope, self.bug))
        elif self.kind == "alldiff-fc":
            solver.post(AllDifferentFC(scope, self.bug))
        elif self.kind == "alldiff-ac":
            solver.post(AllDifferentAC(scope, self.bug))
        else:
            raise ValueError(f"unknown recipe kind {self.kind!r}")


def sum_equals_bc(total: int) -> Recipe:
    return Recipe(name=f"sum-bc:{total}", kind="sum-bc", total=total)


def all_different_fc() -> Recipe:
    return Recipe(name="alldiff-fc", kind="alldiff-fc")


def all_different_ac() -> Recipe:
    return Recipe(name="alldiff-ac", kind="alldiff-ac")


_BUG_COMPAT = {
    BugId.NONE: ("sum-bc", "alldiff-fc", "alldiff-ac"),
    BugId.BUG_SUM_REVERSED_BOUND: ("sum-bc",),
    BugId.BUG_ALLDIFF_FC_SKIP_LAST: ("alldiff-fc",),
    BugId.BUG_TRAIL_NO_RESTORE: ("sum-bc", "alldiff-fc", "alldiff-ac"),
}


def with_bug(bug: BugId, recipe: Recipe) -> Recipe:
    if recipe.kind not in _BUG_COMPAT[bug]:
        raise ContractViolationError(
            f"bug {bug.value} does not apply to recipe {recipe.name!r}"
        )
    return replace(recipe, bug=bug)


def as_filter(recipe: Recipe, arity: int) -> Filter:
    """A static Filter running a fresh solver per application."""

    def apply(inst: Instance) -> FilterOutcome:
        if inst.arity != arity:
            raise ContractViolationError(
                f"instance arity {inst.arity} != filter arity {arity}"
            )
        if any(d.is_empty() for d in inst.domains):
            return INCONSISTENT
        solver = Solver()
        scope = [solver.int_var(d.values) for d in inst.domains]
        try:
            recipe.build(solver, scope)
        except Inconsistency:
            return INCONSISTENT
        return Filtered(Instance(Domain(v.values()) for v in scope))

    return Filter(arity=arity, apply=apply, name=recipe.display_name())


class SolverBackedStateful(FilterWithState):
    """FilterWithState over a fresh solver; branch ops map to trail
    push/pop and domain restrictions, each followed by a propagation
    fixpoint."""

    def __init__(self, recipe: Recipe, arity: int) -> None:
        self._recipe = recipe
        self._arity = arity
        self._solver: Optional[Solver] = None
        self._scope: list[TrailedVar] = []
        self._failed = False
        self._setup_done = False

    def _outcome(self) -> FilterOutcome:
        if self._failed:
            return INCONSISTENT
        return Filtered(Instance(Domain(v.values()) for v in self._scope))

    def setup(self, root: Instance) -> FilterOutcome:
        if self._setup_done:
            raise ContractViolationError("setup called twice")
        self._setup_done = True
        if root.arity != self._arity:
            raise ContractViolationError(
                f"instance arity {root.arity} != filter arity {self._arity}"
            )
        if any(d.is_empty() for d in root.domains):
            self._failed = True
            return INCONSISTENT
        self._solver = Solver()
        self._scope = [self._solver.int_var(d.values) for d in root.domains]
        try:
            self._recipe.build(self._solver, self._scope)
        except Inconsistency:
            self._failed = True
        return self._outcome()

    def branch_and_filter(self, op: BranchOp) -> FilterOutcome:
        if not self._setup_done:
            raise ContractViolationError("branch_and_filter before setup")
        if self._solver is None:
            return INCONSISTENT  # dead since setup on an empty domain
        solver = self._solver
        if isinstance(op, Push):
            solver.push_state()
        elif isinstance(op, Pop):
            solver.pop_state()
            self._failed = False
            # Re-reaching the fixpoint is a no-op for well-behaved
            # propagators; stale internal state surfaces here.
            try:
                solver.schedule_all()
                solver.fixpoint()
            except Inconsistency:
                self._failed = True
        else:
            if not self._failed:
                var = self._scope[op.index]
                try:
                    if op.relation == "=":
                        var.assign(op.constant)
                    elif op.relation == "!=":
                        var.remove_value(op.constant)
                    elif op.relation == "<":
                        var.remove_above(op.constant - 1)
                    else:
                        var.remove_below(op.constant + 1)
                    solver.fixpoint()
                except Inconsistency:
                    self._failed = True
        return self._outcome()


def as_filter_with_state(recipe: Recipe, arity: int) -> SolverBackedStateful:
    """A fresh stateful subject; single use (setup exactly once)."""
    return SolverBackedStateful(recipe, arity)
