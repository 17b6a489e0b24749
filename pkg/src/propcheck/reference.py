"""Trusted reference filters derived from a feasibility checker.

Four consistency levels are supported:

* arc (GAC): every value must appear in some solution over the actual domains.
* bound-Z: each domain's min and max must have a support with the other
  variables ranging over their bound intervals; interior values are kept.
* bound-D: like bound-Z but supports come from the other variables' actual
  domains (holes respected).
* range: every value (not just the bounds) needs an interval support.

All four work by explicit enumeration guarded by a tuple cap, so a "pass"
can never hide an unexhausted search. They are oracles for small instances,
not production propagators.
"""

from __future__ import annotations

import enum
import itertools
from typing import Callable, Sequence

from .checkers import Checker
from .domains import (
    INCONSISTENT,
    Assignment,
    ContractViolationError,
    Domain,
    Filtered,
    FilterOutcome,
    Instance,
)

DEFAULT_CAP = 1_000_000


class EnumerationCapExceeded(Exception):
    """The Cartesian product to enumerate is larger than the configured cap."""


class ConsistencyLevel(enum.Enum):
    ARC = "arc"
    BOUND_Z = "boundz"
    BOUND_D = "boundd"
    RANGE = "range"


def _check_arity(checker: Checker, inst: Instance) -> None:
    if checker.arity != inst.arity:
        raise ContractViolationError(
            f"checker arity {checker.arity} != instance arity {inst.arity}"
        )


def _product_size(value_lists: Sequence[Sequence[int]]) -> int:
    size = 1
    for vs in value_lists:
        size *= len(vs)
    return size


def _mark_supports(
    checker: Checker, value_lists: Sequence[Sequence[int]]
) -> list[set[int]]:
    """One pass over the full product; marks every (var, value) with a support."""
    supported: list[set[int]] = [set() for _ in value_lists]
    pred = checker.predicate
    for a in itertools.product(*value_lists):
        if pred(a):
            for i, v in enumerate(a):
                supported[i].add(v)
    return supported


def _has_support(
    checker: Checker,
    value_lists: Sequence[Sequence[int]],
    i: int,
    v: int,
    cap: int,
) -> bool:
    """Early-exit support search for variable i taking value v."""
    others = [list(vs) for j, vs in enumerate(value_lists) if j != i]
    if _product_size(others) > cap:
        raise EnumerationCapExceeded(
            f"support search for variable {i} needs more than {cap} tuples"
        )
    pred = checker.predicate
    for rest in itertools.product(*others):
        a = rest[:i] + (v,) + rest[i:]
        if pred(a):
            return True
    return False


def solutions(
    checker: Checker, inst: Instance, cap: int = DEFAULT_CAP
) -> list[Assignment]:
    """All accepted members of the Cartesian product, in lexicographic order."""
    _check_arity(checker, inst)
    if inst.search_space_size() > cap:
        raise EnumerationCapExceeded(
            f"search space {inst.search_space_size()} exceeds cap {cap}"
        )
    pred = checker.predicate
    return [a for a in itertools.product(*(d.values for d in inst.domains)) if pred(a)]


def arc_filter(checker: Checker, inst: Instance, cap: int = DEFAULT_CAP) -> FilterOutcome:
    """The unique GAC closure: per-position union of all solutions."""
    sols = solutions(checker, inst, cap)
    if not sols:
        return INCONSISTENT
    return Filtered(
        Instance(Domain(a[i] for a in sols) for i in range(inst.arity))
    )


def _supported_values(
    checker: Checker,
    domains: Sequence[Domain],
    value_lists: Sequence[Sequence[int]],
    bounds_only: bool,
    cap: int,
) -> list[list[int]] | None:
    """Domain values with a support over `value_lists`, per variable.

    Returns None as soon as some variable has no supported value. With
    bounds_only, only the lowest and highest supported values matter, so the
    fallback path scans from both ends with early exits.
    """
    n = len(domains)
    if _product_size(value_lists) <= cap:
        marks = _mark_supports(checker, value_lists)
        result = []
        for i in range(n):
            sup = [v for v in domains[i] if v in marks[i]]
            if not sup:
                return None
            result.append(sup)
        return result

    result = []
    for i in range(n):
        vals = domains[i].values
        if bounds_only:
            lo = next(
                (v for v in vals if _has_support(checker, value_lists, i, v, cap)),
                None,
            )
            if lo is None:
                return None
            hi = next(
                v
                for v in reversed(vals)
                if _has_support(checker, value_lists, i, v, cap)
            )
            result.append([lo, hi])
        else:
            sup = [v for v in vals if _has_support(checker, value_lists, i, v, cap)]
            if not sup:
                return None
            result.append(sup)
    return result


def _bound_fixpoint(
    checker: Checker,
    inst: Instance,
    interval_supports: bool,
    cap: int,
) -> FilterOutcome:
    """Shared fixpoint for bound-Z (interval supports) and bound-D (domain supports)."""
    _check_arity(checker, inst)
    domains = list(inst.domains)
    if any(d.is_empty() for d in domains):
        return INCONSISTENT
    while True:
        if interval_supports:
            value_lists: list[Sequence[int]] = [
                range(d.min(), d.max() + 1) for d in domains
            ]
        else:
            value_lists = [d.values for d in domains]
        supported = _supported_values(checker, domains, value_lists, True, cap)
        if supported is None:
            return INCONSISTENT
        changed = False
        for i, sup in enumerate(supported):
            lo, hi = sup[0], sup[-1]
            if lo > domains[i].min() or hi < domains[i].max():
                domains[i] = Domain(v for v in domains[i] if lo <= v <= hi)
                changed = True
        if not changed:
            return Filtered(Instance(domains))


def bound_z_filter(
    checker: Checker, inst: Instance, cap: int = DEFAULT_CAP
) -> FilterOutcome:
    """Tighten bounds to the extreme values holding an interval support."""
    return _bound_fixpoint(checker, inst, interval_supports=True, cap=cap)


def bound_d_filter(
    checker: Checker, inst: Instance, cap: int = DEFAULT_CAP
) -> FilterOutcome:
    """Tighten bounds to the extreme values holding a domain support."""
    return _bound_fixpoint(checker, inst, interval_supports=False, cap=cap)


def range_filter(
    checker: Checker, inst: Instance, cap: int = DEFAULT_CAP
) -> FilterOutcome:
    """Drop every value (bounds and interior) lacking an interval support."""
    _check_arity(checker, inst)
    domains = list(inst.domains)
    if any(d.is_empty() for d in domains):
        return INCONSISTENT
    while True:
        value_lists: list[Sequence[int]] = [
            range(d.min(), d.max() + 1) for d in domains
        ]
        supported = _supported_values(checker, domains, value_lists, False, cap)
        if supported is None:
            return INCONSISTENT
        changed = False
        for i, sup in enumerate(supported):
            if len(sup) != len(domains[i]):
                domains[i] = Domain(sup)
                changed = True
        if not changed:
            return Filtered(Instance(domains))


_LEVEL_FUNCS: dict[ConsistencyLevel, Callable[[Checker, Instance, int], FilterOutcome]] = {
    ConsistencyLevel.ARC: arc_filter,
    ConsistencyLevel.BOUND_Z: bound_z_filter,
    ConsistencyLevel.BOUND_D: bound_d_filter,
    ConsistencyLevel.RANGE: range_filter,
}


def make_reference(level: ConsistencyLevel, checker: Checker, cap: int = DEFAULT_CAP):
    """A Filter applying the reference algorithm for `level` to `checker`."""
    from .comparator import Filter

    func = _LEVEL_FUNCS[level]
    return Filter(
        arity=checker.arity,
        apply=lambda inst: func(checker, inst, cap),
        name=f"{level.value}:{checker.name}",
    )
