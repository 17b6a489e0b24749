"""Feasibility checkers: the ground-truth predicates constraints are derived from."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .domains import Assignment


@dataclass(frozen=True)
class Checker:
    """A deterministic, side-effect-free predicate over complete assignments."""

    arity: int
    predicate: Callable[[Assignment], bool] = field(compare=False)
    name: str = ""

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise ValueError("checker arity must be >= 1")

    def __call__(self, assignment: Assignment) -> bool:
        return self.predicate(assignment)


def all_different(arity: int) -> Checker:
    """All variables take pairwise distinct values."""
    return Checker(arity, lambda a: len(set(a)) == len(a), name="alldiff")


def sum_equals(total: int, arity: int) -> Checker:
    """The values sum to `total`."""
    return Checker(arity, lambda a: sum(a) == total, name=f"sum={total}")
