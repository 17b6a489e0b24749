"""Core value types: domains, instances, and filtering outcomes.

Everything here is immutable and safe to share. Inconsistency is a value
(`INCONSISTENT`), not an exception, so that outcome comparison is total.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Union

INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1

Assignment = tuple[int, ...]


class ContractViolationError(Exception):
    """A caller or a filter under test broke an interface contract."""


class Domain:
    """A finite set of signed integers, iterated in increasing order."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[int] = ()) -> None:
        vs = tuple(sorted(set(values)))
        if vs and (vs[0] < INT32_MIN or vs[-1] > INT32_MAX):
            raise ValueError(f"domain value outside signed 32-bit range: {vs[0]}..{vs[-1]}")
        self._values = vs

    @property
    def values(self) -> tuple[int, ...]:
        return self._values

    def __iter__(self) -> Iterator[int]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, v: int) -> bool:
        return v in self._values

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Domain) and self._values == other._values

    def __hash__(self) -> int:
        return hash(self._values)

    def __repr__(self) -> str:
        return "{%s}" % ", ".join(str(v) for v in self._values)

    def is_empty(self) -> bool:
        return not self._values

    def min(self) -> int:
        if not self._values:
            raise ValueError("empty domain has no minimum")
        return self._values[0]

    def max(self) -> int:
        if not self._values:
            raise ValueError("empty domain has no maximum")
        return self._values[-1]

    def issubset(self, other: "Domain") -> bool:
        ov = other._values
        return all(v in ov for v in self._values)

    def remove(self, v: int) -> "Domain":
        """A new domain without `v` (unchanged if absent)."""
        if v not in self._values:
            return self
        return Domain(x for x in self._values if x != v)


class Instance:
    """An ordered, fixed-arity sequence of domains."""

    __slots__ = ("domains",)

    def __init__(self, domains: Iterable[Domain]) -> None:
        ds = tuple(domains)
        if not ds:
            raise ValueError("an instance needs arity >= 1")
        if not all(isinstance(d, Domain) for d in ds):
            raise TypeError("Instance expects Domain values")
        self.domains = ds

    @classmethod
    def of(cls, lists: Iterable[Iterable[int]]) -> "Instance":
        return cls(Domain(vs) for vs in lists)

    @property
    def arity(self) -> int:
        return len(self.domains)

    def search_space_size(self) -> int:
        size = 1
        for d in self.domains:
            size *= len(d)
        return size

    def member(self, assignment: Assignment) -> bool:
        return len(assignment) == self.arity and all(
            v in d for v, d in zip(assignment, self.domains)
        )

    def pointwise_subset_of(self, other: "Instance") -> bool:
        if self.arity != other.arity:
            raise ContractViolationError(
                f"arity mismatch: {self.arity} vs {other.arity}"
            )
        return all(a.issubset(b) for a, b in zip(self.domains, other.domains))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Instance) and self.domains == other.domains

    def __hash__(self) -> int:
        return hash(self.domains)

    def __repr__(self) -> str:
        return "Instance[%s]" % ", ".join(repr(d) for d in self.domains)


class Filtered:
    """Successful filtering outcome; every domain is non-empty."""

    __slots__ = ("instance",)

    def __init__(self, instance: Instance) -> None:
        if any(d.is_empty() for d in instance.domains):
            raise ValueError("a Filtered outcome cannot contain an empty domain")
        self.instance = instance

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Filtered) and self.instance == other.instance

    def __hash__(self) -> int:
        return hash(("filtered", self.instance))

    def __repr__(self) -> str:
        return f"Filtered({self.instance!r})"


class _Inconsistent:
    __slots__ = ()
    _instance = None

    def __new__(cls) -> "_Inconsistent":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Inconsistent"


INCONSISTENT = _Inconsistent()

FilterOutcome = Union[Filtered, _Inconsistent]


def is_fixed(d: Domain) -> bool:
    """True iff the domain holds exactly one value."""
    return len(d) == 1


def is_leaf(o: FilterOutcome) -> bool:
    """True iff nothing remains to branch on: inconsistent, or all fixed."""
    if o is INCONSISTENT:
        return True
    return all(is_fixed(d) for d in o.instance.domains)


def _check_arity(a: FilterOutcome, b: FilterOutcome) -> None:
    if isinstance(a, Filtered) and isinstance(b, Filtered):
        if a.instance.arity != b.instance.arity:
            raise ContractViolationError(
                f"outcome arity mismatch: {a.instance.arity} vs {b.instance.arity}"
            )


def pointwise_equal(a: FilterOutcome, b: FilterOutcome) -> bool:
    _check_arity(a, b)
    if a is INCONSISTENT or b is INCONSISTENT:
        return a is b
    return a.instance == b.instance


def pointwise_subset(a: FilterOutcome, b: FilterOutcome) -> bool:
    """Inclusion with Inconsistent as the bottom element."""
    _check_arity(a, b)
    if a is INCONSISTENT:
        return True
    if b is INCONSISTENT:
        return False
    return a.instance.pointwise_subset_of(b.instance)
