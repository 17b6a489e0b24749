"""Stateful differential testing: branching operations and random dives.

A dive interleaves a push of the state with a random domain restriction
until a leaf (inconsistent or all variables fixed), then pops a random
number of frames and starts again. Both subjects receive the identical
operation sequence and their outcomes are compared after every single
operation, so state divergence surfaces at the earliest observable point.
"""

from __future__ import annotations

import abc
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .domains import (
    INCONSISTENT,
    ContractViolationError,
    Domain,
    Filtered,
    FilterOutcome,
    Instance,
    is_fixed,
    is_leaf,
    pointwise_equal,
)
from .comparator import ComparisonMode, Failure, Filter, TestReport, _draw_instance
from .generator import DEFAULT_SHRINK_BUDGET, GenConfig, SplitMix64, shrink
from .reference import DEFAULT_CAP


@dataclass(frozen=True)
class Push:
    pass


@dataclass(frozen=True)
class Pop:
    pass


RELATIONS = ("=", "!=", "<", ">")


@dataclass(frozen=True)
class RestrictDomain:
    index: int
    relation: str
    constant: int

    def __post_init__(self) -> None:
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")


BranchOp = Union[Push, Pop, RestrictDomain]

PUSH = Push()
POP = Pop()


def apply_restriction(inst: Instance, r: RestrictDomain) -> FilterOutcome:
    """Restrict one domain; Inconsistent iff it empties."""
    if not (0 <= r.index < inst.arity):
        raise ContractViolationError(f"restriction index {r.index} out of range")
    d = inst.domains[r.index]
    c = r.constant
    if r.relation == "=":
        kept = [v for v in d if v == c]
    elif r.relation == "!=":
        kept = [v for v in d if v != c]
    elif r.relation == "<":
        kept = [v for v in d if v < c]
    else:
        kept = [v for v in d if v > c]
    if not kept:
        return INCONSISTENT
    doms = list(inst.domains)
    doms[r.index] = Domain(kept)
    return Filtered(Instance(doms))


def random_restriction(rng: SplitMix64, inst: Instance) -> RestrictDomain:
    """Uniform restriction on an unfixed variable, constant from its domain."""
    unfixed = [i for i, d in enumerate(inst.domains) if not is_fixed(d)]
    if not unfixed:
        raise ContractViolationError("random_restriction needs an unfixed domain")
    index = unfixed[rng.next_below(len(unfixed))]
    relation = RELATIONS[rng.next_below(4)]
    values = inst.domains[index].values
    constant = values[rng.next_below(len(values))]
    return RestrictDomain(index, relation, constant)


class FilterWithState(abc.ABC):
    """A stateful filtering subject driven by setup + branching operations."""

    @abc.abstractmethod
    def setup(self, root: Instance) -> FilterOutcome:
        """Install the root instance and reach the first fixpoint."""

    @abc.abstractmethod
    def branch_and_filter(self, op: BranchOp) -> FilterOutcome:
        """Apply one branching operation and return the resulting outcome."""


class IncrementalFiltering(FilterWithState):
    """Turns any static Filter into a stateful one via a snapshot stack."""

    def __init__(self, base: Filter) -> None:
        self._base = base
        self._stack: list[FilterOutcome] = []
        self._current: Optional[FilterOutcome] = None

    def setup(self, root: Instance) -> FilterOutcome:
        if self._current is not None:
            raise ContractViolationError("setup called twice")
        self._current = self._base.apply(root)
        return self._current

    def branch_and_filter(self, op: BranchOp) -> FilterOutcome:
        if self._current is None:
            raise ContractViolationError("branch_and_filter before setup")
        if isinstance(op, Push):
            self._stack.append(self._current)
        elif isinstance(op, Pop):
            if not self._stack:
                raise ContractViolationError("pop with no saved state")
            self._current = self._stack.pop()
        else:
            if self._current is not INCONSISTENT:
                restricted = apply_restriction(self._current.instance, op)
                if restricted is INCONSISTENT:
                    self._current = INCONSISTENT
                else:
                    self._current = self._base.apply(restricted.instance)
        return self._current


def incremental_wrap(base: Filter) -> IncrementalFiltering:
    return IncrementalFiltering(base)


@dataclass(frozen=True)
class DiveConfig:
    nb_dives: int = 20
    max_depth: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.nb_dives < 1:
            raise ValueError("nb_dives must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def _tested_outcome(call: Callable[[], FilterOutcome]) -> FilterOutcome:
    """A raising subject is recorded as claiming inconsistency."""
    try:
        return call()
    except ContractViolationError:
        raise
    except Exception:
        return INCONSISTENT


def dives(
    root: Instance,
    trusted: FilterWithState,
    tested: FilterWithState,
    cfg: DiveConfig,
    rng: Optional[SplitMix64] = None,
) -> TestReport:
    """Drive both subjects through cfg.nb_dives random dives, comparing
    outcomes after setup and after every branching operation.

    Restrictions are drawn from the trusted side's current domains so a
    buggy subject cannot steer generation away from its own defect. On a
    mismatch, the failure carries the full replayable transcript.
    """
    if rng is None:
        rng = SplitMix64(cfg.seed)
    transcript: list[BranchOp] = []

    def mismatch_report(
        dives_done: int, trusted_out: FilterOutcome, tested_out: FilterOutcome, reason: str
    ) -> TestReport:
        return TestReport(
            passed=False,
            tests_run=dives_done,
            seed=cfg.seed,
            failure=Failure(
                original=root,
                shrunk=root,
                trusted_outcome=trusted_out,
                tested_outcome=tested_out,
                mode=ComparisonMode.EQUALITY,
                reason=reason,
                transcript=tuple(transcript),
            ),
        )

    trusted_out = trusted.setup(root)
    tested_out = _tested_outcome(lambda: tested.setup(root))
    if not pointwise_equal(trusted_out, tested_out):
        return mismatch_report(0, trusted_out, tested_out, "outcomes differ after setup")

    def step(op: BranchOp) -> tuple[FilterOutcome, FilterOutcome]:
        transcript.append(op)
        t = trusted.branch_and_filter(op)
        s = _tested_outcome(lambda: tested.branch_and_filter(op))
        return t, s

    dives_done = 0
    push_count = 0
    current = trusted_out
    while dives_done < cfg.nb_dives:
        depth = 0
        while not is_leaf(current) and depth < cfg.max_depth:
            trusted_out, tested_out = step(PUSH)
            push_count += 1
            if not pointwise_equal(trusted_out, tested_out):
                return mismatch_report(
                    dives_done, trusted_out, tested_out, "outcomes differ after push"
                )
            restriction = random_restriction(rng, current.instance)
            trusted_out, tested_out = step(restriction)
            depth += 1
            if not pointwise_equal(trusted_out, tested_out):
                return mismatch_report(
                    dives_done, trusted_out, tested_out, "outcomes differ after restriction"
                )
            current = trusted_out
        if not is_leaf(current):
            logging.getLogger(__name__).warning(
                "dive reached max_depth=%d without a leaf; treating as one",
                cfg.max_depth,
            )
        dives_done += 1
        if push_count == 0:
            break  # the root itself is a leaf; nothing to pop or restrict
        n_pops = 1 if push_count == 1 else 1 + rng.next_below(push_count - 1)
        for _ in range(n_pops):
            trusted_out, tested_out = step(POP)
            push_count -= 1
            if not pointwise_equal(trusted_out, tested_out):
                return mismatch_report(
                    dives_done, trusted_out, tested_out, "outcomes differ after pop"
                )
        current = trusted_out
    return TestReport(passed=True, tests_run=dives_done, seed=cfg.seed)


def dive_campaign(
    trusted_factory: Callable[[], FilterWithState],
    tested_factory: Callable[[], FilterWithState],
    gen_cfg: GenConfig,
    dive_cfg: DiveConfig,
    cap: int = DEFAULT_CAP,
    shrink_budget: int = DEFAULT_SHRINK_BUDGET,
) -> TestReport:
    """Generate a root instance, run the dives, shrink the root on failure.

    The dive phase is seeded independently of the root draw, so the same
    operation sequence decisions replay while the root is being shrunk.
    """
    rng = SplitMix64(gen_cfg.seed)
    root, redraws = _draw_instance(rng, gen_cfg, cap)
    dive_seed = rng.next_u64()

    def run(inst: Instance) -> TestReport:
        return dives(
            inst, trusted_factory(), tested_factory(), dive_cfg, SplitMix64(dive_seed)
        )

    report = run(root)
    if report.passed:
        return TestReport(
            passed=True, tests_run=report.tests_run, seed=gen_cfg.seed, redraws=redraws
        )

    result = shrink(root, lambda inst: not run(inst).passed, budget=shrink_budget)
    final = run(result.instance)
    assert final.failure is not None
    return TestReport(
        passed=False,
        tests_run=final.tests_run,
        seed=gen_cfg.seed,
        redraws=redraws,
        failure=Failure(
            original=root,
            shrunk=result.instance,
            trusted_outcome=final.failure.trusted_outcome,
            tested_outcome=final.failure.tested_outcome,
            mode=ComparisonMode.EQUALITY,
            reason=final.failure.reason,
            shrunk_minimal=result.minimal,
            transcript=final.failure.transcript,
        ),
    )
