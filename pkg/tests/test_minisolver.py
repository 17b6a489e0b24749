"""The trail-based micro-solver, its propagators, and the seeded bugs."""

import itertools

import pytest

from propcheck import (
    INCONSISTENT,
    POP,
    PUSH,
    AllDifferentAC,
    AllDifferentFC,
    BugId,
    ConsistencyLevel,
    ContractViolationError,
    Filtered,
    GenConfig,
    Inconsistency,
    Instance,
    RestrictDomain,
    Solver,
    SplitMix64,
    SumEqualsBC,
    all_different,
    all_different_ac,
    all_different_fc,
    arc_filter,
    as_filter,
    as_filter_with_state,
    bound_z_filter,
    generate_instance,
    pointwise_equal,
    pointwise_subset,
    sum_equals,
    sum_equals_bc,
    with_bug,
)


def solver_with(values_lists, queue_policy="fifo"):
    solver = Solver(queue_policy)
    scope = [solver.int_var(vs) for vs in values_lists]
    return solver, scope


def domains_of(scope):
    return [list(v.values()) for v in scope]


class TestTrail:
    def test_push_remove_pop_restores_exactly(self):
        solver, (x,) = solver_with([[1, 2, 3]])
        solver.push_state()
        x.remove_value(2)
        assert x.values() == (1, 3)
        solver.pop_state()
        assert x.values() == (1, 2, 3)

    def test_nested_frames(self):
        solver, (x,) = solver_with([[1, 2, 3, 4]])
        solver.push_state()
        x.remove_above(3)
        solver.push_state()
        x.remove_below(3)
        assert x.values() == (3,)
        solver.pop_state()
        assert x.values() == (1, 2, 3)
        solver.pop_state()
        assert x.values() == (1, 2, 3, 4)

    def test_pop_with_no_frame_rejected(self):
        solver, _ = solver_with([[1]])
        with pytest.raises(ContractViolationError):
            solver.pop_state()

    def test_empty_domain_raises_inconsistency(self):
        _, (x,) = solver_with([[1, 2]])
        with pytest.raises(Inconsistency):
            x.remove_above(0)

    def test_assign_outside_domain(self):
        _, (x,) = solver_with([[1, 2]])
        with pytest.raises(Inconsistency):
            x.assign(5)


class TestSumEqualsBC:
    def test_raises_lower_bound(self):
        solver, scope = solver_with([list(range(1, 11)), [2, 3], [2, 3]])
        solver.post(SumEqualsBC(15, scope))
        assert domains_of(scope) == [[9, 10], [2, 3], [2, 3]]

    def test_detects_inconsistency(self):
        solver, scope = solver_with([[1, 2], [1, 2], [1, 2]])
        with pytest.raises(Inconsistency):
            solver.post(SumEqualsBC(10, scope))

    def test_incremental_after_restriction(self):
        solver, scope = solver_with([[1, 2, 3], [1, 2, 3]])
        solver.post(SumEqualsBC(4, scope))
        scope[0].assign(1)
        solver.fixpoint()
        assert domains_of(scope) == [[1], [3]]


class TestAllDifferentFC:
    def test_prunes_fixed_values(self):
        solver, scope = solver_with([[1], [1, 2], [1, 2, 3]])
        solver.post(AllDifferentFC(scope))
        assert domains_of(scope) == [[1], [2], [3]]

    def test_chain_of_fixings(self):
        solver, scope = solver_with([[1], [1, 2], [2, 3]])
        solver.post(AllDifferentFC(scope))
        assert domains_of(scope) == [[1], [2], [3]]

    def test_weaker_than_ac_on_pigeonhole(self):
        # FC sees no fixed variable, so it leaves the pigeonhole alone.
        solver, scope = solver_with([[1, 2], [1, 2], [1, 2, 3]])
        solver.post(AllDifferentFC(scope))
        assert domains_of(scope) == [[1, 2], [1, 2], [1, 2, 3]]


class TestAllDifferentAC:
    def test_regin_example(self):
        solver, scope = solver_with([[1, 2], [1, 2], [1, 2, 3]])
        solver.post(AllDifferentAC(scope))
        assert domains_of(scope) == [[1, 2], [1, 2], [3]]

    def test_pigeonhole_inconsistent(self):
        solver, scope = solver_with([[1, 2], [1, 2], [1, 2]])
        with pytest.raises(Inconsistency):
            solver.post(AllDifferentAC(scope))

    def test_matching_survives_backtracking(self):
        solver, scope = solver_with([[1, 2, 3], [1, 2, 3], [1, 2, 3]])
        solver.post(AllDifferentAC(scope))
        solver.push_state()
        scope[0].assign(1)
        solver.fixpoint()
        assert domains_of(scope) == [[1], [2, 3], [2, 3]]
        solver.pop_state()
        solver.schedule_all()
        solver.fixpoint()
        assert domains_of(scope) == [[1, 2, 3]] * 3

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_arc_oracle(self, seed):
        cfg = GenConfig(n_vars=3, value_min=-2, value_max=3, seed=seed)
        inst = generate_instance(SplitMix64(seed), cfg)
        got = as_filter(all_different_ac(), 3).apply(inst)
        assert pointwise_equal(got, arc_filter(all_different(3), inst))

    @pytest.mark.parametrize("seed", range(6))
    def test_fc_weaker_than_ac(self, seed):
        cfg = GenConfig(n_vars=4, value_min=-2, value_max=3, seed=seed + 70)
        inst = generate_instance(SplitMix64(seed + 70), cfg)
        ac = as_filter(all_different_ac(), 4).apply(inst)
        fc = as_filter(all_different_fc(), 4).apply(inst)
        assert pointwise_subset(ac, fc)


class TestQueuePolicy:
    @pytest.mark.parametrize("seed", range(5))
    def test_fifo_and_lifo_reach_same_fixpoint(self, seed):
        cfg = GenConfig(n_vars=3, value_min=-2, value_max=2, seed=seed + 30)
        inst = generate_instance(SplitMix64(seed + 30), cfg)
        results = []
        for policy in ("fifo", "lifo"):
            solver = Solver(policy)
            scope = [solver.int_var(d.values) for d in inst.domains]
            try:
                solver.post(SumEqualsBC(0, scope))
                solver.post(AllDifferentFC(scope))
                results.append(domains_of(scope))
            except Inconsistency:
                results.append(None)
        assert results[0] == results[1]

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            Solver("random")


class TestRecipes:
    def test_display_names(self):
        assert sum_equals_bc(5).display_name() == "sum-bc:5"
        buggy = with_bug(BugId.BUG_ALLDIFF_FC_SKIP_LAST, all_different_fc())
        assert buggy.display_name() == "alldiff-fc+bug:BUG_ALLDIFF_FC_SKIP_LAST"

    def test_with_bug_none_is_identity_behaviour(self):
        inst = Instance.of([[1], [1, 2], [1, 2, 3]])
        plain = as_filter(all_different_fc(), 3).apply(inst)
        tagged = as_filter(with_bug(BugId.NONE, all_different_fc()), 3).apply(inst)
        assert plain == tagged

    def test_incompatible_bug_rejected(self):
        with pytest.raises(ContractViolationError):
            with_bug(BugId.BUG_SUM_REVERSED_BOUND, all_different_fc())
        with pytest.raises(ContractViolationError):
            with_bug(BugId.BUG_ALLDIFF_FC_SKIP_LAST, sum_equals_bc(3))


class TestSeededBugs:
    def test_sum_reversed_bound_over_filters(self):
        recipe = with_bug(BugId.BUG_SUM_REVERSED_BOUND, sum_equals_bc(15))
        inst = Instance.of([list(range(1, 11)), [2, 3], [2, 3]])
        got = as_filter(recipe, 3).apply(inst)
        correct = as_filter(sum_equals_bc(15), 3).apply(inst)
        assert got != correct
        assert not pointwise_subset(correct, got)

    def test_fc_skip_last_leaves_last_variable_unpruned(self):
        recipe = with_bug(BugId.BUG_ALLDIFF_FC_SKIP_LAST, all_different_fc())
        inst = Instance.of([[1], [1, 2], [1, 3]])
        got = as_filter(recipe, 3).apply(inst)
        assert got == Filtered(Instance.of([[1], [2], [1, 3]]))

    def test_trail_no_restore_invisible_statically(self):
        # One-shot application never pops, so the stale cache never matters.
        for recipe in (sum_equals_bc(6), all_different_fc(), all_different_ac()):
            buggy = with_bug(BugId.BUG_TRAIL_NO_RESTORE, recipe)
            inst = Instance.of([[1, 2, 3], [1, 2, 3], [1, 2, 3]])
            assert as_filter(buggy, 3).apply(inst) == as_filter(recipe, 3).apply(inst)

    def test_trail_no_restore_surfaces_after_pop(self):
        buggy = with_bug(BugId.BUG_TRAIL_NO_RESTORE, all_different_fc())
        subject = as_filter_with_state(buggy, 3)
        root = Instance.of([[1, 2], [1, 2, 3], [1, 2, 3]])
        subject.setup(root)
        subject.branch_and_filter(PUSH)
        subject.branch_and_filter(RestrictDomain(0, "=", 1))
        popped = subject.branch_and_filter(POP)
        # The stale cache keeps pruning value 1 although x0 is unfixed again.
        assert popped != Filtered(root)


class TestAsFilter:
    def test_empty_domain_is_inconsistent(self):
        from propcheck import Domain

        inst = Instance([Domain([1]), Domain()])
        assert as_filter(sum_equals_bc(1), 2).apply(inst) is INCONSISTENT

    def test_arity_checked(self):
        with pytest.raises(ContractViolationError):
            as_filter(sum_equals_bc(1), 2).apply(Instance.of([[1]]))

    @pytest.mark.parametrize("seed", range(8))
    def test_sum_bc_matches_bound_z_oracle(self, seed):
        cfg = GenConfig(n_vars=3, value_min=-3, value_max=3, seed=seed + 10)
        inst = generate_instance(SplitMix64(seed + 10), cfg)
        got = as_filter(sum_equals_bc(2), 3).apply(inst)
        assert pointwise_equal(got, bound_z_filter(sum_equals(2, 3), inst))


class TestSolverBackedStateful:
    def test_matches_snapshot_adapter_on_script(self):
        from propcheck import IncrementalFiltering, make_reference

        root = Instance.of([[1, 2, 3], [1, 2, 3], [1, 2, 3]])
        script = [
            PUSH,
            RestrictDomain(0, "=", 1),
            PUSH,
            RestrictDomain(1, ">", 1),
            POP,
            POP,
            PUSH,
            RestrictDomain(2, "<", 3),
        ]
        solver_side = as_filter_with_state(sum_equals_bc(6), 3)
        oracle = IncrementalFiltering(
            make_reference(ConsistencyLevel.BOUND_Z, sum_equals(6, 3))
        )
        assert pointwise_equal(solver_side.setup(root), oracle.setup(root))
        for op in script:
            assert pointwise_equal(
                solver_side.branch_and_filter(op), oracle.branch_and_filter(op)
            ), op

    def test_inconsistency_recovers_on_pop(self):
        subject = as_filter_with_state(all_different_ac(), 3)
        root = Instance.of([[1, 2], [1, 2], [1, 2, 3]])
        first = subject.setup(root)
        subject.branch_and_filter(PUSH)
        assert subject.branch_and_filter(RestrictDomain(2, "=", 1)) is INCONSISTENT
        assert subject.branch_and_filter(POP) == first

    def test_setup_twice_rejected(self):
        subject = as_filter_with_state(sum_equals_bc(1), 1)
        subject.setup(Instance.of([[1]]))
        with pytest.raises(ContractViolationError):
            subject.setup(Instance.of([[1]]))
