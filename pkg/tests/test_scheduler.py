import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gen
from moldsched.alloc_general import adjust_allocation, round_allocation, select_parameters, solve_fractional
from moldsched.core import Instance, ValidationError, validate_schedule
from moldsched.instances import lower_bound_bundle
from moldsched.scheduler import (
    PriorityPolicy,
    classify,
    idle_violations,
    interval_report,
    list_schedule,
    verify_phase_bounds,
)


def test_full_capacity_jobs_run_in_sequence():
    inst = Instance.build([3], [("a", {(3,): 2}), ("b", {(3,): 5})])
    s = list_schedule(inst, [(3,), (3,)])
    assert s.makespan == 7 and s.start_times == (0, 2)


def test_disjoint_types_run_together():
    inst = Instance.build([1, 1], [("a", {(1, 0): 2}), ("b", {(0, 1): 3})])
    assert list_schedule(inst, [(1, 0), (0, 1)]).makespan == 3


def test_over_capacity_rejected():
    inst = Instance.build([2], [("a", {(1,): 2})])
    with pytest.raises(ValidationError):
        list_schedule(inst, [(2,)])


def test_policies_differ_only_in_order():
    inst = Instance.build([2], [("a", {(2,): 1}), ("b", {(2,): 3}), ("c", {(1,): 2})])
    dec = [(2,), (2,), (1,)]
    assert list_schedule(inst, dec).start_times == (0, 1, 4)
    assert list_schedule(inst, dec, PriorityPolicy("longest-time")).start_times == (5, 0, 3)
    assert list_schedule(inst, dec, PriorityPolicy.explicit(["c", "a", "b"])).start_times == (2, 3, 0)
    with pytest.raises(ValueError):
        PriorityPolicy.explicit(["a"]).ranks(inst, [1, 1, 1])
    with pytest.raises(ValueError):
        PriorityPolicy("random")


def test_lower_bound_bundle_schedules():
    b = lower_bound_bundle(2, 9)
    dec = [j.profile.allocs()[0] for j in b.instance.jobs]
    assert list_schedule(b.instance, dec, PriorityPolicy.explicit(b.optimal_priority)).makespan == 10
    assert list_schedule(b.instance, dec, PriorityPolicy.explicit(b.adversarial_priority)).makespan == 21


def test_classify_example():
    mu = Fraction(382, 1000)
    assert [classify((u,), (10,), mu) for u in (3, 4, 5, 6, 7)] == [1, 2, 2, 2, 3]


def test_single_job_bounds():
    inst = Instance.build([10], [("j", {(10,): 3, (4,): 6})])
    mu = Fraction(382, 1000)
    adj = adjust_allocation(inst, [(10,)], mu)
    s = list_schedule(inst, adj.decision)
    checks = {c.name: c for c in verify_phase_bounds(inst, s, [(10,)], mu)}
    assert checks["critical-path"].ok and checks["partition"].lhs == s.makespan == 6


@given(st.integers(0, 10_000), st.integers(1, 3), st.sampled_from(["fifo", "longest-time", "critical-path"]))
def test_interval_report_invariants(seed, d, policy):
    inst = gen("random-dag", 7, d, seed)
    dec = [j.profile.allocs()[-1] for j in inst.jobs]
    s = list_schedule(inst, dec, PriorityPolicy(policy))
    rep = interval_report(inst, s, Fraction(2, 5))
    assert rep.T == s.makespan
    assert rep.intervals[0].start == 0 and rep.intervals[-1].end == s.makespan
    assert all(x.end == y.start for x, y in zip(rep.intervals, rep.intervals[1:]))
    assert any(rep.intervals[-1].utilization)
    for jid in inst.ids:
        assert sum(iv.fractions.get(jid, 0) for iv in rep.intervals) == 1
    assert idle_violations(inst, s) == []
    assert validate_schedule(inst, s) == []


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_phase_bounds_end_to_end(seed, d):
    p = select_parameters(d)
    inst = gen("random-dag", 8, d, seed, cap_min=max(7, math.ceil(1 / p.mu**2)), cap_max=14)
    initial = round_allocation(solve_fractional(inst), p.rho)
    adj = adjust_allocation(inst, initial, p.mu)
    s = list_schedule(inst, adj.decision)
    for c in verify_phase_bounds(inst, s, initial, p.mu):
        assert c.applicable and c.ok, c


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_independent_bound_cases(seed, d):
    from moldsched.alloc_special import allocate_independent

    p = select_parameters(d, "independent")
    inst = gen("independent", 8, d, seed, cap_min=p.required_pmin, cap_max=p.required_pmin + 5)
    initial = allocate_independent(inst)
    s = list_schedule(inst, adjust_allocation(inst, initial, p.mu).decision)
    checks = {c.name: c for c in verify_phase_bounds(inst, s, initial, p.mu, independent=True)}
    assert checks["independent-cp"].ok


def test_doubling_capacity_can_hurt():
    """Capacity relaxation is not monotone for greedy list scheduling."""
    jobs = [("j0", {(2,): 2}), ("j1", {(2,): 2}), ("j2", {(2,): 2}), ("j3", {(1,): 5})]
    dec = [(2,), (2,), (2,), (1,)]
    small = list_schedule(Instance.build([3], jobs), dec)
    big = list_schedule(Instance.build([6], jobs), dec)
    assert (small.makespan, big.makespan) == (6, 7)


def test_deterministic():
    inst = gen("random-dag", 8, 3, 42)
    dec = [j.profile.allocs()[0] for j in inst.jobs]
    runs = {list_schedule(inst, dec, PriorityPolicy("critical-path")) for _ in range(3)}
    assert len(runs) == 1
