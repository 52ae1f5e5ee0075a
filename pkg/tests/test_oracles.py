import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gen
from moldsched.core import ExecProfile, Instance, Job, aggregate_metrics, validate_schedule
from moldsched.oracles import OracleBudget, OracleRefusal, clear_cache, exact_min_L
from moldsched.scheduler import brute_force_makespan
from reference import min_L, opt_makespan


def test_e2(E2):
    res = exact_min_L(E2)
    assert res.L_min == 2 and aggregate_metrics(E2, res.witness).L == 2
    bf = brute_force_makespan(E2)
    assert bf.T_opt == 2 and validate_schedule(E2, bf.schedule) == []


def test_single_job():
    inst = Instance.build([4], [("j", {(1,): 8, (2,): 5, (4,): 3})])
    assert exact_min_L(inst).L_min == 3
    assert brute_force_makespan(inst).T_opt == 3


def test_budget_refusal(monkeypatch):
    inst = gen("random-dag", 8, 3, 1)
    with pytest.raises(OracleRefusal):
        exact_min_L(inst, OracleBudget(max_decisions=2))
    with pytest.raises(OracleRefusal):
        brute_force_makespan(inst, OracleBudget(max_schedule_space=10))
    monkeypatch.setenv("MOLDSCHED_ORACLE_BUDGET", "3,7")
    assert OracleBudget.from_env() == OracleBudget(3, 7)


def test_disk_cache(tmp_path, monkeypatch, E2):
    monkeypatch.setenv("MOLDSCHED_ORACLE_CACHE", str(tmp_path))
    clear_cache()
    first = exact_min_L(E2)
    assert len(list(tmp_path.glob("*.json"))) == 1
    clear_cache()
    assert exact_min_L(E2) == first


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_min_L_matches_reference(seed, d):
    inst = gen("random-dag", 5, d, seed, max_alts=3, closure=False)
    assert exact_min_L(inst, use_cache=False).L_min == min_L(inst)


@given(st.integers(0, 10_000), st.integers(1, 2))
def test_makespan_matches_reference(seed, d):
    inst = gen("random-dag", 4, d, seed, max_alts=2, closure=False, cap_min=2, cap_max=4)
    bf = brute_force_makespan(inst)
    assert bf.T_opt == opt_makespan(inst)
    assert validate_schedule(inst, bf.schedule) == [] and bf.schedule.makespan == bf.T_opt
    assert exact_min_L(inst).L_min <= bf.T_opt


@given(st.integers(0, 10_000))
def test_pruned_equals_unpruned(seed):
    inst = gen("random-dag", 5, 2, seed)
    assert exact_min_L(inst, prune=True).L_min == exact_min_L(inst, prune=False).L_min


@given(st.integers(0, 10_000))
def test_invariant_under_reindexing_and_dominated_entries(seed):
    inst = gen("random-dag", 5, 2, seed)
    base = exact_min_L(inst).L_min
    rev = Instance(inst.resources, tuple(reversed(inst.jobs)), inst.edges)
    assert exact_min_L(rev).L_min == base
    # add, for one job, an entry slower and larger than its fastest one
    job = inst.jobs[0]
    (fast, t), caps = min(job.profile.alternatives, key=lambda x: x[1]), inst.resources.capacities
    extra = tuple(c if a else 0 for a, c in zip(fast, caps))
    if extra not in job.profile:
        slow = t * max(Fraction(c, a) for a, c in zip(fast, caps) if a)
        prof = ExecProfile(job.profile.alternatives + ((extra, slow),))
        try:
            inst2 = Instance(inst.resources, (Job(job.id, prof),) + inst.jobs[1:], inst.edges)
        except ValueError:
            return  # the extra entry clashes with monotonicity against some other entry
        assert exact_min_L(inst2).L_min == base
