import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coreaudit.errors import OracleBudgetExceeded
from coreaudit.generators import gen_gap
from coreaudit.model import AuditInstance, DeviationWitness, check_witness
from coreaudit.oracles import OracleBudget, exact_theta_core, exact_theta_fractional_core, exact_theta_subcore

from helpers import E1, E2, approval, approval_instances, brute_theta, general_instances, sat_subcore


def test_core_examples():
    theta, w = exact_theta_core(E1())
    assert theta == 2 and w.voters == ("v2",) and w.committee == ("b",)
    theta, w = exact_theta_core(E2())
    assert theta == 0.5 and w.voters == ("v1", "v2") and w.committee == ("b",)


def test_gap_two():
    inst = gen_gap(2)
    theta, w = exact_theta_core(inst)
    assert theta == pytest.approx(2 / 3)
    assert len(w.voters) == 6 and len(w.committee) == 4
    # C' itself is a tied minimizer; the oracle reports the smallest bitmask
    shared = tuple(c for c in inst.election.candidate_ids if c.startswith("cs_"))
    assert check_witness(inst, DeviationWitness(w.voters, shared, theta)) == []


def test_subcore_examples():
    assert exact_theta_subcore(E1())[0] == 2
    covered = approval({"v1": ["a"], "v2": ["a", "b"]}, "abc", 2, {"a", "b"})
    assert math.isinf(exact_theta_subcore(covered)[0])


def test_subcore_stricter_than_core():
    inst = approval({"v1": ["a", "b", "c"], "v2": ["b"], "v3": ["c"]}, "abc", 3, {"a"})
    core, wc = exact_theta_core(inst)
    sub, ws = exact_theta_subcore(inst)
    assert core == pytest.approx(2 / 3) and sub == pytest.approx(1.0)
    assert check_witness(inst, wc) == [] and check_witness(inst, ws) == []


def test_fractional_examples():
    assert exact_theta_fractional_core(E2(), 1.0)[0] == pytest.approx(0.5)
    theta, w = exact_theta_fractional_core(E2(), 0.5)
    assert theta == pytest.approx(0.25)
    assert dict(w.committee) == pytest.approx({"b": 0.5})
    assert check_witness(E2(), w) == []
    saturated = AuditInstance(E1().election, {"a": 1.0, "b": 1.0})
    assert math.isinf(exact_theta_fractional_core(saturated)[0])


def test_budgets():
    with pytest.raises(OracleBudgetExceeded):
        exact_theta_core(gen_gap(2), OracleBudget(max_committees=100))
    with pytest.raises(OracleBudgetExceeded):
        exact_theta_fractional_core(gen_gap(2), budget=OracleBudget(max_voter_subsets=10))
    with pytest.raises(ValueError):
        OracleBudget(max_committees=0)


@settings(max_examples=80, deadline=None)
@given(approval_instances())
def test_subcore_at_least_core(inst):
    core = exact_theta_core(inst)[0]
    sub, w = exact_theta_subcore(inst)
    assert sub == pytest.approx(brute_theta(inst, sat_subcore))
    assert sub >= core
    if w is not None:
        assert check_witness(inst, w) == []


@settings(max_examples=80, deadline=None)
@given(approval_instances(max_approvals=2))
def test_coincidence_with_two_approvals(inst):
    assert exact_theta_core(inst)[0] == exact_theta_subcore(inst)[0]


@settings(max_examples=40, deadline=None)
@given(general_instances(max_n=4, max_m=4), st.sampled_from([0.25, 0.5, 1.0]), st.sampled_from([1.5, 2.0]))
def test_fractional_monotone_in_eta(inst, small, large):
    a = exact_theta_fractional_core(inst, small)[0]
    b = exact_theta_fractional_core(inst, large)[0]
    assert a <= b + 1e-9


@settings(max_examples=20, deadline=None)
@given(approval_instances())
def test_jobs_do_not_change_answer(inst):
    assert exact_theta_core(inst, jobs=1) == exact_theta_core(inst, jobs=4)
