import math

import pytest
from hypothesis import given, settings

from coreaudit.core_approval import (
    audit_core_approval,
    build_core_lp,
    round_log_m,
    round_log_n,
    theta_p,
)
from coreaudit.errors import ModeMismatch
from coreaudit.generators import gen_gap
from coreaudit.model import check_witness
from coreaudit.oracles import exact_theta_core

from helpers import E1, E2, approval, approval_instances, brute_theta, general, sat_core


def test_lp_shape():
    p = build_core_lp(E1())
    assert len(p.c) == 6 and len(p.rhs) == 7
    gap = build_core_lp(gen_gap(2))
    labels = gap.var_labels
    assert sum(lab[0] == "x" for lab in labels) == 10
    assert sum(lab[0] == "z" for lab in labels) == 6


def test_empty_approval_voter_has_no_support():
    inst = approval({"v1": [], "v2": ["b"]}, "ab", 1, {"a"})
    value, frac = theta_p(inst)
    assert value == pytest.approx(2.0)
    assert frac.z[0] == pytest.approx(0.0)


def test_mode_mismatch():
    with pytest.raises(ModeMismatch):
        build_core_lp(general({"v": {"a": 2}}, {"a": 1}, 1, set()))


@pytest.mark.parametrize("make,value", [(E1, 2.0), (E2, 0.5)])
def test_theta_p_examples(make, value):
    got, frac = theta_p(make())
    assert got == pytest.approx(value)
    assert frac.core_violations(make()) == []
    report = audit_core_approval(make())
    assert (report.theta_lower, report.theta_upper) == pytest.approx((value, value))
    assert check_witness(make(), report.witness) == []


def test_e1_witness():
    inst = E1()
    _, frac = theta_p(inst)
    report = round_log_m(inst, frac, trials=16, seed=3)
    assert report.witness.voters == ("v2",) and report.witness.committee == ("b",)
    assert report.theta_upper == pytest.approx(2.0)


def test_e2_log_n():
    inst = E2()
    _, frac = theta_p(inst)
    report = round_log_n(inst, frac, trials=8, seed=0)
    assert report.diagnostics["successful_trials"] == 8
    assert report.theta_upper == pytest.approx(0.5)


def test_single_voter_degenerate_intervals():
    inst = approval({"v": ["a", "b"]}, "ab", 1, {"a"})
    _, frac = theta_p(inst)
    report = round_log_n(inst, frac, trials=4)
    assert math.isinf(report.theta_upper)
    assert report.diagnostics["status"] == "DEGENERATE_INTERVALS"


def test_zero_trials_rejected():
    _, frac = theta_p(E1())
    with pytest.raises(ValueError):
        round_log_m(E1(), frac, trials=0)


def test_nobody_can_improve_is_unbounded():
    inst = approval({"v1": ["a"], "v2": []}, "ab", 1, {"a"})
    value, frac = theta_p(inst)
    assert math.isinf(value) and frac is None
    report = audit_core_approval(inst)
    assert math.isinf(report.theta_lower) and math.isinf(report.theta_upper)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_gap_family(p):
    inst = gen_gap(p)
    value, _ = theta_p(inst)
    assert value <= 1 / p + 1e-6
    report = audit_core_approval(inst, trials=32, seed=1)
    assert 0.5 - 1e-9 <= report.theta_upper <= 1 + 1e-9


@settings(max_examples=80, deadline=None)
@given(approval_instances())
def test_sandwich(inst):
    report = audit_core_approval(inst, trials=16, seed=5)
    truth = brute_theta(inst, sat_core)
    assert exact_theta_core(inst)[0] == pytest.approx(truth)
    if math.isinf(truth):
        assert math.isinf(report.theta_lower)
        return
    assert report.theta_lower <= truth + 1e-6
    assert truth <= report.theta_upper + 1e-6
    if report.witness is not None:
        assert check_witness(inst, report.witness) == []


@settings(max_examples=60, deadline=None)
@given(approval_instances())
def test_lp_homogeneity(inst):
    value, frac = theta_p(inst)
    if frac is not None:
        assert frac.z.sum() == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(approval_instances())
def test_deterministic(inst):
    a = audit_core_approval(inst, trials=8, seed=11)
    b = audit_core_approval(inst, trials=8, seed=11, jobs=3)
    assert a == b


def test_exact_rational_lp():
    value, frac = theta_p(E2(), exact=True)
    assert frac.extra["exact_objective"] == 0.5
