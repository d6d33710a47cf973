import math

import numpy as np
import pytest
from hypothesis import given, settings

from coreaudit.core_approval import round_log_m, theta_p
from coreaudit.core_general import (
    audit_core_general,
    preprocess,
    round_general_log_m,
    round_general_log_n,
    separate_kc,
    solve_kc_lp,
    theta_p_general,
)
from coreaudit.errors import DemandTooLarge
from coreaudit.model import check_witness, satisfied_core
from coreaudit.oracles import exact_theta_core

from helpers import E1, approval_instances, brute_theta, general, general_instances, sat_core, single_voter


def test_preprocess_uniform_sizes():
    r = preprocess(E1(), "a")
    assert not r.small.any() and r.kept.all()
    assert np.allclose(r.scaled_sizes, 1.0)


def test_preprocess_small_items():
    inst = general({"v": {"a": 1, "b": 1, "c": 1}}, {"a": 10, "b": 1, "c": 0.001}, 10, {"a"})
    r = preprocess(inst, "a")
    assert r.small.tolist() == [False, True, True]
    assert r.offset == pytest.approx(1.001)
    assert np.all((r.scaled_sizes[r.lp_candidates] >= 1 / 3) & (r.scaled_sizes[r.lp_candidates] <= 1))


def test_preprocess_forced_voter():
    inst = general({"v": {"a": 1, "s": 3}, "w": {"a": 1}}, {"a": 1, "s": 0.01}, 1, {"a"})
    r = preprocess(inst, "a")
    assert r.forced.tolist() == [True, False]


def test_separation_full_solution():
    inst = general({"v": {"a": 1, "b": 1}}, {"a": 1, "b": 1}, 2, {"a"})
    assert separate_kc(inst, "v", np.ones(2), np.ones(2), 1.0) is None


def test_separation_tie_prefers_small_subset():
    inst = general({"v": {"a": 1, "b": 1}}, {"a": 1, "b": 1}, 2, {"a"})
    cut = separate_kc(inst, "v", np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1.0)
    assert cut.subset == () and cut.demand == 2
    assert cut.violation == pytest.approx(1.0)
    assert cut.coefficients == {"a": 1, "b": 1}


def test_separation_zero_z():
    inst = general({"v": {"a": 1, "b": 1}}, {"a": 1, "b": 1}, 2, {"a"})
    assert separate_kc(inst, "v", np.zeros(2), np.zeros(2), 0.0) is None


def test_demand_guard():
    inst = general({"v": {"a": 10**6 + 5}}, {"a": 1, "b": 1}, 1, {"a"})
    with pytest.raises(DemandTooLarge):
        separate_kc(inst, "v", np.zeros(2), np.zeros(2), 1.0)


def test_examples():
    assert theta_p_general(E1())[0] == pytest.approx(2.0)
    assert theta_p_general(single_voter())[0] == pytest.approx(1.0)
    report = audit_core_general(single_voter(), trials=8)
    assert report.theta_upper == pytest.approx(1.0)
    assert report.witness.committee == ("a",)


@settings(max_examples=40, deadline=None)
@given(approval_instances(max_n=5, max_m=5))
def test_matches_approval_path(inst):
    a, _ = theta_p(inst)
    b, _ = theta_p_general(inst)
    assert a == pytest.approx(b, abs=1e-6) or (math.isinf(a) and math.isinf(b))


@settings(max_examples=30, deadline=None)
@given(approval_instances(max_n=5, max_m=5))
def test_general_rounding_reduces_to_approval(inst):
    value, frac = theta_p(inst)
    if frac is None:
        return
    a = round_log_m(inst, frac, trials=8, seed=2)
    b = round_general_log_m(inst, frac, trials=8, seed=2)
    assert a.theta_upper == b.theta_upper
    assert a.witness == b.witness


def test_integral_optimum_recovered():
    inst = single_voter()
    value, frac = theta_p_general(inst)
    for fn in (round_general_log_m, round_general_log_n):
        report = fn(inst, frac, trials=4)
        if report.witness is not None:
            assert report.theta_upper == pytest.approx(value)


@settings(max_examples=60, deadline=None)
@given(general_instances())
def test_lower_bound_and_witnesses(inst):
    truth = brute_theta(inst, sat_core)
    assert exact_theta_core(inst)[0] == pytest.approx(truth)
    report = audit_core_general(inst, trials=8, seed=4)
    if math.isinf(truth):
        assert math.isinf(report.theta_lower)
        return
    assert report.theta_lower <= truth + 1e-6
    assert truth <= report.theta_upper + 1e-6
    if report.witness is not None:
        assert check_witness(inst, report.witness) == []
        t = np.isin(inst.election.candidate_ids, report.witness.committee)
        assert satisfied_core(inst, t)[[inst.election.voter_index[v] for v in report.witness.voters]].all()


@settings(max_examples=40, deadline=None)
@given(general_instances(max_n=4, max_m=5))
def test_cuts_violated_then_satisfied(inst):
    res = solve_kc_lp(inst)
    if res.status != "optimal":
        return
    U = inst.election.utility_matrix
    y, z = res.solution.y, res.solution.z
    for _, i, subset, D, viol in res.cuts:
        assert viol > 1e-7
        lhs = sum(min(U[i, j], D) * y[i, j] for j in inst.election.approval_sets[i] if j not in subset)
        assert lhs >= D * z[i] - 1e-8
    # the final solution admits no violated cut at all
    for i, v in enumerate(inst.election.voter_ids):
        assert separate_kc(inst, v, res.solution.x, y[i], z[i]) is None
