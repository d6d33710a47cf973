import math

import numpy as np
import pytest
from hypothesis import given, settings

from coreaudit.core_approval import theta_p
from coreaudit.errors import ModeMismatch
from coreaudit.model import check_witness, satisfied_subcore
from coreaudit.oracles import exact_theta_subcore
from coreaudit.subcore import audit_subcore, round_subcore_log_m, round_subcore_log_n, theta_p_subcore

from helpers import E1, E2, approval, approval_instances, general


@pytest.mark.parametrize("make,value", [(E1, 2.0), (E2, 0.5)])
def test_examples(make, value):
    got, _ = theta_p_subcore(make())
    assert got == pytest.approx(value)
    report = audit_subcore(make(), trials=16)
    assert report.theta_upper == pytest.approx(value)


def test_e1_witness():
    _, frac = theta_p_subcore(E1())
    report = round_subcore_log_m(E1(), frac, trials=8, seed=9)
    assert report.witness.voters == ("v2",) and report.witness.committee == ("b",)
    assert report.witness.mode == "sub-core"


def test_unbounded_when_nothing_new():
    inst = approval({"v1": ["a"], "v2": []}, "ab", 2, {"a", "b"})
    assert math.isinf(theta_p_subcore(inst)[0])
    assert math.isinf(audit_subcore(inst).theta_upper)


def test_needs_approval():
    with pytest.raises(ModeMismatch):
        theta_p_subcore(general({"v": {"a": 2}}, {"a": 1}, 1, set()))


def test_log_n_degenerate():
    inst = approval({"v": ["a", "b"]}, "ab", 1, {"a"})
    _, frac = theta_p_subcore(inst)
    report = round_subcore_log_n(inst, frac, trials=2)
    assert report.diagnostics["status"] == "DEGENERATE_INTERVALS"


@settings(max_examples=80, deadline=None)
@given(approval_instances())
def test_sandwich_and_core_comparison(inst):
    lower, _ = theta_p_subcore(inst)
    core, _ = theta_p(inst)
    truth, _ = exact_theta_subcore(inst)
    assert lower >= core - 1e-6
    if math.isinf(truth):
        assert math.isinf(lower)
        return
    report = audit_subcore(inst, trials=16, seed=3)
    assert report.theta_lower <= truth + 1e-6 <= report.theta_upper + 2e-6
    if report.witness is not None:
        assert check_witness(inst, report.witness) == []
        t = np.isin(inst.election.candidate_ids, report.witness.committee)
        members = [inst.election.voter_index[v] for v in report.witness.voters]
        assert satisfied_subcore(inst, t)[members].all()
