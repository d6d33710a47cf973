import math

import numpy as np
import pytest
from hypothesis import given, settings

from coreaudit.core_approval import theta_p
from coreaudit.model import AuditInstance
from coreaudit.oracles import exact_theta_core, exact_theta_subcore
from coreaudit.priceability import (
    PriceSystem,
    cheapest_improvement,
    is_weakly_priceable,
    lindahl_fractional,
    lindahl_integer_general,
    lindahl_ratio_approval,
    verify_prices,
    weak_priceability,
)
from coreaudit.subcore import theta_p_subcore

from helpers import E1, E2, approval, approval_instances, general, single_voter


def test_lindahl_e1():
    theta, ps = lindahl_ratio_approval(E1())
    assert theta == pytest.approx(2.0)
    assert np.allclose(ps.prices, [[0, 0], [0, 2]])
    assert cheapest_improvement(E1(), ps.prices)[1] == pytest.approx(2.0)
    assert verify_prices(E1(), ps) == []


def test_lindahl_e2():
    theta, ps = lindahl_ratio_approval(E2())
    assert theta == pytest.approx(0.5)
    assert ps.prices[:, 1] == pytest.approx([0.5, 0.5])


def test_lindahl_unbounded():
    inst = approval({"v1": ["a"], "v2": []}, "ab", 1, {"a"})
    theta, ps = lindahl_ratio_approval(inst)
    assert math.isinf(theta) and not ps.prices.any()


def test_fractional_examples():
    assert lindahl_fractional(E1(), 1.0)[0] == pytest.approx(2.0)
    zero = general({"v": {}}, {"a": 1}, 1, set())
    assert math.isinf(lindahl_fractional(zero)[0])
    with pytest.raises(ValueError):
        lindahl_fractional(E1(), 0)


def test_fractional_with_fractional_committee():
    inst = AuditInstance(E2().election, {"b": 0.5})
    theta, ps = lindahl_fractional(inst, 0.5)
    assert theta == pytest.approx(0.5)
    assert ps.prices.sum(axis=0).max() <= inst.R + 1e-8


def test_integer_bracket():
    lo, hi, ps = lindahl_integer_general(single_voter(), 0.01)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(2.01)
    lo, hi, _ = lindahl_integer_general(E1(), 0.01)
    assert lo == pytest.approx(2.0) and lo <= theta_p(E1())[0] + 1e-6 <= hi
    zero = general({"v": {}}, {"a": 1}, 1, set())
    assert all(math.isinf(v) for v in lindahl_integer_general(zero)[:2])


def test_weak_examples():
    theta, ps = weak_priceability(E2())
    assert theta == pytest.approx(0.5)
    assert verify_prices(E2(), ps) == []
    full = approval({"v1": ["a"], "v2": ["b"]}, "ab", 2, {"a", "b"})
    assert math.isinf(weak_priceability(full)[0])
    assert not is_weakly_priceable(1.0) and is_weakly_priceable(1.01)


def test_verify_flags_overpayment():
    prices = np.array([[3.0, 0.0], [0.0, 0.0]])
    codes = [v.code for v in verify_prices(E1(), PriceSystem(prices, 0.0, "lindahl-approval", 2.0))]
    assert codes == ["OVERPAID_CANDIDATE"]


def test_price_json_round_trip():
    theta, ps = lindahl_ratio_approval(E2())
    back = PriceSystem.from_json(E2(), ps.to_json(E2()))
    assert np.allclose(back.prices, ps.prices) and back.theta == theta


@settings(max_examples=80, deadline=None)
@given(approval_instances())
def test_lindahl_duality(inst):
    theta, ps = lindahl_ratio_approval(inst)
    value, _ = theta_p(inst)
    if math.isinf(value):
        assert math.isinf(theta)
        return
    assert theta == pytest.approx(value, abs=1e-6)
    assert ps.prices.sum(axis=0).max() <= inst.R + 1e-8
    assert cheapest_improvement(inst, ps.prices).min() >= theta - 1e-6
    assert verify_prices(inst, ps) == []
    assert lindahl_fractional(inst, 1.0)[0] == pytest.approx(theta, abs=1e-6)


@settings(max_examples=80, deadline=None)
@given(approval_instances())
def test_weak_price_duality(inst):
    theta, ps = weak_priceability(inst)
    value, _ = theta_p_subcore(inst)
    assert theta == pytest.approx(value, abs=1e-6) or (math.isinf(theta) and math.isinf(value))
    assert verify_prices(inst, ps) == []


@settings(max_examples=80, deadline=None)
@given(approval_instances())
def test_priceability_implications(inst):
    if lindahl_ratio_approval(inst)[0] > 1 + 1e-6:
        assert exact_theta_core(inst)[0] > 1
    if is_weakly_priceable(weak_priceability(inst)[0]):
        assert exact_theta_subcore(inst)[0] > 1


@settings(max_examples=40, deadline=None)
@given(approval_instances(max_n=4, max_m=4))
def test_fractional_eta_direction(inst):
    # a larger eta makes every deviation harder, so the ratio cannot drop
    assert lindahl_fractional(inst, 2.0)[0] >= lindahl_fractional(inst, 1.0)[0] - 1e-8
