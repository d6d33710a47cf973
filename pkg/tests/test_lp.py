from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coreaudit.core_approval import build_core_lp
from coreaudit.lp import EQ, GE, LE, LpBuilder, LpProblem, solve_lp

from helpers import E1

TOL = 1e-6


def test_single_row():
    lp = LpBuilder("min")
    x = lp.add_var("x", cost=1.0)
    lp.add_row({x: 1.0}, GE, 3.0)
    for method in ("simplex", "highs"):
        sol = solve_lp(lp.build(), method=method)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(3.0)
        assert sol.duals[0] == pytest.approx(1.0)


def test_infeasible():
    lp = LpBuilder("max")
    x = lp.add_var("x", cost=1.0)
    lp.add_row({x: 1.0}, LE, 0.0)
    lp.add_row({x: 1.0}, GE, 1.0)
    for method in ("simplex", "highs"):
        assert solve_lp(lp.build(), method=method).status == "infeasible"


def test_unbounded():
    lp = LpBuilder("max")
    x = lp.add_var("x", cost=1.0)
    lp.add_row({x: 1.0}, GE, 1.0)
    assert solve_lp(lp.build(), method="simplex").status == "unbounded"


def test_core_lp_e1():
    sol = solve_lp(build_core_lp(E1()), method="simplex")
    assert sol.objective == pytest.approx(2.0)
    exact = solve_lp(build_core_lp(E1()), exact=True)
    assert exact.objective == Fraction(2)


@st.composite
def lps(draw):
    nv = draw(st.integers(1, 5))
    nr = draw(st.integers(1, 5))
    coef = st.integers(-3, 3).map(float)
    lp = LpBuilder(draw(st.sampled_from(["min", "max"])))
    for j in range(nv):
        ub = draw(st.sampled_from([None, 1.0, 4.0]))
        lp.add_var(j, ub=ub if ub is not None else np.inf, cost=draw(coef))
    for r in range(nr):
        row = {j: draw(coef) for j in range(nv)}
        lp.add_row(row, draw(st.sampled_from([LE, GE, EQ])), draw(st.integers(-2, 6).map(float)))
    # a box keeps every feasible LP bounded
    for j in range(nv):
        lp.add_row({j: 1.0}, LE, 10.0)
    return lp.build()


def _check_duality(p: LpProblem, sol):
    A = p.A
    x = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.duals, dtype=float)
    assert sol.dual_objective() == pytest.approx(sol.objective, rel=TOL, abs=TOL)
    slack = A @ x - p.rhs
    assert np.all(np.abs(y * slack) <= TOL * (1 + np.abs(y)))
    rc = sol.reduced_costs()
    ub = np.asarray(p.ub, dtype=float)
    at_lb = x <= 1e-9
    at_ub = np.isfinite(ub) & (x >= ub - 1e-9)
    interior = ~at_lb & ~at_ub
    assert np.all(np.abs(rc[interior]) <= 1e-6)


@settings(max_examples=150, deadline=None)
@given(lps())
def test_simplex_matches_highs_with_duality(p):
    a = solve_lp(p, method="simplex")
    b = solve_lp(p, method="highs")
    assert a.status == b.status
    if a.status == "optimal":
        assert a.objective == pytest.approx(b.objective, rel=TOL, abs=TOL)
        _check_duality(p, a)
        _check_duality(p, b)


@settings(max_examples=100, deadline=None)
@given(lps(), st.randoms(use_true_random=False))
def test_row_permutation_invariant(p, rnd):
    order = list(range(len(p.rhs)))
    rnd.shuffle(order)
    a = solve_lp(p, method="simplex")
    b = solve_lp(p.permuted(order), method="simplex")
    assert a.status == b.status
    if a.status == "optimal":
        assert abs(a.objective - b.objective) <= 1e-9 * max(1.0, abs(a.objective))


@settings(max_examples=40, deadline=None)
@given(lps())
def test_exact_mode_agrees(p):
    a = solve_lp(p, method="simplex")
    e = solve_lp(p, exact=True)
    assert a.status == e.status
    if e.status == "optimal":
        assert isinstance(e.objective, Fraction)
        assert float(e.objective) == pytest.approx(a.objective, rel=1e-9, abs=1e-9)
