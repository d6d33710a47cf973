"""Price systems certifying how far a committee is from being priceable.

Prices come out of LP duals, so the certified ratio and the prices agree by
complementary slackness rather than by a second solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core_approval import build_core_lp, can_improve
from .core_general import solve_kc_lp
from .errors import ModeMismatch
from .lp import GE, LE, LpBuilder, solve_lp
from .model import UNBOUNDED, AuditInstance, Violation

PRICE_MODES = ("lindahl-approval", "lindahl-fractional", "lindahl-integer", "weak")
BUDGET_TOL = 1e-8
AFFORD_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PriceSystem:
    """``prices[i, j]`` is what voter ``i`` pays towards candidate ``j``."""

    prices: np.ndarray
    theta: float
    mode: str
    R: float
    multipliers: dict = field(default_factory=dict)
    eta: float | None = None

    def to_json(self, instance: AuditInstance) -> dict[str, Any]:
        e = instance.election
        table: dict[str, dict[str, float]] = {}
        for i, v in enumerate(e.voter_ids):
            row = {e.candidate_ids[j]: float(self.prices[i, j]) for j in np.flatnonzero(self.prices[i] > 0)}
            if row:
                table[v] = row
        out: dict[str, Any] = {"mode": self.mode, "theta": self.theta, "prices": table}
        if self.eta is not None:
            out["eta"] = self.eta
        return out

    @classmethod
    def from_json(cls, instance: AuditInstance, data) -> "PriceSystem":
        e = instance.election
        p = np.zeros((e.n, e.m))
        for v, row in data.get("prices", {}).items():
            for c, val in row.items():
                p[e.voter_index[v], e.candidate_index[c]] = float(val)
        theta = data.get("theta", 0.0)
        theta = math.inf if theta == "unbounded" else float(theta)
        return cls(p, theta, data.get("mode", "lindahl-approval"), instance.R, eta=data.get("eta"))


def candidate_budget_violations(instance: AuditInstance, prices: np.ndarray, tol: float = BUDGET_TOL
                                ) -> list[Violation]:
    """Candidates whose collected payments exceed ``R``."""
    out = []
    totals = prices.sum(axis=0)
    for j in np.flatnonzero(totals > instance.R + tol):
        out.append(Violation("OVERPAID_CANDIDATE",
                             f"candidate {instance.election.candidate_ids[j]!r} collects {totals[j]:.12g} > R"))
    if np.any(prices < -tol):
        out.append(Violation("NEGATIVE_PRICE", "prices must be non-negative"))
    return out


def cheapest_improvement(instance: AuditInstance, prices: np.ndarray) -> np.ndarray:
    """Per voter: cost of the ``u_i + 1`` cheapest approved candidates (``inf`` if there are too few)."""
    e = instance.election
    base = instance.base_utilities
    out = np.full(e.n, math.inf)
    for i, A in enumerate(e.approval_sets):
        need = int(base[i]) + 1
        if len(A) >= need:
            out[i] = float(np.sort(prices[i, A])[:need].sum())
    return out


def cheapest_augmentation(instance: AuditInstance, prices: np.ndarray) -> np.ndarray:
    """Per voter: ``sum_{A_i ∩ W} p_ij`` plus the cheapest new approved candidate."""
    e = instance.election
    w = instance.committee_mask
    out = np.full(e.n, math.inf)
    for i, A in enumerate(e.approval_sets):
        new = [j for j in A if not w[j]]
        if new:
            kept = [j for j in A if w[j]]
            out[i] = float(prices[i, kept].sum() + prices[i, new].min())
    return out


def verify_prices(instance: AuditInstance, ps: PriceSystem, tol: float = AFFORD_TOL) -> list[Violation]:
    """Independent re-check of budget and affordability conditions."""
    out = candidate_budget_violations(instance, ps.prices)
    if math.isinf(ps.theta):
        return out
    if ps.mode == "lindahl-approval":
        cost = cheapest_improvement(instance, ps.prices)
    elif ps.mode == "weak":
        cost = cheapest_augmentation(instance, ps.prices)
    else:
        return out
    for i in np.flatnonzero(cost < ps.theta - tol):
        out.append(Violation("AFFORDABLE_DEVIATION",
                             f"voter {instance.election.voter_ids[i]!r} can improve for {cost[i]:.12g} < theta"))
    return out


def _require_approval(instance: AuditInstance):
    if not instance.election.is_approval or instance.is_fractional:
        raise ModeMismatch("this audit needs an approval election with an integral committee")


def lindahl_ratio_approval(instance: AuditInstance, *, method: str = "auto", exact: bool = False):
    """Lindahl ratio and prices: ``p_ij`` is the shadow price of ``y_ij <= x_j`` in the core LP."""
    _require_approval(instance)
    e = instance.election
    able = can_improve(instance)
    if not able.any():
        return UNBOUNDED, PriceSystem(np.zeros((e.n, e.m)), UNBOUNDED, "lindahl-approval", instance.R)
    sol = solve_lp(build_core_lp(instance), method=method, exact=exact)
    prices = np.zeros((e.n, e.m))
    for label, dual in zip(sol.problem.con_labels, sol.duals):
        if isinstance(label, tuple) and label[0] == "yx":
            prices[e.voter_index[label[1]], e.candidate_index[label[2]]] = max(0.0, -float(dual))
    # voters who cannot improve at any price owe nothing; their duals are degenerate
    prices[~able] = 0.0
    theta = float(sol.objective)
    return theta, PriceSystem(prices, theta, "lindahl-approval", instance.R)


def lindahl_fractional(instance: AuditInstance, eta: float = 1.0, *, method: str = "auto"):
    """Fractional Lindahl ratio: ``max theta`` over prices ``p``, multipliers ``lambda``, ``alpha``.

    Rows: ``u_ij lambda_i - alpha_ij <= p_ij s_j``, ``(u_i + eta) lambda_i - sum_j alpha_ij >= theta``,
    ``sum_i p_ij <= R``. Works with a set or a fractional committee.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    e = instance.election
    U = np.asarray(e.utility_matrix, dtype=float)
    base = np.asarray(instance.base_utilities, dtype=float)
    sizes = e.sizes
    lp = LpBuilder("max")
    th = lp.add_var("theta", cost=1.0)
    lam = {i: lp.add_var(("lambda", i)) for i in range(e.n)}
    alpha = {}
    price = {}
    for i, A in enumerate(e.approval_sets):
        for j in A:
            alpha[i, j] = lp.add_var(("alpha", i, j))
            price[i, j] = lp.add_var(("p", i, j))
    for (i, j), a in alpha.items():
        lp.add_row({lam[i]: U[i, j], a: -1.0, price[i, j]: -sizes[j]}, LE, 0.0)
    for i in range(e.n):
        row = {lam[i]: base[i] + eta, th: -1.0}
        for j in e.approval_sets[i]:
            row[alpha[i, j]] = -1.0
        lp.add_row(row, GE, 0.0)
    for j in range(e.m):
        row = {price[i, j]: 1.0 for i in range(e.n) if (i, j) in price}
        if row:
            lp.add_row(row, LE, instance.R)
    sol = solve_lp(lp.build(), method=method)
    zero = np.zeros((e.n, e.m))
    if sol.status == "unbounded":
        return UNBOUNDED, PriceSystem(zero, UNBOUNDED, "lindahl-fractional", instance.R, eta=eta)
    if sol.status != "optimal":
        raise ModeMismatch(f"fractional Lindahl LP is {sol.status}")
    prices = zero.copy()
    for (i, j), v in price.items():
        prices[i, j] = float(sol.x[v])
    multipliers = {
        "lambda": np.array([float(sol.x[lam[i]]) for i in range(e.n)]),
        "alpha": {(e.voter_ids[i], e.candidate_ids[j]): float(sol.x[v]) for (i, j), v in alpha.items()},
    }
    theta = float(sol.objective)
    return theta, PriceSystem(prices, theta, "lindahl-fractional", instance.R, multipliers, eta)


def lindahl_integer_general(instance: AuditInstance, epsilon: float = 0.01, *, method: str = "auto"):
    """Bracket ``[V, (2 + epsilon) V]`` on the integer Lindahl ratio from the knapsack-cover LP value ``V``.

    Prices ``p_ij = pi_ij / s_j`` where ``pi_ij`` is the shadow price of ``y_ij <= x_j``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if instance.is_fractional or not instance.election.has_integer_utilities:
        raise ModeMismatch("the integer Lindahl bracket needs integer utilities and an integral committee")
    e = instance.election
    zero = np.zeros((e.n, e.m))
    if not can_improve(instance).any():
        return UNBOUNDED, UNBOUNDED, PriceSystem(zero, UNBOUNDED, "lindahl-integer", instance.R)
    res = solve_kc_lp(instance, method=method)
    if res.status != "optimal":
        return UNBOUNDED, UNBOUNDED, PriceSystem(zero, UNBOUNDED, "lindahl-integer", instance.R)
    sol = res.lp
    prices = zero.copy()
    for label, dual in zip(sol.problem.con_labels, sol.duals):
        if isinstance(label, tuple) and label[0] == "yx":
            j = e.candidate_index[label[2]]
            prices[e.voter_index[label[1]], j] = max(0.0, -float(dual)) / e.sizes[j]
    prices[~can_improve(instance)] = 0.0
    value = float(sol.objective)
    return value, (2 + epsilon) * value, PriceSystem(prices, value, "lindahl-integer", instance.R)


def build_weak_price_lp(instance: AuditInstance):
    _require_approval(instance)
    e = instance.election
    w = instance.committee_mask
    lp = LpBuilder("max")
    th = lp.add_var("theta", cost=1.0)
    price = {}
    for i, A in enumerate(e.approval_sets):
        for j in A:
            price[i, j] = lp.add_var(("p", e.voter_ids[i], e.candidate_ids[j]))
    for j in range(e.m):
        row = {price[i, j]: 1.0 for i in range(e.n) if (i, j) in price}
        if row:
            lp.add_row(row, LE, instance.R, ("budget", e.candidate_ids[j]))
    for i, A in enumerate(e.approval_sets):
        kept = [j for j in A if w[j]]
        for d in A:
            if w[d]:
                continue
            row = {price[i, j]: 1.0 for j in kept}
            row[price[i, d]] = 1.0
            row[th] = -1.0
            lp.add_row(row, GE, 0.0, ("afford", e.voter_ids[i], e.candidate_ids[d]))
    return lp.build(), price


def weak_priceability(instance: AuditInstance, *, method: str = "auto"):
    """Weak priceability ratio; ``W`` is weakly priceable when it exceeds 1."""
    e = instance.election
    problem, price = build_weak_price_lp(instance)
    zero = np.zeros((e.n, e.m))
    has_new = any((~instance.committee_mask[A]).any() for A in e.approval_sets)
    if not has_new:
        return UNBOUNDED, PriceSystem(zero, UNBOUNDED, "weak", instance.R)
    sol = solve_lp(problem, method=method)
    if sol.status == "unbounded":
        return UNBOUNDED, PriceSystem(zero, UNBOUNDED, "weak", instance.R)
    prices = zero.copy()
    for (i, j), v in price.items():
        prices[i, j] = max(0.0, float(sol.x[v]))
    theta = float(sol.objective)
    return theta, PriceSystem(prices, theta, "weak", instance.R)


def is_weakly_priceable(theta_wp: float) -> bool:
    return theta_wp > 1 + 1e-6
