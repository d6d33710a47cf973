"""Brute-force ground truth for small instances.

Committees are enumerated in Gray-code order by the compiled kernel (or its
numpy twin). Each step flips one candidate, so per-voter scores update
incrementally. The minimizer is unique under the tie-break "smallest
bitmask", so the answer never depends on how the range is split into chunks.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ModeMismatch, OracleBudgetExceeded
from .lp import GE, LpBuilder, solve_lp
from .model import UNBOUNDED, AuditInstance, DeviationWitness, witness_from_masks

_CHUNK = 1 << 18


@dataclass(frozen=True)
class OracleBudget:
    max_committees: int = 2**22
    max_voter_subsets: int = 2**14
    time_cap: float | None = None  # seconds

    def __post_init__(self):
        if self.max_committees <= 0 or self.max_voter_subsets <= 0:
            raise ValueError("oracle caps must be positive")
        if self.time_cap is not None and self.time_cap <= 0:
            raise ValueError("time cap must be positive")


def _size_tables(sizes: np.ndarray, h: int):
    """Subset sums of the low ``h`` and the remaining sizes, each built in bit order."""

    def table(vals):
        out = np.zeros(1 << len(vals))
        for b, v in enumerate(vals):
            out[1 << b: 1 << (b + 1)] = out[: 1 << b] + v
        return out

    return table(sizes[:h]), table(sizes[h:])


def _scan(instance: AuditInstance, scores: np.ndarray, thresh: np.ndarray, budget: OracleBudget, jobs: int):
    m = instance.m
    total = 1 << m
    if total - 1 > budget.max_committees:
        raise OracleBudgetExceeded(f"2^{m} committees exceed the budget of {budget.max_committees}")
    sizes = np.asarray(instance.election.sizes, dtype=float)
    if instance.election.is_approval:
        sizes = np.ones(m)
    h = m // 2
    lo, hi = _size_tables(sizes, h)
    chunks = [(a, min(total, a + _CHUNK)) for a in range(0, total, _CHUNK)]
    deadline = None if budget.time_cap is None else time.monotonic() + budget.time_cap

    def run(chunk):
        if deadline is not None and time.monotonic() > deadline:
            raise OracleBudgetExceeded(f"enumeration exceeded {budget.time_cap} s")
        return kernels.scan_committees(scores, thresh, lo, hi, h, chunk[0], chunk[1])

    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    best = (-1, 0, 0.0)
    for mask, count, size in parts:
        if mask < 0:
            continue
        bm, bc, bs = best
        if bm < 0 or size * bc < bs * count or (size * bc == bs * count and mask < bm):
            best = (mask, count, size)
    return best[0]


def _mask_bits(mask: int, m: int) -> np.ndarray:
    return np.array([(mask >> j) & 1 for j in range(m)], dtype=bool)


def _result(instance, mask, satisfied_fn, mode):
    if mask < 0:
        return UNBOUNDED, None
    tmask = _mask_bits(mask, instance.m)
    smask = satisfied_fn(tmask)
    w = witness_from_masks(instance, tmask, smask, mode)
    return w.ratio, w


def exact_theta_core(instance: AuditInstance, budget: OracleBudget | None = None, jobs: int = 1):
    """Exact core ratio: min over committees ``T`` of ``R size(T) / |{i : U_i(T) >= U_i(W) + 1}|``."""
    budget = budget or OracleBudget()
    if not instance.election.has_integer_utilities:
        raise ModeMismatch("the exact oracle needs non-negative integer utilities")
    U = instance.election.utility_matrix.astype(np.int64)
    thresh = np.ceil(np.asarray(instance.base_utilities, dtype=float) + 1 - 1e-9).astype(np.int64)
    mask = _scan(instance, U, thresh, budget, jobs)

    def sat(t):
        return U @ t.astype(np.int64) >= thresh

    return _result(instance, mask, sat, "core")


def exact_theta_subcore(instance: AuditInstance, budget: OracleBudget | None = None, jobs: int = 1):
    """Exact sub-core ratio: deviators keep all of ``A_i ∩ W`` and gain one more approved candidate."""
    budget = budget or OracleBudget()
    if instance.is_fractional:
        raise ModeMismatch("the sub-core oracle needs an integral committee")
    A = (instance.election.utility_matrix > 0).astype(np.int64)
    w = instance.committee_mask.astype(np.int64)
    big = instance.m + 1
    # score = big*|A_i∩W∩T| + |(A_i∩T)\W|; it reaches big*|A_i∩W| + 1 exactly
    # when every approved member of W is kept and something new is added
    scores = big * (A * w) + A * (1 - w)
    thresh = big * (A @ w) + 1
    mask = _scan(instance, scores, thresh, budget, jobs)

    def sat(t):
        return scores @ t.astype(np.int64) >= thresh

    return _result(instance, mask, sat, "sub-core")


def exact_theta_fractional_core(instance: AuditInstance, eta: float = 1.0, budget: OracleBudget | None = None,
                                method: str = "auto"):
    """Exact ratio for fractional deviations that must raise every member's utility by ``eta``.

    One LP per voter subset ``S``: ``min sum s_j y_j`` subject to
    ``sum_j u_ij y_j >= U_i(W) + eta`` for ``i`` in ``S`` and ``0 <= y <= 1``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    budget = budget or OracleBudget()
    e = instance.election
    U = np.asarray(e.utility_matrix, dtype=float)
    need = np.asarray(instance.base_utilities, dtype=float) + eta
    # y = 1 maximizes every utility at once, so S is feasible iff each member is
    ok = np.flatnonzero(U.sum(axis=1) >= need - 1e-12)
    count = (1 << len(ok)) - 1
    if count > budget.max_voter_subsets:
        raise OracleBudgetExceeded(f"{count} voter subsets exceed the budget of {budget.max_voter_subsets}")
    deadline = None if budget.time_cap is None else time.monotonic() + budget.time_cap
    sizes = e.sizes
    best = None  # (ratio, mask, y)
    for sub in range(1, count + 1):
        if deadline is not None and time.monotonic() > deadline:
            raise OracleBudgetExceeded(f"enumeration exceeded {budget.time_cap} s")
        members = [ok[b] for b in range(len(ok)) if sub >> b & 1]
        lp = LpBuilder("min")
        for j in range(e.m):
            lp.add_var(j, ub=1.0, cost=sizes[j])
        for i in members:
            lp.add_row({j: U[i, j] for j in range(e.m)}, GE, need[i])
        sol = solve_lp(lp.build(), method=method)
        if sol.status != "optimal":
            continue
        y = np.clip(np.asarray(sol.x, dtype=float), 0.0, 1.0)
        ratio = instance.deviation_ratio(float(sizes @ y), len(members))
        if best is None or ratio < best[0]:
            best = (ratio, members, y)
    if best is None:
        return UNBOUNDED, None
    _, members, y = best
    committee = {e.candidate_ids[j]: float(y[j]) for j in range(e.m) if y[j] > 0}
    w = DeviationWitness(
        voters=tuple(e.voter_ids[i] for i in members),
        committee=committee,
        ratio=instance.deviation_ratio(float(sizes @ y), len(members)),
        mode="fractional-core",
        eta=eta,
    )
    return w.ratio, w

