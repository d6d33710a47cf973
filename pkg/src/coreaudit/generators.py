"""Instance builders: the integrality-gap family, the coverage construction, and seeded random elections."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import GeneratorError
from .model import AuditInstance, Candidate, Election, Voter

DUMMY = "_dummy"


def gen_gap(p: int) -> AuditInstance:
    """Voter groups ``V_l`` (``2^l`` voters each) and candidate groups where ``theta_p <= 1/p``.

    ``C_q`` holds ``2^q - 1`` candidates approved only by ``V_q``, ``C'`` holds
    ``2^p`` candidates approved by everyone, plus ``p`` dummies nobody approves.
    The audited committee is the dummies together with every ``C_q``; ``k = n``.
    """
    if int(p) != p or p < 1:
        raise GeneratorError("p must be an integer >= 1")
    p = int(p)
    groups = {q: [f"c{q}_{t}" for t in range(2**q - 1)] for q in range(1, p + 1)}
    shared = [f"cs_{t}" for t in range(2**p)]
    dummies = [f"{DUMMY}{t}" for t in range(p)]
    candidates = [Candidate(c) for q in groups for c in groups[q]]
    candidates += [Candidate(c) for c in shared] + [Candidate(c) for c in dummies]
    voters = []
    for ell in range(1, p + 1):
        for t in range(2**ell):
            voters.append(Voter.approving(f"v{ell}_{t}", groups[ell] + shared))
    n = len(voters)
    committee = frozenset(dummies) | frozenset(c for q in groups for c in groups[q])
    return AuditInstance(Election(tuple(candidates), tuple(voters), float(n), approval_format=True), committee)


def gen_coverage(q: int, d: int, sets: Sequence[Sequence[int]], beta=Fraction(1, 4)) -> AuditInstance:
    """Coverage construction with the group-1 fraction ``beta`` in place of ``1/e``.

    ``sets`` are ``d``-element subsets of the universe ``0 .. qd-1``; each becomes
    a main candidate. ``beta*qd`` voters approve ``q-1`` private dummies plus all
    mains, one voter per element approves the mains covering it, and empty
    voters pad ``n`` to ``q(q-1)d^2``. ``k = (q-1)qd`` and ``W`` is all dummies.
    """
    if q < 2 or d < 1:
        raise GeneratorError("need q >= 2 and d >= 1")
    beta = Fraction(beta)
    universe = q * d
    group1 = beta * universe
    if group1.denominator != 1 or (beta * (q - 1) * universe).denominator != 1:
        raise GeneratorError(f"beta*qd = {group1} is not an integer", code="NON_INTEGER_GROUP")
    group1 = int(group1)
    for s in sets:
        if len(set(s)) != d or len(s) != d or any(not 0 <= x < universe for x in s):
            raise GeneratorError(f"set {list(s)} is not a {d}-subset of the {universe}-element universe",
                                 code="MALFORMED_SETS")
    n = q * (q - 1) * d * d
    padding = n - group1 - universe
    if padding < 0:
        raise GeneratorError("more structured voters than q(q-1)d^2", code="TOO_MANY_VOTERS")
    mains = [f"m{t}" for t in range(len(sets))]
    dummies = [f"{DUMMY}{t}" for t in range(group1 * (q - 1))]
    candidates = [Candidate(c) for c in mains] + [Candidate(c) for c in dummies]
    voters = []
    for g in range(group1):
        own = dummies[g * (q - 1):(g + 1) * (q - 1)]
        voters.append(Voter.approving(f"g{g}", own + mains))
    for x in range(universe):
        voters.append(Voter.approving(f"e{x}", [mains[t] for t, s in enumerate(sets) if x in s]))
    for t in range(padding):
        voters.append(Voter.approving(f"{DUMMY}_v{t}", []))
    k = float((q - 1) * q * d)
    return AuditInstance(Election(tuple(candidates), tuple(voters), k, approval_format=True), frozenset(dummies))


def gen_random(n: int, m: int, k: float, mode: str = "approval", density: float = 0.5, max_u: int = 3,
               size_range: tuple[float, float] = (1.0, 1.0), committee_rule: str = "greedy", seed: int = 0,
               max_approvals: int | None = None) -> AuditInstance:
    """Seeded random election plus a committee filled up to ``k``.

    Both modes consume the random stream identically, so a general instance
    with ``max_u = 1`` and unit sizes has the same approval sets as the
    approval instance from the same seed. ``max_approvals`` caps ``|A_i|``.
    """
    if n < 1 or m < 1:
        raise GeneratorError("need n, m >= 1")
    if not 0 < density <= 1:
        raise GeneratorError("density must lie in (0, 1]")
    if mode not in ("approval", "general"):
        raise GeneratorError("mode must be 'approval' or 'general'")
    if committee_rule not in ("greedy", "random"):
        raise GeneratorError("committee_rule must be 'greedy' or 'random'")
    if k <= 0:
        raise GeneratorError("budget must be positive")
    lo, hi = size_range
    if not 0 < lo <= hi:
        raise GeneratorError("size range must satisfy 0 < lo <= hi")
    rng = np.random.default_rng(seed)
    approve = rng.random((n, m)) < density
    utils = rng.integers(1, max(1, max_u) + 1, size=(n, m))
    sizes = np.round(rng.uniform(lo, hi, size=m), 3)
    sizes = np.clip(sizes, lo, hi)
    order = rng.permutation(m)
    if max_approvals is not None:
        for i in range(n):
            A = np.flatnonzero(approve[i])
            if len(A) > max_approvals:
                drop = rng.choice(A, size=len(A) - max_approvals, replace=False)
                approve[i, drop] = False
    if mode == "approval":
        sizes = np.ones(m)
        utils = np.ones((n, m), dtype=int)
    cids = [f"c{j}" for j in range(m)]
    candidates = tuple(Candidate(cids[j], float(sizes[j])) for j in range(m))
    voters = tuple(
        Voter(f"v{i}", {cids[j]: int(utils[i, j]) for j in range(m) if approve[i, j]}) for i in range(n)
    )
    election = Election(candidates, voters, float(k), approval_format=(mode == "approval"))
    if committee_rule == "greedy":
        score = (approve * utils).sum(axis=0) / sizes
        order = sorted(range(m), key=lambda j: (-score[j], j))
    committee, used = [], 0.0
    for j in order:
        if used + sizes[j] <= k + 1e-12:
            committee.append(cids[int(j)])
            used += sizes[j]
    if not committee and sizes.min() > k:
        raise GeneratorError("no candidate fits the budget", code="INFEASIBLE_COMMITTEE")
    return AuditInstance(election, frozenset(committee))


def random_corpus(count: int, seed: int = 0, *, n_range=(2, 8), m_range=(2, 8), mode: str = "approval",
                  max_u: int = 3, size_range=(1.0, 1.0), max_approvals: int | None = None) -> Iterator[AuditInstance]:
    """``count`` reproducible instances with sizes and densities drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    for t in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        k = int(rng.integers(1, m + 1))
        density = float(rng.choice([0.25, 0.4, 0.5, 0.7]))
        rule = "greedy" if rng.random() < 0.5 else "random"
        yield gen_random(n, m, k, mode, density, max_u, size_range, rule, seed=int(rng.integers(2**63)),
                         max_approvals=max_approvals)
