"""Shared instances, strategies and brute-force references for the tests.

The references here use plain ``itertools`` enumeration so they stay
independent of the Gray-code kernels they are compared against.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from coreaudit.model import AuditInstance, Candidate, Election, Voter


def approval(voters: dict, candidates, budget, committee, sizes=None) -> AuditInstance:
    sizes = sizes or {}
    cands = tuple(Candidate(c, sizes.get(c, 1.0)) for c in candidates)
    vs = tuple(Voter.approving(v, a) for v, a in voters.items())
    return AuditInstance(Election(cands, vs, float(budget), approval_format=not sizes), frozenset(committee))


def general(utils: dict, sizes: dict, budget, committee) -> AuditInstance:
    cands = tuple(Candidate(c, float(s)) for c, s in sizes.items())
    vs = tuple(Voter(v, u) for v, u in utils.items())
    return AuditInstance(Election(cands, vs, float(budget)), frozenset(committee))


def E1() -> AuditInstance:
    return approval({"v1": ["a"], "v2": ["b"]}, "ab", 1, {"a"})


def E2() -> AuditInstance:
    return approval({"v1": ["b"], "v2": ["b"]}, "ab", 2, {"a"})


def single_voter() -> AuditInstance:
    """One voter, ``u_a = 5``, ``U(W) = 2`` through a second candidate."""
    return general({"v1": {"a": 5, "w": 2}}, {"a": 1.0, "w": 1.0}, 1, {"w"})


def brute_theta(instance: AuditInstance, satisfied) -> Fraction | float:
    """``min_T R size(T) / |sat(T)|`` by plain enumeration, exact for integer sizes."""
    e = instance.election
    best = None
    for r in range(1, e.m + 1):
        for T in itertools.combinations(range(e.m), r):
            t = np.zeros(e.m, dtype=bool)
            t[list(T)] = True
            cnt = int(satisfied(instance, t).sum())
            if cnt == 0:
                continue
            size = float(e.sizes[t].sum())
            ratio = instance.n * size / (e.budget * cnt)
            if best is None or ratio < best:
                best = ratio
    return float("inf") if best is None else best


def sat_core(instance, t):
    U = instance.election.utility_matrix
    return U @ t.astype(float) >= instance.base_utilities + 1 - 1e-9


def sat_subcore(instance, t):
    A = instance.election.utility_matrix > 0
    w = instance.committee_mask
    return ~(A & w & ~t).any(axis=1) & (A & t & ~w).any(axis=1)


@st.composite
def approval_instances(draw, max_n=6, max_m=6, max_approvals=None):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    cids = [f"c{j}" for j in range(m)]
    voters = {}
    for i in range(n):
        A = draw(st.lists(st.sampled_from(cids), unique=True, max_size=max_approvals or m))
        voters[f"v{i}"] = sorted(A, key=cids.index)
    k = draw(st.integers(1, m))
    W = draw(st.lists(st.sampled_from(cids), unique=True, max_size=k))
    return approval(voters, cids, k, W)


@st.composite
def general_instances(draw, max_n=5, max_m=6, max_u=4):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    cids = [f"c{j}" for j in range(m)]
    sizes = {c: draw(st.sampled_from([0.2, 0.25, 0.5, 0.6, 0.75, 1.0])) for c in cids}
    utils = {}
    for i in range(n):
        row = {}
        for c in cids:
            u = draw(st.integers(0, max_u))
            if u:
                row[c] = u
        utils[f"v{i}"] = row
    k = draw(st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
    order = draw(st.permutations(cids))
    W, used = [], 0.0
    for c in order:
        if draw(st.booleans()) and used + sizes[c] <= k:
            W.append(c)
            used += sizes[c]
    return general(utils, sizes, k, W)
