"""Core auditing with arbitrary sizes and integer utilities.

The LP is the knapsack-cover strengthening of the core program, solved by
cutting planes with an exact dynamic-programming separation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core_approval import FractionalSolution
from .errors import CutLoopStall, DemandTooLarge, ModeMismatch
from .lp import GE, LE, LpBuilder, LpSolution, solve_lp
from .model import UNBOUNDED, AuditInstance, AuditReport, satisfied_core
from .rounding import (
    STREAM_LOGM,
    STREAM_LOGN,
    best_trial,
    check_seed,
    choose_interval,
    finish_trial,
    normalize_max,
    run_trials,
    trial_rng,
    witness_of,
)

#: LP values are mapped onto this integer grid before separation.
QUANT = 2**32
SEPARATION_TOL = 1e-7
MAX_DEMAND = 10**6


@dataclass(frozen=True, eq=False)
class ResidualInstance:
    """The instance seen by the rounding once the largest deviating candidate is fixed."""

    jstar: str
    kept: np.ndarray  # s_j <= s_jstar
    small: np.ndarray  # s_j < s_jstar / m, bought outright
    lp_candidates: np.ndarray  # kept and not small
    scaled_sizes: np.ndarray  # s_j / s_jstar on lp_candidates, 0 elsewhere
    demand: np.ndarray  # U_i(W) - U_i(small)
    forced: np.ndarray  # voters already satisfied by the small items
    offset: float  # total size of the small items


def preprocess(instance: AuditInstance, jstar: str) -> ResidualInstance:
    e = instance.election
    j = e.candidate_index[jstar]
    s = e.sizes
    top = s[j]
    kept = s <= top
    small = kept & (s < top / e.m)
    lp_cands = kept & ~small
    scaled = np.where(lp_cands, s / top, 0.0)
    U = e.utility_matrix
    demand = instance.base_utilities - U @ small.astype(U.dtype)
    return ResidualInstance(
        jstar, kept, small, lp_cands, scaled, demand, demand < 0, float(s[small].sum())
    )


@dataclass(frozen=True)
class KnapsackCoverCut:
    voter: str
    subset: tuple[str, ...]
    demand: int  # residual demand U_hat(S)
    coefficients: dict  # candidate id -> min(u_ij, U_hat(S)) over A_i minus S
    violation: float


def separate_voter(util, y, z, cap: int):
    """Most violated cut for one voter from float LP values.

    Returns ``(violation, subset_positions, D)`` with the violation in LP units,
    or ``None`` when the voter has no subset with residual demand.
    """
    if cap > MAX_DEMAND:
        raise DemandTooLarge(f"residual demand {cap} exceeds {MAX_DEMAND}")
    if cap < 1:
        return None
    yq = [int(round(v * QUANT)) for v in y]
    zq = int(round(z * QUANT))
    viol, mask, D = kernels.kc_separate(list(util), yq, zq, cap)
    subset = tuple(t for t in range(len(util)) if mask >> t & 1)
    return viol / QUANT, subset, D


def separate_kc(instance: AuditInstance, voter: str, x, y, z, *, candidates=None, demand=None
                ) -> KnapsackCoverCut | None:
    """Exact most-violated knapsack-cover cut for ``voter`` at ``(x, y, z)``, or ``None``.

    ``y`` is the voter's row (length ``m``), ``z`` its scalar value. ``x`` does not
    enter any cut; it is accepted for symmetry with the LP. ``candidates``
    restricts the allowed items and ``demand`` replaces ``U_i(W)``.
    """
    e = instance.election
    i = e.voter_index[voter]
    allowed = np.ones(e.m, dtype=bool) if candidates is None else np.asarray(candidates, dtype=bool)
    items = [j for j in e.approval_sets[i] if allowed[j]]
    U = e.utility_matrix
    base = instance.base_utilities[i] if demand is None else demand
    cap = int(base) + 1
    found = separate_voter([int(U[i, j]) for j in items], [float(y[j]) for j in items], float(z), cap)
    if found is None or found[0] <= SEPARATION_TOL:
        return None
    viol, subset, D = found
    in_s = {items[t] for t in subset}
    coeffs = {e.candidate_ids[j]: int(min(U[i, j], D)) for j in items if j not in in_s}
    return KnapsackCoverCut(voter, tuple(e.candidate_ids[j] for j in sorted(in_s)), D, coeffs, viol)


# ---------------------------------------------------------------------------
# cutting-plane LP

@dataclass(eq=False)
class KcLpResult:
    status: str
    solution: FractionalSolution | None
    lp: LpSolution | None
    rounds: int
    cuts: list = field(default_factory=list)  # (round, voter index, subset, D, violation)


def solve_kc_lp(instance: AuditInstance, candidates: np.ndarray | None = None, voters: np.ndarray | None = None,
                demand: np.ndarray | None = None, max_rounds: int | None = None, method: str = "auto") -> KcLpResult:
    """Knapsack-cover LP over the given candidates/voters, closed under exact separation."""
    e = instance.election
    n, m = e.n, e.m
    cand = np.ones(m, dtype=bool) if candidates is None else np.asarray(candidates, dtype=bool)
    act = np.ones(n, dtype=bool) if voters is None else np.asarray(voters, dtype=bool)
    dem = instance.base_utilities if demand is None else np.asarray(demand)
    U = e.utility_matrix
    sizes = e.sizes
    items = {i: [j for j in e.approval_sets[i] if cand[j]] for i in np.flatnonzero(act)}
    caps = {i: int(dem[i]) + 1 for i in items}
    for i, cap in caps.items():
        if cap > MAX_DEMAND:
            raise DemandTooLarge(f"voter {e.voter_ids[i]}: demand {cap} exceeds {MAX_DEMAND}")
    if max_rounds is None:
        max_rounds = 10 * n * m
    cuts: dict[int, list[tuple[int, ...]]] = {i: [()] for i in items}
    history: list = []
    rounds = 0
    while True:
        lp = LpBuilder("min")
        R = instance.R
        for j in np.flatnonzero(cand):
            lp.add_var(("x", e.candidate_ids[j]), cost=R * sizes[j])
        for i in items:
            lp.add_var(("z", e.voter_ids[i]))
        for i, js in items.items():
            for j in js:
                lp.add_var(("y", e.voter_ids[i], e.candidate_ids[j]))
        for i, js in items.items():
            v = e.voter_ids[i]
            for subset in cuts[i]:
                d = caps[i] - int(sum(U[i, j] for j in subset))
                row = {lp.var(("y", v, e.candidate_ids[j])): float(min(U[i, j], d)) for j in js if j not in subset}
                row[lp.var(("z", v))] = -float(d)
                lp.add_row(row, GE, 0.0, ("kc", v, tuple(e.candidate_ids[j] for j in subset)))
        for i, js in items.items():
            v = e.voter_ids[i]
            for j in js:
                c = e.candidate_ids[j]
                lp.add_row({lp.var(("y", v, c)): 1.0, lp.var(("x", c)): -1.0}, LE, 0.0, ("yx", v, c))
        for i, js in items.items():
            v = e.voter_ids[i]
            for j in js:
                c = e.candidate_ids[j]
                lp.add_row({lp.var(("y", v, c)): 1.0, lp.var(("z", v)): -1.0}, LE, 0.0, ("yz", v, c))
        if not items:
            return KcLpResult("infeasible", None, None, rounds, history)
        lp.add_row({lp.var(("z", e.voter_ids[i])): 1.0 for i in items}, GE, 1.0, "normalize")
        sol = solve_lp(lp.build(), method=method)
        if sol.status != "optimal":
            return KcLpResult(sol.status, None, sol, rounds, history)
        x = np.zeros(m)
        z = np.zeros(n)
        y = np.zeros((n, m))
        cidx, vidx = e.candidate_index, e.voter_index
        for label, val in zip(sol.problem.var_labels, sol.x):
            if label[0] == "x":
                x[cidx[label[1]]] = val
            elif label[0] == "z":
                z[vidx[label[1]]] = val
            else:
                y[vidx[label[1]], cidx[label[2]]] = val
        added = 0
        for i, js in items.items():
            found = separate_voter([int(U[i, j]) for j in js], [y[i, j] for j in js], z[i], caps[i])
            if found is None or found[0] <= SEPARATION_TOL:
                continue
            viol, pos, D = found
            subset = tuple(js[t] for t in pos)
            if subset in cuts[i]:
                continue
            cuts[i].append(subset)
            history.append((rounds, int(i), subset, D, viol))
            added += 1
        if not added:
            frac = FractionalSolution(x, z, y, float(sol.objective), sol, extra={"cut_rounds": rounds,
                                                                                  "cuts": len(history)})
            return KcLpResult("optimal", frac, sol, rounds, history)
        rounds += 1
        if rounds > max_rounds:
            raise CutLoopStall(f"knapsack-cover loop still adding cuts after {max_rounds} rounds")


def _require_integer(instance: AuditInstance):
    if instance.is_fractional:
        raise ModeMismatch("the knapsack-cover audit needs an integral committee")
    if not instance.election.has_integer_utilities:
        raise ModeMismatch("the knapsack-cover audit needs non-negative integer utilities")


def size_guesses(instance: AuditInstance) -> list[str]:
    """One representative candidate per distinct size, smallest size first."""
    seen: dict[float, str] = {}
    for c in instance.election.candidates:
        seen.setdefault(c.size, c.id)
    return [seen[s] for s in sorted(seen)]


def theta_p_general(instance: AuditInstance, epsilon: float = 0.01, *, method: str = "auto"):
    """Certified lower bound: min over size guesses of the restricted knapsack-cover LP.

    ``epsilon`` does not change the value (separation is exact); it is kept for
    interface compatibility with the integer Lindahl bracket.
    """
    _require_integer(instance)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    sizes = instance.election.sizes
    best_val, best = UNBOUNDED, None
    per_guess = {}
    for jstar in size_guesses(instance):
        top = sizes[instance.election.candidate_index[jstar]]
        res = solve_kc_lp(instance, candidates=sizes <= top, method=method)
        if res.status != "optimal":
            continue
        per_guess[jstar] = res.solution.objective
        if res.solution.objective < best_val:
            best_val, best = res.solution.objective, res.solution
    if best is not None:
        best.extra["guesses"] = per_guess
    return best_val, best


# ---------------------------------------------------------------------------
# roundings

def _residual_arrays(instance: AuditInstance, frac: FractionalSolution):
    r = frac.residual
    if r is None:
        return np.ones(instance.m, dtype=bool), np.zeros(instance.m, dtype=bool), instance.base_utilities
    return r.lp_candidates, r.small, r.demand


def round_general_log_m(instance: AuditInstance, frac: FractionalSolution, trials: int = 64, seed: int = 0,
                        jobs: int = 1) -> AuditReport:
    """Random-threshold rounding with demands truncated at what the sure picks leave uncovered."""
    _require_integer(instance)
    seed = check_seed(seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cand, small, demand = _residual_arrays(instance, frac)
    U = instance.election.utility_matrix
    m = instance.m
    z, x = normalize_max(frac.z, frac.x)
    xp = np.where(cand, np.maximum(1.0 / (2 * m * m), x), 0.0)
    A = U > 0

    def trial(t):
        rng = trial_rng(seed, STREAM_LOGM, t)
        alpha = rng.random()
        r = rng.random(m)
        zhat = z > alpha
        xhat = cand & (r * alpha < 2 * xp)
        sure = cand & (2 * xp > alpha)
        u_hat = np.maximum(0, demand + 1 - U @ sure)
        P = A & cand & ~sure
        u_hat_ij = np.minimum(U, u_hat[:, None]) * P
        accepted = zhat & (u_hat_ij @ xhat >= u_hat)
        tmask = xhat | small
        return finish_trial(instance, t, tmask, satisfied_core(instance, tmask), int(accepted.sum()))

    results = run_trials(trial, trials, jobs)
    return _general_report(instance, frac, results, "lp+round-general-logm", seed)


def round_general_log_n(instance: AuditInstance, frac: FractionalSolution, trials: int = 64, seed: int = 0,
                        jobs: int = 1) -> AuditReport:
    """Interval rounding; items with ``x >= L*/2`` are bought for sure, demands truncate on the rest."""
    _require_integer(instance)
    seed = check_seed(seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cand, small, demand = _residual_arrays(instance, frac)
    z, x = normalize_max(frac.z, frac.x)
    choice = choose_interval(z)
    if choice is None:
        return AuditReport(frac.objective, UNBOUNDED, None, "lp+round-general-logn", seed,
                           {"trials": trials, "status": "DEGENERATE_INTERVALS"})
    U = instance.election.utility_matrix
    m = instance.m
    A = U > 0
    xp = np.where(cand, np.minimum(1.0, 2 * x / choice.lower), 0.0)
    s1 = cand & (x >= choice.lower / 2)
    u_hat = np.maximum(0, demand + 1 - U @ s1)
    u_hat_ij = np.minimum(U, u_hat[:, None]) * (A & cand & ~s1)

    def trial(t):
        rng = trial_rng(seed, STREAM_LOGN, t)
        r = rng.random(m)
        xhat = cand & (r < xp)
        accepted = choice.members & (u_hat_ij @ xhat >= u_hat)
        tmask = xhat | small
        return finish_trial(instance, t, tmask, satisfied_core(instance, tmask), int(accepted.sum()))

    results = run_trials(trial, trials, jobs)
    return _general_report(instance, frac, results, "lp+round-general-logn", seed, {"interval": choice.level})


def _general_report(instance, frac, results, method, seed, extra=None):
    best = best_trial(results)
    diagnostics = {
        "trials": len(results),
        "successful_trials": sum(r is not None for r in results),
        "best_trial": None if best is None else best.trial,
    }
    if frac.residual is not None:
        diagnostics["guess"] = frac.residual.jstar
    diagnostics.update(extra or {})
    witness = witness_of(instance, best)
    upper = UNBOUNDED if witness is None else witness.ratio
    # on a preprocessed instance the LP value is not a certified bound, so
    # only the caller's certified value (or the trivial 0) is reported
    lower = frac.objective if frac.residual is None else frac.extra.get("certified", 0.0)
    return AuditReport(lower, upper, witness, method, seed, diagnostics)


def residual_solution(instance: AuditInstance, jstar: str, method: str = "auto") -> FractionalSolution:
    """KC-LP optimum on the preprocessed instance for guess ``jstar`` (zeros when nothing is left to solve)."""
    r = preprocess(instance, jstar)
    active = ~r.forced
    res = solve_kc_lp(instance, candidates=r.lp_candidates, voters=active, demand=np.maximum(r.demand, 0),
                      method=method)
    if res.status == "optimal":
        s = res.solution
        return FractionalSolution(s.x, s.z, s.y, s.objective, s.lp, r, dict(s.extra))
    n, m = instance.n, instance.m
    return FractionalSolution(np.zeros(m), np.zeros(n), np.zeros((n, m)), math.inf, None, r)


def audit_core_general(instance: AuditInstance, trials: int = 64, seed: int = 0, strategy: str = "both",
                       jobs: int = 1, epsilon: float = 0.01, method: str = "auto") -> AuditReport:
    """``[KC-LP bound, best witness]`` for the core with general sizes and utilities."""
    if strategy not in ("logm", "logn", "both"):
        raise ValueError("strategy must be logm, logn or both")
    seed = check_seed(seed)
    lower, _ = theta_p_general(instance, epsilon, method=method)
    name = f"kclp+round-{strategy}"
    if math.isinf(lower):
        return AuditReport(UNBOUNDED, UNBOUNDED, None, name, seed, {"trials": trials})
    reports = []
    for jstar in size_guesses(instance):
        frac = residual_solution(instance, jstar, method=method)
        frac.extra["certified"] = lower
        if strategy in ("logm", "both"):
            reports.append(round_general_log_m(instance, frac, trials, seed, jobs))
        if strategy in ("logn", "both"):
            reports.append(round_general_log_n(instance, frac, trials, seed, jobs))
    best = None
    for rep in reports:
        if best is None or rep.theta_upper < best.theta_upper:
            best = rep
    diagnostics = {"theta_p_general": lower, "guesses": len(size_guesses(instance)), "epsilon": epsilon}
    if best is not None and best.witness is not None:
        diagnostics["best"] = dict(best.diagnostics, method=best.method)
        return AuditReport(lower, best.theta_upper, best.witness, name, seed, diagnostics)
    return AuditReport(lower, UNBOUNDED, None, name, seed, diagnostics)
