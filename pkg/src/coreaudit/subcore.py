"""Sub-core auditing: deviators keep every approved member of ``W`` and add at least one more."""

from __future__ import annotations

import numpy as np

from .core_approval import FractionalSolution, merge_reports
from .errors import ModeMismatch
from .lp import GE, LpBuilder, LpProblem, solve_lp
from .model import UNBOUNDED, AuditInstance, AuditReport, satisfied_subcore
from .rounding import (
    STREAM_SUB_LOGM,
    STREAM_SUB_LOGN,
    best_trial,
    check_seed,
    choose_interval,
    finish_trial,
    normalize_max,
    run_trials,
    trial_rng,
    witness_of,
)


def _require_approval(instance: AuditInstance):
    if not instance.election.is_approval or instance.is_fractional:
        raise ModeMismatch("sub-core audits need an approval election with an integral committee")


def build_subcore_lp(instance: AuditInstance) -> LpProblem:
    """``min R sum x`` s.t. ``x_j >= z_i`` on ``A_i ∩ W``, ``sum_{A_i \\ W} x_j >= z_i``, ``sum z >= 1``."""
    _require_approval(instance)
    e = instance.election
    w = instance.committee_mask
    lp = LpBuilder("min")
    for c in e.candidate_ids:
        lp.add_var(("x", c), cost=instance.R)
    for v in e.voter_ids:
        lp.add_var(("z", v))
    for i, v in enumerate(e.voter_ids):
        zi = lp.var(("z", v))
        A = e.approval_sets[i]
        for j in A:
            if w[j]:
                c = e.candidate_ids[j]
                lp.add_row({lp.var(("x", c)): 1.0, zi: -1.0}, GE, 0.0, ("keep", v, c))
        row = {lp.var(("x", e.candidate_ids[j])): 1.0 for j in A if not w[j]}
        row[zi] = -1.0
        lp.add_row(row, GE, 0.0, ("gain", v))
    lp.add_row({lp.var(("z", v)): 1.0 for v in e.voter_ids}, GE, 1.0, "normalize")
    return lp.build()


def theta_p_subcore(instance: AuditInstance, *, method: str = "auto", exact: bool = False):
    """LP lower bound on the sub-core ratio; ``(UNBOUNDED, None)`` when nobody can gain a new candidate."""
    _require_approval(instance)
    e = instance.election
    w = instance.committee_mask
    if not any((~w[A]).any() for A in e.approval_sets):
        return UNBOUNDED, None
    sol = solve_lp(build_subcore_lp(instance), method=method, exact=exact)
    if sol.status != "optimal":
        return UNBOUNDED, None
    x = np.zeros(e.m)
    z = np.zeros(e.n)
    for label, val in zip(sol.problem.var_labels, np.asarray(sol.x, dtype=float)):
        if label[0] == "x":
            x[e.candidate_index[label[1]]] = val
        else:
            z[e.voter_index[label[1]]] = val
    frac = FractionalSolution(x, z, np.zeros((e.n, e.m)), float(sol.objective), sol)
    return frac.objective, frac


def _report(instance, frac, results, method, seed, extra=None):
    best = best_trial(results)
    diagnostics = {
        "trials": len(results),
        "successful_trials": sum(r is not None for r in results),
        "best_trial": None if best is None else best.trial,
    }
    diagnostics.update(extra or {})
    witness = witness_of(instance, best, "sub-core")
    upper = UNBOUNDED if witness is None else witness.ratio
    return AuditReport(frac.objective, upper, witness, method, seed, diagnostics)


def round_subcore_log_m(instance: AuditInstance, frac: FractionalSolution, trials: int = 64, seed: int = 0,
                        jobs: int = 1) -> AuditReport:
    """Threshold ``z`` and the ``W`` part of ``x`` at ``alpha``; pick new candidates w.p. ``min(1, x'/alpha)``."""
    _require_approval(instance)
    seed = check_seed(seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    m = instance.m
    w = instance.committee_mask
    A = instance.election.utility_matrix > 0
    z, x = normalize_max(frac.z, frac.x)
    xp = np.maximum(x, 1.0 / (m * m))

    def trial(t):
        rng = trial_rng(seed, STREAM_SUB_LOGM, t)
        alpha = rng.random()
        r = rng.random(m)
        zhat = z >= alpha
        xhat = np.where(w, x >= alpha, r * alpha < xp)
        accepted = zhat & (A & xhat & ~w).any(axis=1) & ~(A & w & ~xhat).any(axis=1)
        return finish_trial(instance, t, xhat, satisfied_subcore(instance, xhat), int(accepted.sum()))

    results = run_trials(trial, trials, jobs)
    return _report(instance, frac, results, "lp+round-subcore-logm", seed)


def round_subcore_log_n(instance: AuditInstance, frac: FractionalSolution, trials: int = 64, seed: int = 0,
                        jobs: int = 1) -> AuditReport:
    """Interval variant: keep ``W`` members with ``x >= L*``, round the rest with ``min(1, 2x/L*)``."""
    _require_approval(instance)
    seed = check_seed(seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    z, x = normalize_max(frac.z, frac.x)
    choice = choose_interval(z)
    if choice is None:
        return AuditReport(frac.objective, UNBOUNDED, None, "lp+round-subcore-logn", seed,
                           {"trials": trials, "status": "DEGENERATE_INTERVALS"})
    m = instance.m
    w = instance.committee_mask
    A = instance.election.utility_matrix > 0
    keep = w & (x >= choice.lower)
    xp = np.minimum(1.0, 2 * x / choice.lower)

    def trial(t):
        rng = trial_rng(seed, STREAM_SUB_LOGN, t)
        r = rng.random(m)
        xhat = np.where(w, keep, r < xp)
        accepted = choice.members & (A & xhat & ~w).any(axis=1) & ~(A & w & ~xhat).any(axis=1)
        return finish_trial(instance, t, xhat, satisfied_subcore(instance, xhat), int(accepted.sum()))

    results = run_trials(trial, trials, jobs)
    return _report(instance, frac, results, "lp+round-subcore-logn", seed, {"interval": choice.level})


def audit_subcore(instance: AuditInstance, trials: int = 64, seed: int = 0, strategy: str = "both",
                  jobs: int = 1, method: str = "auto") -> AuditReport:
    if strategy not in ("logm", "logn", "both"):
        raise ValueError("strategy must be logm, logn or both")
    seed = check_seed(seed)
    value, frac = theta_p_subcore(instance, method=method)
    name = f"lp+round-subcore-{strategy}"
    if frac is None:
        return AuditReport(UNBOUNDED, UNBOUNDED, None, name, seed, {"trials": trials})
    reports = []
    if strategy in ("logm", "both"):
        reports.append(round_subcore_log_m(instance, frac, trials, seed, jobs))
    if strategy in ("logn", "both"):
        reports.append(round_subcore_log_n(instance, frac, trials, seed, jobs))
    return merge_reports(value, reports, name, seed, {"theta_p_subcore": value})
