"""Core auditing for approval elections: LP lower bound and two randomized roundings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ModeMismatch
from .lp import GE, LE, LpBuilder, LpProblem, LpSolution, solve_lp
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

STRATEGIES = ("logm", "logn", "both")


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    """LP optimum: ``x`` over candidates, ``z`` over voters, ``y`` as an ``(n, m)`` array."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    objective: float
    lp: LpSolution | None = None
    residual: Any = None  # set by the general path when solved on a preprocessed instance
    extra: dict = field(default_factory=dict)

    def core_violations(self, instance: AuditInstance, tol: float = 1e-8) -> list[str]:
        """Feasibility of ``(x, y, z)`` for the approval core LP."""
        out = []
        A = instance.election.utility_matrix > 0
        base = instance.base_utilities
        cover = (self.y * A).sum(axis=1)
        for i in np.flatnonzero(cover < self.z * (base + 1) - tol):
            out.append(f"voter {i}: cover constraint")
        if np.any(self.y > np.minimum(self.x[None, :], self.z[:, None]) + tol):
            out.append("y exceeds min(x, z)")
        if self.z.sum() < 1 - tol:
            out.append("sum z < 1")
        return out


def _require_approval(instance: AuditInstance):
    if not instance.election.is_approval or instance.is_fractional:
        raise ModeMismatch("this audit needs an approval election with an integral committee")


def build_core_lp(instance: AuditInstance) -> LpProblem:
    """``min R sum x`` over ``x_j, z_i, y_ij (j in A_i)`` with the cover, linking and normalization rows."""
    _require_approval(instance)
    e = instance.election
    lp = LpBuilder("min")
    R = instance.R
    for c in e.candidate_ids:
        lp.add_var(("x", c), cost=R)
    for v in e.voter_ids:
        lp.add_var(("z", v))
    for i, v in enumerate(e.voter_ids):
        for j in e.approval_sets[i]:
            lp.add_var(("y", v, e.candidate_ids[j]))
    base = instance.base_utilities
    for i, v in enumerate(e.voter_ids):
        row = {lp.var(("y", v, e.candidate_ids[j])): 1.0 for j in e.approval_sets[i]}
        row[lp.var(("z", v))] = -(float(base[i]) + 1.0)
        lp.add_row(row, GE, 0.0, ("cover", v))
    for i, v in enumerate(e.voter_ids):
        for j in e.approval_sets[i]:
            c = e.candidate_ids[j]
            lp.add_row({lp.var(("y", v, c)): 1.0, lp.var(("x", c)): -1.0}, LE, 0.0, ("yx", v, c))
    for i, v in enumerate(e.voter_ids):
        for j in e.approval_sets[i]:
            c = e.candidate_ids[j]
            lp.add_row({lp.var(("y", v, c)): 1.0, lp.var(("z", v)): -1.0}, LE, 0.0, ("yz", v, c))
    lp.add_row({lp.var(("z", v)): 1.0 for v in e.voter_ids}, GE, 1.0, "normalize")
    return lp.build()


def can_improve(instance: AuditInstance) -> np.ndarray:
    """Voters for whom some committee gives strictly more utility than ``W``."""
    U = instance.election.utility_matrix
    return U.sum(axis=1) >= instance.base_utilities + 1


def unpack(instance: AuditInstance, sol: LpSolution) -> FractionalSolution:
    """Read ``x, z, y`` out of a solved core-style LP by variable label."""
    e = instance.election
    x = np.zeros(e.m)
    z = np.zeros(e.n)
    y = np.zeros((e.n, e.m))
    cidx, vidx = e.candidate_index, e.voter_index
    for label, val in zip(sol.problem.var_labels, np.asarray(sol.x, dtype=float)):
        if label[0] == "x":
            x[cidx[label[1]]] = val
        elif label[0] == "z":
            z[vidx[label[1]]] = val
        elif label[0] == "y":
            y[vidx[label[1]], cidx[label[2]]] = val
    return FractionalSolution(x, z, y, float(sol.objective), sol)


def theta_p(instance: AuditInstance, *, method: str = "auto", exact: bool = False):
    """LP lower bound on the core ratio. Returns ``(value, FractionalSolution)``, or ``(UNBOUNDED, None)``."""
    _require_approval(instance)
    if not can_improve(instance).any():
        return UNBOUNDED, None
    sol = solve_lp(build_core_lp(instance), method=method, exact=exact)
    if sol.status != "optimal":
        return UNBOUNDED, None
    frac = unpack(instance, sol)
    if exact:
        frac.extra["exact_objective"] = sol.objective
    return frac.objective, frac


# ---------------------------------------------------------------------------
# roundings

def _unbounded_report(method, seed, diagnostics):
    return AuditReport(UNBOUNDED, UNBOUNDED, None, method, seed, diagnostics)


def _report(instance, frac, results, method, seed, extra=None):
    best = best_trial(results)
    diagnostics = {
        "trials": len(results),
        "successful_trials": sum(r is not None for r in results),
        "best_trial": None if best is None else best.trial,
    }
    if frac.lp is not None:
        diagnostics["lp_iterations"] = frac.lp.iterations
    diagnostics.update(extra or {})
    witness = witness_of(instance, best)
    upper = UNBOUNDED if witness is None else witness.ratio
    return AuditReport(frac.objective, upper, witness, method, seed, diagnostics)


def round_log_m(instance: AuditInstance, frac: FractionalSolution, trials: int = 64, seed: int = 0,
                jobs: int = 1) -> AuditReport:
    """Threshold ``z`` at a random ``alpha`` and round ``x`` with boosted probabilities ``2x'/alpha``."""
    _require_approval(instance)
    seed = check_seed(seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    U = instance.election.utility_matrix
    base = instance.base_utilities
    m = instance.m
    z, x = normalize_max(frac.z, frac.x)
    xp = np.maximum(1.0 / (2 * m * m), x)

    def trial(t):
        rng = trial_rng(seed, STREAM_LOGM, t)
        alpha = rng.random()
        r = rng.random(m)
        zhat = z > alpha
        xhat = r * alpha < 2 * xp
        accepted = zhat & (U @ xhat >= base + 1)
        return finish_trial(instance, t, xhat, satisfied_core(instance, xhat), int(accepted.sum()))

    results = run_trials(trial, trials, jobs)
    return _report(instance, frac, results, "lp+round-logm", seed)


def round_log_n(instance: AuditInstance, frac: FractionalSolution, trials: int = 64, seed: int = 0,
                jobs: int = 1) -> AuditReport:
    """Bucket voters by ``z``, keep the heaviest bucket, round ``x' = min(1, 2x/L*)``."""
    _require_approval(instance)
    seed = check_seed(seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    z, x = normalize_max(frac.z, frac.x)
    choice = choose_interval(z)
    if choice is None:
        return AuditReport(frac.objective, UNBOUNDED, None, "lp+round-logn", seed,
                           {"trials": trials, "status": "DEGENERATE_INTERVALS"})
    U = instance.election.utility_matrix
    base = instance.base_utilities
    m = instance.m
    xp = np.minimum(1.0, 2 * x / choice.lower)

    def trial(t):
        rng = trial_rng(seed, STREAM_LOGN, t)
        r = rng.random(m)
        xhat = r < xp
        accepted = choice.members & (U @ xhat >= base + 1)
        return finish_trial(instance, t, xhat, satisfied_core(instance, xhat), int(accepted.sum()))

    results = run_trials(trial, trials, jobs)
    return _report(instance, frac, results, "lp+round-logn", seed, {"interval": choice.level})


def merge_reports(lower: float, reports: list[AuditReport], method: str, seed, extra=None) -> AuditReport:
    """Bracket with the tightest upper bound; earlier reports win ties."""
    best = None
    for rep in reports:
        if best is None or rep.theta_upper < best.theta_upper:
            best = rep
    diagnostics = {}
    for rep in reports:
        diagnostics[rep.method] = dict(rep.diagnostics)
    diagnostics.update(extra or {})
    upper = best.theta_upper if best else UNBOUNDED
    return AuditReport(lower, upper, best.witness if best else None, method, seed, diagnostics)


def audit_core_approval(instance: AuditInstance, trials: int = 64, seed: int = 0, strategy: str = "both",
                        jobs: int = 1, method: str = "auto") -> AuditReport:
    """``[theta_p, best witness ratio]`` for the core of an approval election."""
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    seed = check_seed(seed)
    value, frac = theta_p(instance, method=method)
    name = f"lp+round-{strategy}"
    if frac is None:
        return _unbounded_report(name, seed, {"trials": trials})
    reports = []
    if strategy in ("logm", "both"):
        reports.append(round_log_m(instance, frac, trials, seed, jobs))
    if strategy in ("logn", "both"):
        reports.append(round_log_n(instance, frac, trials, seed, jobs))
    return merge_reports(value, reports, name, seed, {"theta_p": value})
