"""Machinery shared by every randomized rounding: seeding, trial execution, best-of selection."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import AuditInstance, DeviationWitness, witness_from_masks

# One random stream per rounding scheme. The general-utility roundings reuse
# the approval streams on purpose: on an approval instance they draw the same
# numbers and so return the same witness.
STREAM_LOGM = 1
STREAM_LOGN = 2
STREAM_SUB_LOGM = 3
STREAM_SUB_LOGN = 4

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def trial_rng(seed: int, stream: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, a pure function of (seed, stream, trial)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, trial)))


@dataclass(frozen=True)
class TrialResult:
    trial: int
    tmask: np.ndarray
    smask: np.ndarray
    ratio: float
    accepted: int


def run_trials(fn: Callable[[int], TrialResult | None], trials: int, jobs: int = 1) -> list[TrialResult | None]:
    """Run ``fn(0..trials-1)``; the result list is in trial order whatever ``jobs`` is."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if jobs <= 1 or trials == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(trials)))


def best_trial(results: list[TrialResult | None]) -> TrialResult | None:
    """Smallest ratio; ties go to the lowest trial index."""
    best = None
    for r in results:
        if r is not None and (best is None or r.ratio < best.ratio):
            best = r
    return best


def finish_trial(instance: AuditInstance, trial: int, tmask: np.ndarray, sat: np.ndarray,
                 accepted: int) -> TrialResult | None:
    """Turn a rounded committee into a trial result.

    The coalition is every voter the rounded committee satisfies. Candidates
    nobody in the coalition approves are then dropped, which keeps every
    member satisfied and can only lower the ratio.
    """
    if not sat.any():
        return None
    approves = instance.election.utility_matrix > 0
    tmask = tmask & approves[sat].any(axis=0)
    size = float(instance.election.sizes[tmask].sum())
    if instance.election.is_approval:
        size = float(int(tmask.sum()))
    return TrialResult(trial, tmask, sat, instance.deviation_ratio(size, int(sat.sum())), accepted)


def witness_of(instance: AuditInstance, result: TrialResult | None, mode: str = "core") -> DeviationWitness | None:
    if result is None:
        return None
    return witness_from_masks(instance, result.tmask, result.smask, mode)


def normalize_max(z: np.ndarray, *arrays: np.ndarray) -> tuple[np.ndarray, ...]:
    """Scale so that ``max z = 1``; the LPs are homogeneous so this stays feasible."""
    top = float(np.max(z)) if z.size else 0.0
    if top <= 0:
        return (z,) + arrays
    return (z / top,) + tuple(a / top for a in arrays)


@dataclass(frozen=True)
class IntervalChoice:
    level: int
    lower: float  # L*, the open lower end of the chosen interval
    members: np.ndarray  # voters whose normalized z lies in the interval


def choose_interval(z_normalized: np.ndarray) -> IntervalChoice | None:
    """Geometric bucketing of ``z`` (max normalized to 1) for the O(log n) roundings.

    ``I_0 = [0, 1/n]`` is discarded, ``I_l = (2^(l-1)/n, 2^l/n]`` for
    ``1 <= l <= floor(log2 n)``, and a last interval ``(2^w/n, 1]`` catches the
    top when ``n`` is not a power of two. Returns the interval with the largest
    z-mass (lowest level on ties), or ``None`` when every voter sits in ``I_0``.
    """
    n = z_normalized.size
    if n == 0:
        return None
    omega = int(math.floor(math.log2(n)))
    thresholds = np.array([2.0**lv / n for lv in range(omega + 1)])
    levels = np.searchsorted(thresholds, z_normalized, side="left")
    best_level, best_mass = 0, 0.0
    for lv in range(1, omega + 2):
        mass = float(z_normalized[levels == lv].sum())
        if mass > best_mass:
            best_level, best_mass = lv, mass
    if best_level == 0:
        return None
    return IntervalChoice(best_level, 2.0 ** (best_level - 1) / n, levels == best_level)
