"""Domain types shared by every auditor: elections, audited committees, witnesses, reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Mapping, NamedTuple

import numpy as np

#: Report value for "no feasible deviation exists".
UNBOUNDED = math.inf

BUDGET_TOL = 1e-9


def is_unbounded(value: float) -> bool:
    return math.isinf(value)


@dataclass(frozen=True)
class Candidate:
    id: str
    size: float = 1.0


@dataclass(frozen=True)
class Voter:
    id: str
    utilities: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "utilities", MappingProxyType(dict(self.utilities)))

    @classmethod
    def approving(cls, id: str, approvals) -> "Voter":
        return cls(id, {c: 1 for c in approvals})

    def __eq__(self, other):
        if not isinstance(other, Voter):
            return NotImplemented
        return self.id == other.id and dict(self.utilities) == dict(other.utilities)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Election:
    """Candidates with sizes, voters with additive utilities, and a budget ``k``.

    Order of ``candidates`` and ``voters`` is significant: every algorithm
    iterates in this order, which is what keeps seeded runs reproducible.
    ``approval_format`` only controls how the election is written back out;
    whether it *is* an approval election is decided by the data
    (:attr:`is_approval`).
    """

    candidates: tuple[Candidate, ...]
    voters: tuple[Voter, ...]
    budget: float
    approval_format: bool = False

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "voters", tuple(self.voters))

    def __eq__(self, other):
        if not isinstance(other, Election):
            return NotImplemented
        return (
            self.candidates == other.candidates
            and self.voters == other.voters
            and self.budget == other.budget
            and self.approval_format == other.approval_format
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.voters)

    @property
    def m(self) -> int:
        return len(self.candidates)

    @cached_property
    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.candidates)

    @cached_property
    def voter_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.voters)

    @cached_property
    def candidate_index(self) -> dict[str, int]:
        return {c: j for j, c in enumerate(self.candidate_ids)}

    @cached_property
    def voter_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.voter_ids)}

    @cached_property
    def sizes(self) -> np.ndarray:
        arr = np.array([c.size for c in self.candidates], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def utility_matrix(self) -> np.ndarray:
        """``(n, m)`` array of ``u_ij``; integer dtype when all utilities are integral."""
        U = np.zeros((self.n, self.m), dtype=float)
        idx = self.candidate_index
        for i, v in enumerate(self.voters):
            for c, u in v.utilities.items():
                if c in idx:
                    U[i, idx[c]] = u
        if np.all(U == np.round(U)) and np.all(np.abs(U) < 2**53):
            U = U.astype(np.int64)
        U.flags.writeable = False
        return U

    @cached_property
    def approval_sets(self) -> tuple[np.ndarray, ...]:
        """``A_i`` as sorted index arrays."""
        return tuple(np.flatnonzero(row > 0) for row in self.utility_matrix)

    @cached_property
    def is_approval(self) -> bool:
        U = self.utility_matrix
        return bool(np.all(self.sizes == 1.0) and np.all((U == 0) | (U == 1)))

    @cached_property
    def has_integer_utilities(self) -> bool:
        return self.utility_matrix.dtype.kind == "i" and bool(np.all(self.utility_matrix >= 0))


@dataclass(frozen=True, eq=False)
class AuditInstance:
    """An election plus the committee ``W`` under audit.

    ``committee`` is a frozenset of candidate ids, or a mapping id -> value in
    [0, 1] for fractional audits.
    """

    election: Election
    committee: frozenset[str] | Mapping[str, float] = frozenset()

    def __post_init__(self):
        c = self.committee
        if isinstance(c, Mapping):
            object.__setattr__(self, "committee", MappingProxyType(dict(c)))
        else:
            object.__setattr__(self, "committee", frozenset(c))

    def __eq__(self, other):
        if not isinstance(other, AuditInstance):
            return NotImplemented
        a, b = self.committee, other.committee
        if self.is_fractional != other.is_fractional:
            return False
        if self.is_fractional:
            a, b = dict(a), dict(b)
        return self.election == other.election and a == b

    __hash__ = None

    @property
    def is_fractional(self) -> bool:
        return isinstance(self.committee, Mapping)

    @property
    def n(self) -> int:
        return self.election.n

    @property
    def m(self) -> int:
        return self.election.m

    @property
    def R(self) -> float:
        """Price of one budget unit in entitlement terms, ``n / k``."""
        return self.election.n / self.election.budget

    @cached_property
    def committee_vector(self) -> np.ndarray:
        w = np.zeros(self.m)
        idx = self.election.candidate_index
        if self.is_fractional:
            for c, val in self.committee.items():
                if c in idx:
                    w[idx[c]] = val
        else:
            for c in self.committee:
                if c in idx:
                    w[idx[c]] = 1.0
        w.flags.writeable = False
        return w

    @cached_property
    def committee_mask(self) -> np.ndarray:
        mask = self.committee_vector > 0
        mask.flags.writeable = False
        return mask

    @cached_property
    def base_utilities(self) -> np.ndarray:
        """``u_i = U_i(W)`` for every voter."""
        U = self.election.utility_matrix
        w = self.committee_vector
        if not self.is_fractional and U.dtype.kind == "i":
            out = U @ w.astype(np.int64)
        else:
            out = U @ w
        out.flags.writeable = False
        return out

    def deviation_ratio(self, size: float, count: int) -> float:
        """``R * size / count``, evaluated as ``(n*size)/(k*count)`` so equal ratios compare equal."""
        if count <= 0:
            return UNBOUNDED
        return (self.n * size) / (self.election.budget * count)


def utility(election: Election, voter_id: str, committee) -> float:
    """``U_i(T) = sum_j u_ij x_j``; ``committee`` is a set of ids or an id -> fraction map."""
    try:
        voter = election.voters[election.voter_index[voter_id]]
    except KeyError:
        raise KeyError(f"unknown voter {voter_id!r}") from None
    if isinstance(committee, Mapping):
        items = committee.items()
    else:
        items = ((c, 1) for c in committee)
    total = 0
    for c, frac in items:
        if c not in election.candidate_index:
            raise KeyError(f"unknown candidate {c!r}")
        total += voter.utilities.get(c, 0) * frac
    return total


# ---------------------------------------------------------------------------
# validation

class Violation(NamedTuple):
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"{v.code}: {v.message}" for v in self.violations)


def validate(election: Election, instance: AuditInstance | None = None) -> ValidationReport:
    """Check every invariant of the election and (optionally) the audited committee.

    Never raises; findings come back as :class:`Violation` records.
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for c in election.candidates:
        if c.id in seen:
            out.append(Violation("DUPLICATE_ID", f"candidate id {c.id!r} repeated"))
        seen.add(c.id)
        if not (isinstance(c.size, (int, float)) and math.isfinite(c.size)) or c.size <= 0:
            out.append(Violation("NEGATIVE_SIZE", f"candidate {c.id!r} has non-positive size {c.size!r}"))
    cand_ids = seen
    seen = set()
    for v in election.voters:
        if v.id in seen:
            out.append(Violation("DUPLICATE_ID", f"voter id {v.id!r} repeated"))
        seen.add(v.id)
        for c, u in v.utilities.items():
            if c not in cand_ids:
                out.append(Violation("UNKNOWN_CANDIDATE", f"voter {v.id!r} rates unknown candidate {c!r}"))
            if isinstance(u, bool) or not isinstance(u, (int, float)) or not math.isfinite(u):
                out.append(Violation("NON_INTEGER_UTILITY", f"voter {v.id!r}: utility {u!r} for {c!r}"))
            elif u < 0:
                out.append(Violation("NEGATIVE_UTILITY", f"voter {v.id!r}: utility {u!r} for {c!r}"))
            elif u != int(u):
                out.append(Violation("NON_INTEGER_UTILITY", f"voter {v.id!r}: utility {u!r} for {c!r}"))
    k = election.budget
    if not isinstance(k, (int, float)) or not math.isfinite(k) or k <= 0:
        out.append(Violation("NON_POSITIVE_BUDGET", f"budget must be positive, got {k!r}"))
    if election.approval_format:
        for c in election.candidates:
            if c.size != 1:
                out.append(Violation("NON_UNIT_SIZE", f"approval election: candidate {c.id!r} has size {c.size!r}"))

    if instance is not None:
        sizes = {c.id: c.size for c in election.candidates}
        total = 0.0
        if instance.is_fractional:
            for c, val in instance.committee.items():
                if c not in sizes:
                    out.append(Violation("UNKNOWN_CANDIDATE", f"committee references unknown candidate {c!r}"))
                    continue
                if not (0.0 <= val <= 1.0):
                    out.append(Violation("FRACTION_OUT_OF_RANGE", f"committee value {val!r} for {c!r}"))
                total += sizes[c] * val
        else:
            for c in sorted(instance.committee):
                if c not in sizes:
                    out.append(Violation("UNKNOWN_CANDIDATE", f"committee references unknown candidate {c!r}"))
                    continue
                total += sizes[c]
        if isinstance(k, (int, float)) and total > k + BUDGET_TOL * max(1.0, abs(k)):
            out.append(Violation("BUDGET_EXCEEDED", f"committee size {total:g} exceeds budget {k:g}"))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# deviations and reports

MODES = ("core", "sub-core", "fractional-core")


@dataclass(frozen=True)
class DeviationWitness:
    """A coalition ``S`` and the committee ``T`` it could afford at scaled entitlement ``ratio``."""

    voters: tuple[str, ...]
    committee: tuple[str, ...] | Mapping[str, float]
    ratio: float
    mode: str = "core"
    eta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "voters", tuple(self.voters))
        if isinstance(self.committee, Mapping):
            object.__setattr__(self, "committee", MappingProxyType(dict(self.committee)))
        else:
            object.__setattr__(self, "committee", tuple(self.committee))

    @property
    def is_fractional(self) -> bool:
        return isinstance(self.committee, Mapping)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "voters": list(self.voters),
            "committee": dict(self.committee) if self.is_fractional else list(self.committee),
            "ratio": self.ratio,
            "mode": self.mode,
        }
        if self.eta is not None:
            out["eta"] = self.eta
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "DeviationWitness":
        committee = data["committee"]
        if not isinstance(committee, Mapping):
            committee = tuple(committee)
        return cls(
            voters=tuple(data["voters"]),
            committee=committee,
            ratio=float(data["ratio"]),
            mode=data.get("mode", "core"),
            eta=data.get("eta"),
        )


def witness_from_masks(instance: AuditInstance, tmask, smask, mode: str = "core") -> DeviationWitness:
    e = instance.election
    tmask = np.asarray(tmask, dtype=bool)
    smask = np.asarray(smask, dtype=bool)
    size = float(e.sizes[tmask].sum()) if e.sizes.size else 0.0
    if e.is_approval:
        size = float(int(tmask.sum()))
    return DeviationWitness(
        voters=tuple(e.voter_ids[i] for i in np.flatnonzero(smask)),
        committee=tuple(e.candidate_ids[j] for j in np.flatnonzero(tmask)),
        ratio=instance.deviation_ratio(size, int(smask.sum())),
        mode=mode,
    )


def satisfied_core(instance: AuditInstance, tvec) -> np.ndarray:
    """Voters with ``U_i(T) >= U_i(W) + 1`` (``tvec`` may be fractional)."""
    U = instance.election.utility_matrix
    return U @ np.asarray(tvec, dtype=float) >= instance.base_utilities + 1 - 1e-9


def satisfied_subcore(instance: AuditInstance, tmask) -> np.ndarray:
    """Voters with ``A_i ∩ W ⊊ A_i ∩ T``."""
    A = instance.election.utility_matrix > 0
    t = np.asarray(tmask, dtype=bool)
    w = instance.committee_mask
    keeps_all = ~np.any(A & w & ~t, axis=1)
    gains = np.any(A & t & ~w, axis=1)
    return keeps_all & gains


def check_witness(instance: AuditInstance, witness: DeviationWitness, rtol: float = 1e-9) -> list[Violation]:
    """Independently re-check every :class:`DeviationWitness` invariant."""
    e = instance.election
    out: list[Violation] = []
    if witness.mode not in MODES:
        return [Violation("UNKNOWN_MODE", f"mode {witness.mode!r}")]
    if not witness.voters:
        out.append(Violation("EMPTY_COALITION", "witness has no voters"))
    unknown_v = [v for v in witness.voters if v not in e.voter_index]
    if unknown_v:
        out.append(Violation("UNKNOWN_VOTER", f"unknown voters {unknown_v}"))
    if len(set(witness.voters)) != len(witness.voters):
        out.append(Violation("DUPLICATE_ID", "voter listed twice in witness"))
    items = witness.committee.items() if witness.is_fractional else ((c, 1.0) for c in witness.committee)
    tvec = np.zeros(e.m)
    for c, val in items:
        if c not in e.candidate_index:
            out.append(Violation("UNKNOWN_CANDIDATE", f"witness committee has unknown candidate {c!r}"))
            continue
        if not (-1e-12 <= val <= 1 + 1e-12):
            out.append(Violation("FRACTION_OUT_OF_RANGE", f"witness value {val!r} for {c!r}"))
        tvec[e.candidate_index[c]] = val
    if out:
        return out
    rows = np.array([e.voter_index[v] for v in witness.voters], dtype=int)
    if witness.mode == "core":
        if witness.is_fractional:
            out.append(Violation("MODE_MISMATCH", "core witness must be integral"))
        else:
            ok = satisfied_core(instance, tvec)
            bad = [witness.voters[t] for t, i in enumerate(rows) if not ok[i]]
            if bad:
                out.append(Violation("NOT_IMPROVING", f"voters without strict improvement: {bad}"))
    elif witness.mode == "sub-core":
        if witness.is_fractional or instance.is_fractional:
            out.append(Violation("MODE_MISMATCH", "sub-core witness needs an integral committee"))
        else:
            ok = satisfied_subcore(instance, tvec > 0)
            bad = [witness.voters[t] for t, i in enumerate(rows) if not ok[i]]
            if bad:
                out.append(Violation("NOT_IMPROVING", f"voters without a proper superset: {bad}"))
    else:
        eta = witness.eta if witness.eta is not None else 1.0
        gain = e.utility_matrix @ tvec - instance.base_utilities
        bad = [witness.voters[t] for t, i in enumerate(rows) if gain[i] < eta - 1e-9]
        if bad:
            out.append(Violation("NOT_IMPROVING", f"voters gaining less than eta={eta:g}: {bad}"))
    if witness.voters:
        size = float(e.sizes @ tvec)
        expected = instance.deviation_ratio(size, len(witness.voters))
        if not math.isclose(witness.ratio, expected, rel_tol=rtol, abs_tol=1e-12):
            out.append(Violation("RATIO_MISMATCH", f"ratio {witness.ratio!r} but recomputed {expected!r}"))
    return out


@dataclass(frozen=True)
class AuditReport:
    """Bracket ``[theta_lower, theta_upper]`` on an audited ratio, with its evidence.

    ``inf`` stands for "unbounded" (serialized as the string ``"unbounded"``).
    """

    theta_lower: float
    theta_upper: float
    witness: DeviationWitness | None = None
    method: str = ""
    seed: int | None = None
    diagnostics: Mapping[str, Any] = field(default_factory=dict)
    prices: Any = None

    def __post_init__(self):
        lo, hi = self.theta_lower, self.theta_upper
        if math.isfinite(lo) and math.isfinite(hi) and lo > hi + 1e-6 * max(1.0, abs(hi)):
            raise ValueError(f"theta_lower {lo} exceeds theta_upper {hi}")
        if self.witness is not None and not math.isclose(self.witness.ratio, hi, rel_tol=1e-12):
            raise ValueError("witness ratio must equal theta_upper")
