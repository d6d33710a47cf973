"""JSON instance files.

Layout::

    {"candidates": [{"id": "a", "size": 1}, ...],
     "voters": [{"id": "v1", "approvals": ["a"]} | {"id": "v1", "utilities": {"a": 3}}, ...],
     "budget": 2,
     "committee": ["a"] | {"a": 0.5}}
"""

from __future__ import annotations

import json
import math
from typing import Any, Mapping

from .errors import InstanceError
from .model import AuditInstance, Candidate, Election, Voter, validate


def _fail(msg: str) -> InstanceError:
    return InstanceError(msg, code="MALFORMED_INSTANCE")


def _number(value, where: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(f"{where}: expected a number, got {value!r}")
    return value


def election_from_dict(data: Mapping[str, Any]) -> Election:
    if not isinstance(data, Mapping):
        raise _fail("instance must be a JSON object")
    for key in ("candidates", "voters", "budget"):
        if key not in data:
            raise _fail(f"missing key {key!r}")
    cands = []
    for t, c in enumerate(data["candidates"]):
        if not isinstance(c, Mapping) or "id" not in c:
            raise _fail(f"candidates[{t}]: expected an object with an 'id'")
        size = _number(c.get("size", 1), f"candidates[{t}].size")
        cands.append(Candidate(str(c["id"]), float(size)))
    voters = []
    all_approval = True
    for t, v in enumerate(data["voters"]):
        if not isinstance(v, Mapping) or "id" not in v:
            raise _fail(f"voters[{t}]: expected an object with an 'id'")
        if "approvals" in v:
            if not isinstance(v["approvals"], list):
                raise _fail(f"voters[{t}].approvals must be a list")
            voters.append(Voter.approving(str(v["id"]), [str(c) for c in v["approvals"]]))
        elif "utilities" in v:
            if not isinstance(v["utilities"], Mapping):
                raise _fail(f"voters[{t}].utilities must be an object")
            all_approval = False
            voters.append(Voter(str(v["id"]), {str(c): u for c, u in v["utilities"].items()}))
        else:
            raise _fail(f"voters[{t}]: needs 'approvals' or 'utilities'")
    budget = float(_number(data["budget"], "budget"))
    return Election(tuple(cands), tuple(voters), budget, approval_format=all_approval and bool(voters))


def instance_from_dict(data: Mapping[str, Any]) -> AuditInstance:
    election = election_from_dict(data)
    committee = data.get("committee", [])
    if isinstance(committee, Mapping):
        committee = {str(c): float(_number(x, f"committee[{c!r}]")) for c, x in committee.items()}
    elif isinstance(committee, list):
        committee = frozenset(str(c) for c in committee)
    else:
        raise _fail("committee must be a list of ids or an id -> value object")
    instance = AuditInstance(election, committee)
    report = validate(election, instance)
    if not report.ok:
        raise InstanceError(f"invalid instance: {report.codes[0]}", report.violations)
    return instance


def parse_instance(text: str) -> AuditInstance:
    """Parse instance JSON; syntax errors report line and column."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(data)


def load_instance(path) -> AuditInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def election_to_dict(election: Election) -> dict[str, Any]:
    out: dict[str, Any] = {"candidates": [{"id": c.id, "size": c.size} for c in election.candidates]}
    if election.approval_format:
        out["voters"] = [{"id": v.id, "approvals": [c for c, u in v.utilities.items() if u]} for v in election.voters]
    else:
        out["voters"] = [{"id": v.id, "utilities": dict(v.utilities)} for v in election.voters]
    out["budget"] = election.budget
    return out


def instance_to_dict(instance: AuditInstance) -> dict[str, Any]:
    out = election_to_dict(instance.election)
    if instance.is_fractional:
        out["committee"] = dict(instance.committee)
    else:
        order = instance.election.candidate_index
        out["committee"] = sorted(instance.committee, key=lambda c: (order.get(c, math.inf), c))
    return out


def emit_instance(instance: AuditInstance, indent: int | None = 1) -> str:
    return json.dumps(instance_to_dict(instance), indent=indent) + "\n"


def save_instance(instance: AuditInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_instance(instance))
