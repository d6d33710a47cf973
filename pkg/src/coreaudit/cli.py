"""``core-audit`` command line: audit instances, generate instances, verify certificates.

Exit codes: 0 success, 2 invalid input or failed verification, 3 oracle
budget exhausted, 1 solver failure. stdout carries only the report.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import AuditError, GeneratorError, InstanceError, ModeMismatch, OracleBudgetExceeded
from .jsonio import emit_instance, load_instance
from .model import AuditInstance, AuditReport, DeviationWitness, check_witness

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
DIGITS = 12


def _clean(value: Any) -> Any:
    """JSON-ready copy: floats to 12 significant digits, ``inf`` to ``"unbounded"``."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v) and v > 0:
            return "unbounded"
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(f"{v:.{DIGITS}g}")
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, dict) or hasattr(value, "items"):
        return {str(k) if not isinstance(k, tuple) else "/".join(map(str, k)): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def report_to_dict(report: AuditReport, instance: AuditInstance, config: dict) -> dict[str, Any]:
    prices = None if report.prices is None else report.prices.to_json(instance)
    return _clean({
        "theta_lower": report.theta_lower,
        "theta_upper": report.theta_upper,
        "witness": None if report.witness is None else report.witness.to_json(),
        "method": report.method,
        "seed": report.seed,
        "prices": prices,
        "diagnostics": dict(report.diagnostics),
        "tool_version": __version__,
        "config": config,
    })


def _text(report: dict) -> str:
    lines = [f"theta_lower: {report['theta_lower']}", f"theta_upper: {report['theta_upper']}",
             f"method: {report['method']}", f"seed: {report['seed']}"]
    w = report.get("witness")
    if w:
        committee = w["committee"]
        if isinstance(committee, dict):
            committee = [f"{c}={x}" for c, x in committee.items()]
        lines.append(f"witness: ratio {w['ratio']} voters [{', '.join(w['voters'])}] "
                     f"committee [{', '.join(committee)}]")
    if report.get("prices"):
        for v, row in report["prices"]["prices"].items():
            lines.append(f"prices {v}: " + ", ".join(f"{c}={p}" for c, p in row.items()))
    for key, val in report.get("diagnostics", {}).items():
        lines.append(f"{key}: {json.dumps(val, sort_keys=True)}")
    return "\n".join(lines)


def _jobs(args) -> int:
    env = os.environ.get("CORE_AUDIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InstanceError(f"CORE_AUDIT_JOBS must be an integer, got {env!r}") from None
    if args.jobs is not None:
        return max(1, args.jobs)
    return os.cpu_count() or 1


def _budget(args):
    from .oracles import OracleBudget

    return OracleBudget(args.budget_committees, args.budget_subsets, args.budget_time)


def _single(theta: float, witness, method: str, seed, diagnostics=None, prices=None) -> AuditReport:
    return AuditReport(theta, theta, witness, method, seed, diagnostics or {}, prices)


def _audit(args) -> AuditReport:
    instance = args.instance_obj
    jobs = _jobs(args)
    method = "highs" if args.solver == "highs" else "auto"
    if args.kind == "core":
        if args.exact:
            from .oracles import exact_theta_core

            theta, w = exact_theta_core(instance, _budget(args), jobs)
            return _single(theta, w, "exact", args.seed)
        if instance.election.is_approval and not instance.is_fractional:
            from .core_approval import audit_core_approval

            return audit_core_approval(instance, args.trials, args.seed, args.round, jobs, method)
        if instance.is_fractional:
            raise ModeMismatch("the LP audit needs an integral committee; use fractional-core")
        from .core_general import audit_core_general

        return audit_core_general(instance, args.trials, args.seed, args.round, jobs, args.epsilon, method)
    if args.kind == "subcore":
        if args.exact:
            from .oracles import exact_theta_subcore

            theta, w = exact_theta_subcore(instance, _budget(args), jobs)
            return _single(theta, w, "exact", args.seed)
        from .subcore import audit_subcore

        return audit_subcore(instance, args.trials, args.seed, args.round, jobs, method)
    if args.kind == "lindahl":
        from . import priceability as pr

        if instance.is_fractional:
            theta, ps = pr.lindahl_fractional(instance, args.eta, method=method)
            return _single(theta, None, "lindahl-fractional", args.seed, {"eta": args.eta}, ps)
        if instance.election.is_approval:
            theta, ps = pr.lindahl_ratio_approval(instance, method=method)
            return _single(theta, None, "lindahl-approval", args.seed, {}, ps)
        lo, hi, ps = pr.lindahl_integer_general(instance, args.epsilon, method=method)
        return AuditReport(lo, hi, None, "lindahl-integer", args.seed, {"epsilon": args.epsilon}, ps)
    if args.kind == "weak-price":
        from .priceability import is_weakly_priceable, weak_priceability

        theta, ps = weak_priceability(instance, method=method)
        return _single(theta, None, "weak-price", args.seed, {"weakly_priceable": is_weakly_priceable(theta)}, ps)
    from .oracles import exact_theta_fractional_core

    theta, w = exact_theta_fractional_core(instance, args.eta, _budget(args), method)
    return _single(theta, w, "exact-fractional", args.seed, {"eta": args.eta})


def cmd_audit(args) -> int:
    args.instance_obj = load_instance(args.instance)
    if args.trials < 1:
        raise InstanceError("--trials must be at least 1")
    start = time.perf_counter()
    report = _audit(args)
    config = {
        "command": args.kind,
        "mode": "exact" if args.exact else "lp",
        "round": args.round,
        "trials": args.trials,
        "seed": args.seed,
        "epsilon": args.epsilon,
        "eta": args.eta,
    }
    out = report_to_dict(report, args.instance_obj, config)
    if args.timing:
        out["diagnostics"]["wall_time_s"] = round(time.perf_counter() - start, 6)
    if args.format == "text":
        print(_text(out))
    else:
        print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def _verify_payload(instance: AuditInstance, data: dict) -> list:
    from .priceability import PriceSystem, verify_prices

    violations = []
    if "theta_lower" in data:
        witness, prices = data.get("witness"), data.get("prices")
    elif "voters" in data and "committee" in data:
        witness, prices = data, None
    elif "prices" in data:
        witness, prices = None, data
    else:
        raise InstanceError("expected a report, a witness or a price system")
    if witness is not None:
        violations += check_witness(instance, DeviationWitness.from_json(witness))
    if prices is not None:
        violations += verify_prices(instance, PriceSystem.from_json(instance, prices))
    return violations


def cmd_verify(args) -> int:
    instance = load_instance(args.instance)
    try:
        with open(args.certificate, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        violations = _verify_payload(instance, data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed certificate: {exc}") from None
    print(json.dumps({"ok": not violations,
                      "violations": [{"code": v.code, "message": v.message} for v in violations]},
                     indent=2, sort_keys=True))
    return EXIT_OK if not violations else EXIT_INVALID


def _parse_sets(text: str) -> list[list[int]]:
    try:
        return [[int(x) for x in part.split(",") if x.strip()] for part in text.split(";") if part.strip()]
    except ValueError:
        raise GeneratorError(f"cannot parse sets {text!r}; use e.g. '0,1;2,3'", code="MALFORMED_SETS") from None


def cmd_gen(args) -> int:
    from . import generators as g

    if args.kind == "gap":
        instance = g.gen_gap(args.p)
    elif args.kind == "coverage":
        try:
            beta = Fraction(args.beta)
        except (ValueError, ZeroDivisionError):
            raise GeneratorError(f"beta must be a rational like 1/2, got {args.beta!r}") from None
        instance = g.gen_coverage(args.q, args.d, _parse_sets(args.sets), beta)
    else:
        instance = g.gen_random(args.n, args.m, args.k, args.mode, args.density, args.max_u,
                                tuple(args.size_range), args.committee_rule, args.seed, args.max_approvals)
    text = emit_instance(instance) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="core-audit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="audit a committee and print a JSON report",
                       description="Report fields: theta_lower, theta_upper ('unbounded' when no deviation "
                                   "exists), witness {voters, committee, ratio, mode}, method, seed, prices "
                                   "{mode, theta, prices}, diagnostics, tool_version, config.")
    a.add_argument("kind", choices=["core", "subcore", "lindahl", "weak-price", "fractional-core"])
    a.add_argument("instance", help="instance JSON file")
    mode = a.add_mutually_exclusive_group()
    mode.add_argument("--lp", action="store_true", help="LP bound plus randomized rounding (default)")
    mode.add_argument("--exact", action="store_true", help="brute-force oracle")
    a.add_argument("--round", choices=["logm", "logn", "both"], default="both", help="rounding scheme")
    a.add_argument("--trials", type=int, default=64, help="rounding trials per scheme")
    a.add_argument("--seed", type=_u64, default=0, help="unsigned 64-bit seed")
    a.add_argument("--epsilon", type=float, default=0.01, help="slack of the integer Lindahl bracket")
    a.add_argument("--eta", type=float, default=1.0, help="required utility gain for fractional deviations")
    a.add_argument("--budget-committees", type=int, default=2**22, help="oracle cap on committees")
    a.add_argument("--budget-subsets", type=int, default=2**14, help="oracle cap on voter subsets")
    a.add_argument("--budget-time", type=float, default=None, help="oracle time cap in seconds")
    a.add_argument("--solver", choices=["auto", "highs"], default="auto", help="LP backend")
    a.add_argument("--format", choices=["json", "text"], default="json")
    a.add_argument("--jobs", type=int, default=None, help="worker threads (env CORE_AUDIT_JOBS wins)")
    a.add_argument("--timing", action="store_true", help="add wall time to diagnostics")
    a.set_defaults(func=cmd_audit)

    gen = sub.add_parser("gen", help="write a generated instance")
    gsub = gen.add_subparsers(dest="kind", required=True)
    gg = gsub.add_parser("gap", help="integrality-gap family")
    gg.add_argument("--p", type=int, required=True)
    gc = gsub.add_parser("coverage", help="coverage construction")
    gc.add_argument("--q", type=int, required=True)
    gc.add_argument("--d", type=int, required=True)
    gc.add_argument("--sets", required=True, help="sets over 0..qd-1, e.g. '0,1;2,3'")
    gc.add_argument("--beta", default="1/4", help="group-1 fraction as a rational")
    gr = gsub.add_parser("random", help="seeded random election")
    gr.add_argument("--n", type=int, required=True)
    gr.add_argument("--m", type=int, required=True)
    gr.add_argument("--k", type=float, required=True)
    gr.add_argument("--mode", choices=["approval", "general"], default="approval")
    gr.add_argument("--density", type=float, default=0.5)
    gr.add_argument("--max-u", type=int, default=3)
    gr.add_argument("--size-range", type=float, nargs=2, default=[1.0, 1.0], metavar=("LO", "HI"))
    gr.add_argument("--committee-rule", choices=["greedy", "random"], default="greedy")
    gr.add_argument("--seed", type=_u64, default=0)
    gr.add_argument("--max-approvals", type=int, default=None)
    for g in (gg, gc, gr):
        g.add_argument("--out", help="output path (default stdout)")
        g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="re-check a witness, price system or report against an instance")
    v.add_argument("certificate")
    v.add_argument("instance")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleBudgetExceeded as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InstanceError, ModeMismatch, GeneratorError) as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", ()):
            print(f"  {v.code}: {v.message}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AuditError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
