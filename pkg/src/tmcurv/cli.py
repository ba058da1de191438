"""Command-line interface: verify, audit, report.

Exit codes: 0 all non-audit checks pass; 1 check failures; 2 usage or
validation errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

from . import __version__
from .scenario import (ReportSchemaError, Scenario, ScenarioValidationError,
                       build_geometry, load_report, load_scenario, make_report,
                       report_to_csv, write_report_atomic)
from .verify import (AUDIT_EQUATIONS, VerificationError, audit_equation,
                     connection_reading_audit, run_checks, sample_points)
from .core import NonPositiveAlphaError
from .base_geom import GeometryError


def _fail(message: str, code: int) -> int:
    print(f"tmcurv: error: {message}", file=sys.stderr)
    return code


def _apply_seed(scenario: Scenario, seed) -> Scenario:
    if seed is None:
        return scenario
    return dataclasses.replace(scenario, sample=dataclasses.replace(
        scenario.sample, seed=int(seed)))


def cmd_verify(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        scenario = _apply_seed(scenario, args.seed)
        sg = build_geometry(scenario)
    except ScenarioValidationError as err:
        return _fail(str(err), 2)
    start = time.perf_counter()
    try:
        points, results, audits = run_checks(sg, scenario.sample, scenario.checks)
    except (VerificationError, NonPositiveAlphaError, GeometryError) as err:
        return _fail(str(err), 2)
    elapsed = time.perf_counter() - start
    payload = make_report(scenario, "verify", scenario.sample.seed, points,
                          results, audits, elapsed, __version__)
    if args.out:
        write_report_atomic(args.out, payload)
    for row in payload["checks"]:
        status = "AUDIT" if row["audit"] else ("PASS" if row["pass"] else "FAIL")
        print(f"{status:5s} {row['id']:42s} points={row['points']:<4d} "
              f"max_abs={row['max_abs']:.3e} max_rel={row['max_rel']:.3e}")
    for rec in payload["audit_records"]:
        print(f"AUDIT {rec['equation']:42s} point={rec['point_index']:<3d} "
              f"verdict: {rec['verdict']}")
    summary = payload["summary"]
    print(f"checks: {summary['passed']} passed, {summary['failed']} failed, "
          f"{summary['audit']} audit records; seed={payload['seed']}; "
          f"{elapsed:.2f}s")
    return 0 if summary["all_pass"] else 1


def cmd_audit(args) -> int:
    if args.equation not in AUDIT_EQUATIONS and args.equation != "connection":
        return _fail(f"unknown equation id {args.equation!r}; expected one of "
                     f"{', '.join(AUDIT_EQUATIONS)}", 2)
    try:
        scenario = load_scenario(args.scenario)
        scenario = _apply_seed(scenario, args.seed)
        sg = build_geometry(scenario)
    except ScenarioValidationError as err:
        return _fail(str(err), 2)
    spec = dataclasses.replace(scenario.sample, count=min(scenario.sample.count,
                                                          args.points))
    start = time.perf_counter()
    try:
        points = sample_points(sg, spec)
        if args.equation == "connection":
            records = connection_reading_audit(sg, points)
        else:
            records = audit_equation(sg, points, args.equation)
    except (VerificationError, NonPositiveAlphaError, GeometryError) as err:
        return _fail(str(err), 2)
    elapsed = time.perf_counter() - start
    payload = make_report(scenario, f"audit:{args.equation}", spec.seed, points,
                          [], records, elapsed, __version__)
    if args.out:
        write_report_atomic(args.out, payload)
    for rec in records:
        print(f"point {rec['point_index']}: {rec['verdict']}")
        for name, res in rec["readings"].items():
            print(f"    reading {name:12s} closed={res['closed_value']:.6e} "
                  f"oracle={res['oracle_value']:.6e} max_abs={res['max_abs']:.3e} "
                  f"max_rel={res['max_rel']:.3e}")
        for term in rec.get("terms", [])[: args.terms]:
            print(f"    term |{term['term']}| <= {term['max_norm']:.6e}")
    return 0


def cmd_report(args) -> int:
    try:
        payload = load_report(args.report)
    except ReportSchemaError as err:
        return _fail(str(err), 2)
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(report_to_csv(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmcurv",
        description="Verify closed-form bundle-metric geometry against an "
                    "independent coordinate oracle.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run comparison and invariant suites")
    p_verify.add_argument("--scenario", required=True, help="scenario JSON path")
    p_verify.add_argument("--seed", type=int, default=None,
                          help="override the scenario sample seed")
    p_verify.add_argument("--out", default=None, help="write the JSON report here")
    p_verify.set_defaults(func=cmd_verify)

    p_audit = sub.add_parser("audit", help="per-term audit of one closed-form equation")
    p_audit.add_argument("--scenario", required=True)
    p_audit.add_argument("--equation", required=True,
                         help=f"one of {', '.join(AUDIT_EQUATIONS)} or 'connection'")
    p_audit.add_argument("--seed", type=int, default=None)
    p_audit.add_argument("--points", type=int, default=5,
                         help="number of sampled audit points")
    p_audit.add_argument("--terms", type=int, default=64,
                         help="limit printed per-term rows")
    p_audit.add_argument("--out", default=None)
    p_audit.set_defaults(func=cmd_audit)

    p_report = sub.add_parser("report", help="render a stored report")
    p_report.add_argument("report", help="report JSON path")
    p_report.add_argument("--format", choices=("json", "csv"), default="json")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
