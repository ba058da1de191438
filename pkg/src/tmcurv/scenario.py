"""Scenario files, validation, report assembly and serialization.

Scenarios and reports are schema-versioned JSON.  A scenario fully validates
before any computation: expressions must parse against the declared
dimension, the metric must be symmetric and positive definite on a
deterministic probe set, and alpha must stay positive there.  Reports carry
the scenario content digest and the seed so that identical inputs reproduce
byte-identical payloads (timing aside).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .base_geom import ChartMetric, GeometryError
from .core import IsotropicParams, ScenarioGeometry, TangentPoint
from .verify import CheckResult, SampleSpec, CHECK_NAMES

SCENARIO_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1
TOOL_NAME = "tmcurv"

BUNDLED_SCENARIOS = ("sasaki_flat", "sasaki_sphere", "sasaki_hyperbolic",
                     "energy_alpha_flat", "sigma_const_sphere")


class ScenarioValidationError(Exception):
    pass


class ReportSchemaError(Exception):
    pass


@dataclass
class Scenario:
    name: str
    dimension: int
    metric: list
    domain: list
    alpha: str
    sigma: str
    jet_order: int = 3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    sample: SampleSpec = field(default_factory=SampleSpec)
    checks: list | None = None

    def payload(self) -> dict:
        return {
            "schema_version": SCENARIO_SCHEMA_VERSION,
            "name": self.name,
            "dimension": self.dimension,
            "metric": self.metric,
            "domain": [[lo, hi] for lo, hi in self.domain],
            "alpha": self.alpha,
            "sigma": self.sigma,
            "jet_order": self.jet_order,
            "tolerances": {"rel": self.rel_tol, "abs": self.abs_tol},
            "sample": {"count": self.sample.count, "seed": self.sample.seed,
                       "margin": self.sample.margin,
                       "fiber_radius": self.sample.fiber_radius,
                       "alpha_floor": self.sample.alpha_floor},
            "checks": self.checks,
        }


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def scenario_digest(scenario: Scenario) -> str:
    return "sha256:" + hashlib.sha256(canonical_json(scenario.payload()).encode()).hexdigest()


def _require(cond: bool, field_name: str, message: str):
    if not cond:
        raise ScenarioValidationError(f"{field_name}: {message}")


def scenario_from_dict(raw: dict, name_hint: str = "scenario") -> Scenario:
    _require(isinstance(raw, dict), "scenario", "top level must be a JSON object")
    version = raw.get("schema_version")
    _require(version == SCENARIO_SCHEMA_VERSION, "schema_version",
             f"expected {SCENARIO_SCHEMA_VERSION}, got {version!r}")
    n = raw.get("dimension")
    _require(isinstance(n, int) and n >= 1, "dimension", f"must be a positive integer, got {n!r}")
    metric = raw.get("metric")
    _require(isinstance(metric, list) and len(metric) == n
             and all(isinstance(row, list) and len(row) == n for row in metric),
             "metric", f"must be an {n}x{n} array of expression strings")
    _require(all(isinstance(e, str) for row in metric for e in row),
             "metric", "entries must be expression strings")
    domain = raw.get("domain")
    _require(isinstance(domain, list) and len(domain) == n
             and all(isinstance(iv, list) and len(iv) == 2 for iv in domain),
             "domain", f"must be {n} [lo, hi] intervals")
    for iv in domain:
        _require(float(iv[0]) < float(iv[1]), "domain", f"interval {iv} is empty")
    alpha = raw.get("alpha")
    sigma = raw.get("sigma", "0")
    _require(isinstance(alpha, str) and alpha.strip() != "", "alpha",
             "must be a non-empty expression string")
    _require(isinstance(sigma, str) and sigma.strip() != "", "sigma",
             "must be a non-empty expression string")
    jet_order = raw.get("jet_order", 3)
    _require(isinstance(jet_order, int) and jet_order == 3, "jet_order",
             f"only third-order jets are supported, got {jet_order!r}")
    tolerances = raw.get("tolerances", {})
    _require(isinstance(tolerances, dict), "tolerances", "must be an object")
    rel_tol = float(tolerances.get("rel", 1e-8))
    abs_tol = float(tolerances.get("abs", 1e-10))
    _require(rel_tol > 0 and abs_tol > 0, "tolerances", "must be positive")
    sample_raw = raw.get("sample", {})
    _require(isinstance(sample_raw, dict), "sample", "must be an object")
    sample = SampleSpec(
        count=int(sample_raw.get("count", 100)),
        seed=int(sample_raw.get("seed", 0)),
        margin=float(sample_raw.get("margin", 0.05)),
        fiber_radius=float(sample_raw.get("fiber_radius", 1.0)),
        alpha_floor=float(sample_raw.get("alpha_floor", 1e-6)),
    )
    _require(sample.count >= 1, "sample.count", "must be >= 1")
    _require(0.0 <= sample.margin < 0.5, "sample.margin", "must be in [0, 0.5)")
    _require(sample.fiber_radius >= 0.0, "sample.fiber_radius", "must be >= 0")
    checks = raw.get("checks")
    if checks is not None:
        _require(isinstance(checks, list) and all(isinstance(c, str) for c in checks),
                 "checks", "must be a list of check names")
        unknown = set(checks) - set(CHECK_NAMES)
        _require(not unknown, "checks", f"unknown checks {sorted(unknown)}")
    return Scenario(name=str(raw.get("name", name_hint)), dimension=n,
                    metric=metric, domain=[(float(lo), float(hi)) for lo, hi in domain],
                    alpha=alpha, sigma=sigma, jet_order=jet_order,
                    rel_tol=rel_tol, abs_tol=abs_tol, sample=sample, checks=checks)


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as err:
        raise ScenarioValidationError(f"cannot read scenario {path}: {err}") from None
    name_hint = os.path.splitext(os.path.basename(str(path)))[0]
    return scenario_from_dict(raw, name_hint=name_hint)


def _probe_points(sc: Scenario, count: int = 32):
    """Deterministic probe set used by validation (independent of the run seed)."""
    rng = np.random.default_rng(20240001)
    n = sc.dimension
    lows = np.array([lo + 0.02 * (hi - lo) for lo, hi in sc.domain])
    highs = np.array([hi - 0.02 * (hi - lo) for lo, hi in sc.domain])
    pts = []
    radius = sc.sample.fiber_radius
    for k in range(count):
        x = rng.uniform(lows, highs)
        if k % 4 == 0 or radius <= 0.0:
            u = np.zeros(n)
        else:
            u = rng.uniform(-radius, radius, size=n)
        pts.append(TangentPoint.of(x, u))
    return pts


def build_geometry(sc: Scenario) -> ScenarioGeometry:
    """Parse, probe and assemble the immutable scenario geometry.

    Establishes the structural facts (sigma identically zero on the probe
    set, alpha constant) that drive check selection and audit policy.
    """
    n = sc.dimension
    try:
        metric = ChartMetric.from_strings(sc.metric, sc.domain)
    except expr.ExprError as err:
        raise ScenarioValidationError(f"metric: {err}") from None
    except GeometryError as err:
        raise ScenarioValidationError(f"metric: {err}") from None
    try:
        params = IsotropicParams.from_strings(sc.alpha, sc.sigma, n)
    except expr.ExprError as err:
        raise ScenarioValidationError(f"alpha/sigma: {err}") from None

    probes = _probe_points(sc)
    sigma_zero = True
    alpha_const = True
    alpha_ref = None
    for pt in probes:
        point = pt.coords
        try:
            gj = [[expr.eval_jet(metric.entries[i][j], point, n, 2)
                   for j in range(n)] for i in range(n)]
            a_jet = expr.eval_jet(params.alpha, point, n, 1)
            s_val = expr.eval_float(params.sigma, point, n)
        except expr.ExprDomainError as err:
            raise ScenarioValidationError(
                f"expression undefined on the domain at x={pt.x}, u={pt.u}: {err}") from None
        g0 = np.array([[gj[i][j].value for j in range(n)] for i in range(n)])
        if float(np.max(np.abs(g0 - g0.T))) > 1e-12:
            raise ScenarioValidationError(
                f"metric: not symmetric at x={pt.x} (max deviation "
                f"{float(np.max(np.abs(g0 - g0.T))):.2e})")
        eigs = np.linalg.eigvalsh(g0)
        if eigs[0] <= 0.0:
            raise ScenarioValidationError(
                f"metric: not positive definite at x={pt.x} "
                f"(min eigenvalue {eigs[0]:.3e})")
        if a_jet.value <= sc.sample.alpha_floor:
            raise ScenarioValidationError(
                "alpha: must be positive on the sampled domain "
                f"(alpha={a_jet.value:.3e} at x={pt.x}, u={pt.u})")
        if s_val != 0.0:
            sigma_zero = False
        if float(np.max(np.abs(a_jet.gradient()))) != 0.0:
            alpha_const = False
        if alpha_ref is None:
            alpha_ref = a_jet.value
        elif a_jet.value != alpha_ref:
            alpha_const = False
    if sc.checks is not None and not sigma_zero:
        curvature_family = {"curvature", "ricci", "sectional", "laplacian"}
        bad = set(sc.checks) & curvature_family
        if bad:
            raise ScenarioValidationError(
                f"checks: {sorted(bad)} require sigma == 0, but sigma is not "
                "identically zero on the domain")
    return ScenarioGeometry(metric=metric, params=params, jet_order=sc.jet_order,
                            rel_tol=sc.rel_tol, abs_tol=sc.abs_tol,
                            sigma_is_zero=sigma_zero, alpha_is_constant=alpha_const,
                            name=sc.name)


def bundled_scenario_path(name: str) -> str:
    from importlib.resources import files
    res = files("tmcurv").joinpath("scenarios").joinpath(f"{name}.json")
    return str(res)


# -- reports ------------------------------------------------------------


def summarize_results(results: list[CheckResult]) -> list[dict]:
    """Aggregate per-point records into one summary row per check id."""
    by_check: dict[str, list[CheckResult]] = {}
    for res in results:
        by_check.setdefault(res.check_id, []).append(res)
    rows = []
    for check_id in sorted(by_check):
        rs = by_check[check_id]
        rows.append({
            "id": check_id,
            "points": len(rs),
            "max_abs": max(r.abs_res for r in rs),
            "max_rel": max(r.rel_res for r in rs),
            "audit": all(r.audit for r in rs),
            "pass": all(r.passed or r.audit for r in rs),
        })
    return rows


def make_report(scenario: Scenario, command: str, seed: int, points,
                results: list[CheckResult], audits: list[dict],
                timing_s: float, version: str) -> dict:
    summaries = summarize_results(results)
    hard = [s for s in summaries if not s["audit"]]
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": {"name": TOOL_NAME, "version": version},
        "command": command,
        "scenario": {"name": scenario.name, "digest": scenario_digest(scenario)},
        "seed": seed,
        "tolerances": {"rel": scenario.rel_tol, "abs": scenario.abs_tol},
        "points": [{"index": i, "x": [float(c) for c in pt.x],
                    "u": [float(c) for c in pt.u]} for i, pt in enumerate(points)],
        "summary": {
            "checks": len(summaries),
            "passed": sum(1 for s in hard if s["pass"]),
            "failed": sum(1 for s in hard if not s["pass"]),
            "audit": sum(1 for s in summaries if s["audit"]) + len(audits),
            "all_pass": all(s["pass"] for s in hard),
        },
        "checks": summaries,
        "records": [{"id": r.check_id, "point_index": r.point_index,
                     "abs_residual": r.abs_res, "rel_residual": r.rel_res,
                     "passed": r.passed, "audit": r.audit} for r in results],
        "audit_records": audits,
        "timing": {"total_s": timing_s},
    }


def write_report_atomic(path, payload: dict):
    """Write-then-rename so readers never observe a partial report."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    payload_text = json.dumps(payload, indent=2, sort_keys=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(payload_text + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load_report(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as err:
        raise ReportSchemaError(f"cannot read report {path}: {err}") from None
    version = payload.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise ReportSchemaError(
            f"report schema version mismatch: file has {version!r}, "
            f"tool expects {REPORT_SCHEMA_VERSION}")
    return payload


CSV_COLUMNS = ("check_id", "point_index", "abs_residual", "rel_residual",
               "passed", "audit")


def report_to_csv(payload: dict) -> str:
    """One row per check x point, stable column order, '.' decimal separator."""
    lines = [",".join(CSV_COLUMNS)]
    for rec in payload.get("records", []):
        lines.append(",".join([
            rec["id"], str(rec["point_index"]),
            repr(float(rec["abs_residual"])), repr(float(rec["rel_residual"])),
            str(bool(rec["passed"])).lower(), str(bool(rec["audit"])).lower(),
        ]))
    return "\n".join(lines) + "\n"
