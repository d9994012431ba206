"""Instance generation, the solve pipeline and experiment reports."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import certificate
from .analysis import (TAG_ROUND, edge_checks, monte_carlo, prefix_ratio, prepare, sample_roundings,
                       trial_beta, trial_seed)
from .config_lp import DEFAULT_JOB_CAP, solve_config_lp
from .graph import ShiftedClasses, build_graph
from .model import Instance, total_cost
from .rounding import InvariantViolation, round_all

TAG_GEN = 0
TAG_EDGES = 3
SIGMAS = 4.0
RATIO_CEILING = 1.5
PREFIX_TARGET = 1.36 + 1e-3


@dataclass(frozen=True)
class InstanceSpec:
    """Random standard instance: per-pair sizes, per-job weights.

    ``kind="identical"`` gives every machine the same sizes, which tends to
    produce fractional LP optima.
    """

    n: int
    m: int
    density: float = 1.0
    size_lo: float = 1.0
    size_hi: float = 64.0
    weight_lo: float = 1.0
    weight_hi: float = 10.0
    kind: str = "unrelated"

    def validate(self, cap: int = DEFAULT_JOB_CAP):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if self.n > cap:
            raise ValueError(f"n={self.n} exceeds the configuration LP cap of {cap}")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if not 0 < self.size_lo <= self.size_hi or not 0 < self.weight_lo <= self.weight_hi:
            raise ValueError("size and weight ranges must be positive and ordered")
        if self.kind not in ("unrelated", "identical"):
            raise ValueError(f"unknown instance kind {self.kind!r}")


def _two_decimals(x: float) -> Fraction:
    return Fraction(max(1, round(x * 100)), 100)


def gen_instance(spec: InstanceSpec, seed: int) -> Instance:
    """Reproducible random instance with sizes log-uniform and weights uniform, both rounded to 0.01."""
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(TAG_GEN,)))
    n, m = spec.n, spec.m
    logp = rng.uniform(math.log(spec.size_lo), math.log(spec.size_hi), size=(m, n))
    if spec.kind == "identical":
        logp[:] = logp[0]
    sizes = np.exp(logp)
    weights = rng.uniform(spec.weight_lo, spec.weight_hi, size=n)
    eligible = rng.random((m, n)) < spec.density
    # every job keeps at least one machine
    eligible[rng.integers(0, m, size=n), np.arange(n)] = True
    p = [[_two_decimals(sizes[i, j]) if eligible[i, j] else None for j in range(n)] for i in range(m)]
    return Instance.from_lists(p, [_two_decimals(x) for x in weights])


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def cmd_solve(inst: Instance, seed: int, rho: float = 2.0, sol=None) -> dict:
    """Swap, solve the LP, draw beta, round every class and report the schedule.

    The swap leaves machine and job indices unchanged, so the assignment
    found on the swapped instance is used as is on ``inst``.
    """
    work = prepare(inst)
    if sol is None:
        sol = solve_config_lp(work)
    beta = trial_beta(seed, 0, rho, strata=None)
    graph = build_graph(sol.z, work, ShiftedClasses.build(work.sizes, beta, rho))
    res = round_all(graph, trial_seed(seed, TAG_ROUND, 0))
    cost = total_cost(inst, res.machine_of)
    lp = sol.objective
    return {
        "seed": int(seed),
        "rho": rho,
        "beta": beta,
        "assignment": list(res.machine_of),
        "cost": float(cost),
        "cost_exact": _frac(cost),
        "lp_bound": lp,
        "duality_gap": sol.duality_gap,
        "ratio": float(cost) / lp if lp > 0 else 1.0,
        "iterations": {str(k): v for k, v in sorted(res.iterations.items())},
    }


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    trials: int
    rho: float = 2.0
    instance_path: str | None = None
    spec: InstanceSpec | None = None
    out: str | None = None
    strata: int = 10
    structure_trials: int = 200
    edge_trials: int = 2000

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if (self.instance_path is None) == (self.spec is None):
            raise ValueError("give exactly one of an instance path or a generator spec")
        if self.spec is not None:
            self.spec.validate()

    def load_instance(self) -> Instance:
        if self.instance_path is not None:
            inst = Instance.from_json(Path(self.instance_path).read_text())
            if inst.job_count > DEFAULT_JOB_CAP:
                raise ValueError(f"instance has {inst.job_count} jobs, above the cap of {DEFAULT_JOB_CAP}")
            return inst
        return gen_instance(self.spec, self.seed)


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "experiment report",
    "type": "object",
    "required": ["config", "instance", "certificate_sha1", "timestamp", "solve", "monte_carlo", "checks", "passed"],
    "properties": {
        "config": {"type": "object", "required": ["seed", "trials", "rho"]},
        "instance": {"type": "object", "required": ["machines", "jobs", "p", "w"]},
        "certificate_sha1": {"type": "string", "pattern": "^[0-9a-f]{40}$"},
        "timestamp": {"type": "string"},
        "solve": {
            "type": "object",
            "required": ["assignment", "cost", "lp_bound", "ratio", "beta"],
            "properties": {
                "assignment": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "cost": {"type": "number", "minimum": 0},
                "lp_bound": {"type": "number", "minimum": 0},
                "ratio": {"type": "number"},
                "beta": {"type": "number", "minimum": 1},
            },
        },
        "monte_carlo": {
            "type": "object",
            "required": ["lp_objective", "cost_mean", "cost_halfwidth", "ratio", "ratio_halfwidth", "trials",
                         "machines"],
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "machines": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["machine", "lp_cost", "eq6_value", "bound_mean", "wc_mean", "wc_halfwidth"],
                    },
                },
            },
        },
        "checks": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["pass"],
                "properties": {"pass": {"type": "boolean"}},
            },
        },
        "passed": {"type": "boolean"},
    },
}


def _structure_check(work, z, seed, rho, trials):
    """Rerun the first trials with per-iteration invariant checks switched on."""
    failures = []
    for t in range(trials):
        beta = trial_beta(seed, t, rho, strata=None)
        graph = build_graph(z, work, ShiftedClasses.build(work.sizes, beta, rho))
        try:
            round_all(graph, trial_seed(seed, TAG_ROUND, t), check=True)
        except InvariantViolation as exc:
            failures.append(f"trial {t}: {exc}")
    return {"pass": not failures, "trials": trials, "failures": failures[:5]}


def cmd_experiment(config: ExperimentConfig, timestamp: str | None = None) -> dict:
    """Run the Monte-Carlo experiment and every statistical check on one instance."""
    config.validate()
    inst = config.load_instance()
    work = prepare(inst)
    sol = solve_config_lp(work)
    rho = config.rho
    # stratify beta only when the trials fill every stratum equally
    strata = config.strata if config.trials % config.strata == 0 else None
    mc = monte_carlo(inst, config.trials, config.seed, rho, sol=sol, strata=strata)

    checks = {}
    checks["lp_duality_gap"] = {"pass": sol.duality_gap <= 1e-7, "value": sol.duality_gap}
    checks["ratio_ceiling"] = {"pass": mc.ratio <= RATIO_CEILING + SIGMAS * mc.ratio_sigma,
                               "value": mc.ratio, "limit": RATIO_CEILING + SIGMAS * mc.ratio_sigma}
    margins = [mr.empirical_wc_mean - mr.eq7_bound_mean - SIGMAS * mr.empirical_wc_sigma
               - 1e-9 * (1 + mr.eq7_bound_mean) for mr in mc.machines]
    checks["machine_bound"] = {"pass": max(margins) <= 0, "worst_margin": float(max(margins))}
    worst_prefix = 0.0
    if rho == 2.0:
        for i in range(work.machine_count):
            r = prefix_ratio(sol, work, i, config.strata, rho)
            if np.any(np.isfinite(r)):
                worst_prefix = max(worst_prefix, float(np.nanmax(r)))
        checks["prefix_bound_ratio"] = {"pass": worst_prefix <= PREFIX_TARGET, "value": worst_prefix}
    if config.structure_trials:
        checks["rounding_structure"] = _structure_check(work, sol.z, config.seed, rho,
                                                        min(config.structure_trials, config.trials))
    if config.edge_trials:
        beta = trial_beta(config.seed, 0, rho, strata=None)
        graph = build_graph(sol.z, work, ShiftedClasses.build(work.sizes, beta, rho))
        edge_seed = int(np.random.SeedSequence(config.seed, spawn_key=(TAG_EDGES,)).generate_state(2, np.uint64)[0])
        _, _, X = sample_roundings(work, sol.z, config.edge_trials, edge_seed, rho, beta=beta, keep_edges=True)
        for name, entry in edge_checks(graph, X, SIGMAS).items():
            checks[name] = entry

    cert = certificate.default_certificate_text().encode()
    cfg = asdict(config)
    report = {
        "config": cfg,
        "instance": inst.to_dict(),
        "certificate_sha1": certificate.git_blob_hash(cert),
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "solve": cmd_solve(inst, config.seed, rho, sol=sol),
        "monte_carlo": mc.to_dict(),
        "checks": _plain(checks),
        "passed": all(c["pass"] for c in checks.values()),
    }
    return report


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for r, v in enumerate(obj):
            _flatten(f"{prefix}[{r}]", v, out)
    else:
        out.append((prefix, json.dumps(obj) if isinstance(obj, list) else obj))


def report_to_csv(report: dict) -> str:
    """Flat ``key,value`` rows; nested keys are joined with dots."""
    rows = []
    _flatten("", {k: v for k, v in report.items() if k != "instance"}, rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    return buf.getvalue()


def cmd_verify_certificate(path: str | None = None, out=None) -> int:
    """Check a certificate file (or the bundled table); 0 on PASS, 1 on FAIL, 2 on unreadable input."""
    out = out or sys.stdout
    try:
        text = certificate.default_certificate_text() if path is None else Path(path).read_text()
        rows = certificate.load_rows(json.loads(text))
        result = certificate.check_table(rows)
    except FileNotFoundError:
        print(f"error: certificate file {path} not found", file=out)
        return 2
    except (json.JSONDecodeError, TypeError, ValueError, KeyError) as exc:
        print(f"error: malformed certificate: {exc}", file=out)
        return 2
    print(f"certificate sha1 {certificate.git_blob_hash(text.encode())}", file=out)
    print(result.report(), file=out)
    return 0 if result.passed else 1
