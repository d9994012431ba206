"""Command-line entry point: ``python3 -m schedround <subcommand>``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import certificate
from .harness import (ExperimentConfig, InstanceSpec, cmd_experiment, cmd_solve, cmd_verify_certificate,
                      gen_instance, report_to_csv, report_to_json)
from .model import Instance


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _spec_args(p):
    p.add_argument("--n", type=int, default=8, help="number of jobs")
    p.add_argument("--m", type=int, default=3, help="number of machines")
    p.add_argument("--density", type=float, default=1.0, help="probability that a (machine, job) pair is eligible")
    p.add_argument("--kind", choices=["unrelated", "identical"], default="unrelated")


def _spec(a) -> InstanceSpec:
    return InstanceSpec(n=a.n, m=a.m, density=a.density, kind=a.kind)


def _load(path: str) -> Instance:
    return Instance.from_json(Path(path).read_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schedround",
                                     description="Configuration LP and dependent rounding for weighted completion time.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance as JSON")
    _spec_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("solve", help="solve the LP and round once")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=2.0)
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="Monte-Carlo experiment with invariant checks")
    p.add_argument("--instance", help="instance JSON file; otherwise one is generated from --n/--m/--density")
    _spec_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rho", type=float, default=2.0)
    p.add_argument("--edge-trials", type=int, default=2000)
    p.add_argument("--structure-trials", type=int, default=200)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")

    p = sub.add_parser("verify-cert", help="check a multiplier certificate (default: the bundled table)")
    p.add_argument("path", nargs="?")

    p = sub.add_parser("search-params", help="grid search for multipliers on one interval")
    p.add_argument("interval", type=int, help="interval index 1..10")
    p.add_argument("--half-width", type=float, default=0.04, help="grid half width around the bundled row")
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    if a.command == "gen":
        _emit(gen_instance(_spec(a), a.seed).to_json() + "\n", a.out)
    elif a.command == "solve":
        _emit(json.dumps(cmd_solve(_load(a.instance), a.seed, a.rho), indent=2, sort_keys=True) + "\n", a.out)
    elif a.command == "experiment":
        cfg = ExperimentConfig(seed=a.seed, trials=a.trials, rho=a.rho, instance_path=a.instance,
                               spec=None if a.instance else _spec(a), out=a.out,
                               structure_trials=a.structure_trials, edge_trials=a.edge_trials)
        report = cmd_experiment(cfg)
        _emit(report_to_json(report) if a.format == "json" else report_to_csv(report), a.out)
        return 0 if report["passed"] else 1
    elif a.command == "verify-cert":
        return cmd_verify_certificate(a.path)
    elif a.command == "search-params":
        row = certificate.default_rows()[a.interval - 1]
        g13, g14 = certificate.grid_around(row, a.half_width, a.step)
        found = certificate.search_params(a.interval, g13, g14, rounds=a.rounds)
        _emit(certificate.rows_to_json([found]) + "\n", a.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
