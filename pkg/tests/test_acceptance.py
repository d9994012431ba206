"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""
import itertools
import time

import numpy as np
import pytest

from schedround import ShiftedClasses, build_graph, eq6_rewrite, eq7_bound, lp_cost_on_machine, round_all
from schedround import solve_config_lp, swap_instance, total_cost
from schedround.analysis import edge_checks, monte_carlo, prefix_ratio, prepare, sample_roundings
from schedround.certificate import case_tables, check_table, default_rows, grid_around, search_params
from schedround.config_lp import random_mixture
from schedround.harness import InstanceSpec, cmd_verify_certificate, gen_instance

SIGMAS = 4.0
RESULTS: dict[str, str] = {}


def record(name, ok, detail, elapsed, limit):
    in_time = elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    line = f"criterion {name}: {status}  {detail}  [{elapsed:.1f}s, limit {limit:g}s]"
    RESULTS[name] = line
    print("\n" + line, flush=True)
    assert ok, line
    assert in_time, line


def _rng(tag):
    return np.random.default_rng(np.random.SeedSequence(20240601, spawn_key=(tag,)))


def _instances(count, n_range, m_range, tag, density=0.8):
    rng = _rng(tag)
    out = []
    for r in range(count):
        spec = InstanceSpec(int(rng.integers(*n_range)), int(rng.integers(*m_range)), density)
        out.append(gen_instance(spec, int(rng.integers(2**32)) + r))
    return out


def test_criterion_1_certificate(capsys):
    t = time.perf_counter()
    code = cmd_verify_certificate()
    out = capsys.readouterr().out
    res = check_table(default_rows())
    elapsed = time.perf_counter() - t
    c13, c14 = case_tables()
    evaluations = sum(r.evaluations for r in res.intervals)
    worst = max(r.worst_value for r in res.intervals)
    ok = (code == 0 and res.passed and evaluations == 10 * 2 * (len(c13) + len(c14)) == 580
          and worst <= 1e-9 and abs(res.mean_alpha - 1.3574263) <= 1e-6 and "1.3574263" in out)
    record("1", ok, f"exit {code}, {evaluations} case maxima, worst {worst:.2e}, mean alpha {res.mean_alpha:.7f}",
           elapsed, 1.0)


def test_criterion_2_swap_lemma():
    t = time.perf_counter()
    insts = _instances(200, (1, 7), (1, 4), 2, density=1.0)
    checked = mismatches = 0
    for inst in insts:
        sw = swap_instance(inst)
        for phi in itertools.product(range(inst.machine_count), repeat=inst.job_count):
            checked += 1
            if total_cost(inst, phi) != total_cost(sw, phi):
                mismatches += 1
    record("2", mismatches == 0, f"{checked} assignments on 200 instances, {mismatches} exact mismatches",
           time.perf_counter() - t, 30)


def test_criterion_3_prefix_rewrite():
    t = time.perf_counter()
    rng = _rng(3)
    worst = 0.0
    bad = 0
    for r in range(1000):
        spec = InstanceSpec(int(rng.integers(1, 11)), int(rng.integers(1, 4)), 0.8)
        inst = prepare(gen_instance(spec, 1000 + r))
        sol = random_mixture(inst, rng, parts=int(rng.integers(1, 6)))
        for i in range(inst.machine_count):
            direct = lp_cost_on_machine(sol, inst, i)
            err = abs(direct - eq6_rewrite(sol, inst, i)) / (1 + direct)
            worst = max(worst, err)
            bad += err > 1e-9
    record("3", bad == 0, f"1000 random feasible points, worst relative error {worst:.1e}",
           time.perf_counter() - t, 30)


def _fractional_setup(tag, count, n_range=(6, 11), m_range=(2, 4)):
    """Instances with random feasible fractional points (LP optima here are almost always integral)."""
    rng = _rng(tag)
    out = []
    for inst in _instances(count, n_range, m_range, tag + 100):
        work = prepare(inst)
        out.append((work, random_mixture(work, rng, parts=5)))
    return out, rng


def test_criterion_4_rounding_structure():
    t = time.perf_counter()
    setups, rng = _fractional_setup(4, 50)
    runs = problems = 0
    max_iter_ratio = 0.0
    for r, (inst, sol) in enumerate(setups):
        for trial in range(200):
            beta = float(2 ** rng.random())
            g = build_graph(sol.z, inst, ShiftedClasses.build(inst.sizes, beta))
            try:
                res = round_all(g, np.random.SeedSequence(r, spawn_key=(trial,)), check=True)
            except AssertionError:
                problems += 1
                continue
            runs += 1
            x = np.array([res.indicator[e.id] for e in g.edges])
            jobs = np.array([e.job for e in g.edges])
            if not np.array_equal(np.bincount(jobs, weights=x, minlength=inst.job_count), np.ones(inst.job_count)):
                problems += 1
            marked = {}
            for e, xe in zip(g.edges, x):
                if e.marked and xe:
                    marked[(e.machine, e.k)] = marked.get((e.machine, e.k), 0) + 1
            problems += any(c > 1 for c in marked.values())
            for k, it in res.iterations.items():
                max_iter_ratio = max(max_iter_ratio, it / len(g.class_edges(k)))
                problems += it > len(g.class_edges(k))
    record("4", problems == 0 and runs == 10_000,
           f"{runs} runs, {problems} violations, max iterations/|E_k| {max_iter_ratio:.2f}",
           time.perf_counter() - t, 300)


@pytest.fixture(scope="module")
def fixed_beta_runs():
    t = time.perf_counter()
    setups, rng = _fractional_setup(5, 10)
    runs = []
    for r, (inst, sol) in enumerate(setups):
        beta = float(2 ** rng.random())
        g = build_graph(sol.z, inst, ShiftedClasses.build(inst.sizes, beta))
        wc, _, X = sample_roundings(inst, sol.z, 10_000, 500 + r, beta=beta, keep_edges=True)
        runs.append((inst, sol, g, beta, wc, X))
    return runs, time.perf_counter() - t


def test_criterion_5_marginals(fixed_beta_runs):
    runs, setup_time = fixed_beta_runs
    t = time.perf_counter()
    worst = {"marginals": -np.inf, "unmarked_pairs": -np.inf, "unmarked_vs_marked": -np.inf}
    counts = dict.fromkeys(worst, 0)
    ok = True
    for inst, sol, g, beta, wc, X in runs:
        for name, entry in edge_checks(g, X, SIGMAS).items():
            ok &= entry["pass"]
            counts[name] += entry["count"]
            if entry["worst"] is not None:
                worst[name] = max(worst[name], entry["worst"])
    detail = ", ".join(f"{k} {counts[k]} worst {worst[k]:+.2f} sigma" for k in worst)
    record("5", ok, detail, setup_time + time.perf_counter() - t, 600)


def test_criterion_6_conditional_bound(fixed_beta_runs):
    runs, _ = fixed_beta_runs
    t = time.perf_counter()
    worst = -np.inf
    checked = 0
    ok = True
    for inst, sol, g, beta, wc, X in runs:
        N = wc.shape[0]
        for i in range(inst.machine_count):
            bound = eq7_bound(sol.z, inst, i, beta)
            mean = wc[:, i].mean()
            sigma = wc[:, i].std(ddof=1) / np.sqrt(N)
            checked += 1
            ok &= mean <= bound + SIGMAS * sigma + 1e-9 * (1 + bound)
            if sigma > 0:
                worst = max(worst, (mean - bound) / sigma)
    record("6", ok, f"{checked} machines, worst (mean - bound) {worst:+.1f} sigma", time.perf_counter() - t, 600)


def test_criterion_7_end_to_end():
    t = time.perf_counter()
    insts = _instances(50, (6, 13), (2, 5), 7)
    worst_ratio = 0.0
    worst_prefix = 0.0
    fractional = 0
    ok = True
    for r, inst in enumerate(insts):
        work = prepare(inst)
        sol = solve_config_lp(work)
        fractional += bool(np.any((sol.z > 1e-9) & (sol.z < 1 - 1e-9)))
        rep = monte_carlo(work, 10_000, 700 + r, sol=sol, strata=10)
        worst_ratio = max(worst_ratio, rep.ratio)
        ok &= rep.ratio <= 1.36 + SIGMAS * rep.ratio_sigma
        for i in range(work.machine_count):
            pr = prefix_ratio(sol, work, i, strata=10)
            if np.any(np.isfinite(pr)):
                worst_prefix = max(worst_prefix, float(np.nanmax(pr)))
    ok &= worst_prefix <= 1.36 + 1e-3
    record("7", ok, f"50 instances ({fractional} with fractional LP), max mean ratio {worst_ratio:.4f}, "
           f"max averaged-bound/LP prefix ratio {worst_prefix:.4f}", time.perf_counter() - t, 900)


def test_criterion_7_supplement_fractional_points():
    """Same ratio test against random feasible fractional points, where the rounding is not trivial."""
    t = time.perf_counter()
    setups, _ = _fractional_setup(77, 10)
    worst = 0.0
    worst_prefix = 0.0
    ok = True
    for r, (inst, sol) in enumerate(setups):
        rep = monte_carlo(inst, 2000, 900 + r, sol=sol, strata=10)
        worst = max(worst, rep.ratio)
        ok &= rep.ratio <= 1.36 + SIGMAS * rep.ratio_sigma
        for i in range(inst.machine_count):
            pr = prefix_ratio(sol, inst, i, strata=10)
            if np.any(np.isfinite(pr)):
                worst_prefix = max(worst_prefix, float(np.nanmax(pr)))
    ok &= worst_prefix <= 1.36 + 1e-3
    record("7-supplement", ok, f"10 fractional points, max mean ratio {worst:.4f}, max prefix ratio {worst_prefix:.4f}",
           time.perf_counter() - t, 300)


def test_criterion_8_lp_optimality():
    t = time.perf_counter()
    insts = _instances(200, (1, 7), (1, 4), 8, density=0.7)
    worst_excess = -np.inf
    worst_gap = 0.0
    for inst in insts:
        work = prepare(inst)
        sol = solve_config_lp(work)
        choices = [[i for i in range(work.machine_count) if work.eligible(i, j)] for j in range(work.job_count)]
        best = min(float(total_cost(work, phi)) for phi in itertools.product(*choices))
        worst_excess = max(worst_excess, sol.objective - best)
        worst_gap = max(worst_gap, sol.duality_gap)
    ok = worst_excess <= 1e-7 and worst_gap <= 1e-7
    record("8", ok, f"200 instances, max (LP - integral optimum) {worst_excess:+.1e}, max duality gap {worst_gap:.1e}",
           time.perf_counter() - t, 120)


def test_criterion_9_parameter_search():
    t = time.perf_counter()
    row = default_rows()[4]
    g13, g14 = grid_around(row, half_width=0.04, step=0.02)
    found = search_params(5, g13, g14, rounds=3)
    ok = found.alpha <= row.alpha + 0.002
    record("9", ok, f"found alpha {found.alpha:.6f} vs published {row.alpha:.6f}", time.perf_counter() - t, 120)
