"""Per-machine LP cost rewrite, the conditional rounding bound, and Monte-Carlo checks.

For a machine ``i`` jobs are indexed by descending Smith ratio ``w_ij/p_j``
(ties by index).  Both the LP cost and the expected rounded cost decompose as
``sum_{j*} (sigma_{j*} - sigma_{j*+1}) * term(j*)`` over prefixes ``[j*]`` of
that order; the helpers below return those prefix terms so that ratios can be
compared prefix by prefix.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config_lp import ConfigLPSolution, solve_config_lp
from .graph import ShiftedClasses, build_graph, classify, sample_beta, stratified_beta
from .model import Instance, machine_costs_float, swap_instance
from .rounding import round_all

TAG_BETA = 1
TAG_ROUND = 2


def _order(inst: Instance, machine: int, sizes) -> tuple[list[int], np.ndarray]:
    w = inst.w_array[machine]
    jobs = inst.eligible_jobs(machine)
    jobs.sort(key=lambda j: (-w[j] / sizes[j], j))
    sigma = np.array([w[j] / sizes[j] for j in jobs] + [0.0])
    return jobs, sigma[:-1] - sigma[1:]


def eq6_terms(sol: ConfigLPSolution, inst: Instance, machine: int):
    """Prefix coefficients and ``1/2 (sum z p^2 + sum_f y_f p(f & [j*])^2)`` terms."""
    sizes = inst.p_array[machine]
    jobs, coef = _order(inst, machine, sizes)
    rank = {j: r for r, j in enumerate(jobs)}
    z = sol.z[machine, jobs]
    p = sizes[jobs]
    lin = np.cumsum(z * p * p)
    quad = np.zeros(len(jobs))
    for f, y in sol.machine_masses(machine):
        v = np.zeros(len(jobs))
        for j in f:
            v[rank[j]] = p[rank[j]]
        quad += y * np.cumsum(v) ** 2
    return coef, 0.5 * (lin + quad)


def eq6_rewrite(sol: ConfigLPSolution, inst: Instance, machine: int) -> float:
    """LP cost on ``machine`` written as a weighted sum over Smith-order prefixes."""
    coef, terms = eq6_terms(sol, inst, machine)
    return float(coef @ terms)


def eq7_terms(z, inst: Instance, machine: int, beta: float, rho: float = 2.0):
    """Prefix coefficients and bound terms for the expected rounded cost given ``beta``.

    Term for prefix ``[j*]``: ``sum z p^2 + vol^2/2 - 1/2 sum_k min(vol_k, beta rho^k)^2``
    with ``vol_k`` the prefix volume of size class ``k``.
    """
    sizes = inst.sizes
    jobs, coef = _order(inst, machine, sizes)
    z = np.asarray(z)[machine, jobs]
    p = sizes[jobs]
    vol = z * p
    lin = np.cumsum(vol * p)
    total = np.cumsum(vol)
    ks = [classify(float(pj), beta, rho) for pj in p]
    saving = np.zeros(len(jobs))
    per_class: dict[int, float] = {}
    for r, k in enumerate(ks):
        per_class[k] = per_class.get(k, 0.0) + vol[r]
        saving[r] = sum(min(v, beta * rho ** kk) ** 2 for kk, v in per_class.items())
    return coef, lin + 0.5 * total ** 2 - 0.5 * saving


def eq7_bound(z, inst: Instance, machine: int, beta: float, rho: float = 2.0) -> float:
    coef, terms = eq7_terms(z, inst, machine, beta, rho)
    return float(coef @ terms)


def independent_rounding_bound(z, inst: Instance, machine: int) -> float:
    """The bound without the per-class saving (what independent rounding gives)."""
    sizes = inst.sizes
    jobs, coef = _order(inst, machine, sizes)
    z = np.asarray(z)[machine, jobs]
    p = sizes[jobs]
    return float(coef @ (np.cumsum(z * p * p) + 0.5 * np.cumsum(z * p) ** 2))


def strata_betas(strata: int = 10, rho: float = 2.0) -> list[float]:
    """Stratum midpoints in log scale."""
    return [stratified_beta(s, 0.5, strata, rho) for s in range(strata)]


def prefix_ratio(sol: ConfigLPSolution, inst: Instance, machine: int, strata: int = 10, rho: float = 2.0):
    """Per-prefix ratio of the bound (averaged over stratum-midpoint betas) to the LP term.

    Prefixes with a zero LP term are returned as ``nan``.
    """
    _, lp_terms = eq6_terms(sol, inst, machine)
    bound = np.mean([eq7_terms(sol.z, inst, machine, b, rho)[1] for b in strata_betas(strata, rho)], axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(lp_terms > 0, bound / np.where(lp_terms > 0, lp_terms, 1.0), np.nan)


def prepare(inst: Instance) -> Instance:
    """Instance with machine-independent sizes (swapping a standard instance if needed)."""
    if inst.sizes_machine_independent:
        return inst
    if not inst.weights_machine_independent:
        raise ValueError("neither sizes nor weights are machine independent")
    return swap_instance(inst)


def trial_seed(seed: int, tag: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(tag, trial))


def trial_beta(seed: int, trial: int, rho: float = 2.0, strata: int | None = 10) -> float:
    rng = np.random.default_rng(trial_seed(seed, TAG_BETA, trial))
    if strata:
        return stratified_beta(trial % strata, float(rng.random()), strata, rho)
    return sample_beta(rng, rho)


def _run_trials(args):
    inst, z, seed, rho, strata, beta, start, stop, keep_edges = args
    m = inst.machine_count
    wc = np.zeros((stop - start, m))
    betas = np.zeros(stop - start)
    edge_x = []
    graph = None
    if beta is not None:
        graph = build_graph(z, inst, ShiftedClasses.build(inst.sizes, beta, rho))
    for r, t in enumerate(range(start, stop)):
        b = beta if beta is not None else trial_beta(seed, t, rho, strata)
        g = graph if graph is not None else build_graph(z, inst, ShiftedClasses.build(inst.sizes, b, rho))
        res = round_all(g, trial_seed(seed, TAG_ROUND, t))
        wc[r] = machine_costs_float(inst, res.machine_of)
        betas[r] = b
        if keep_edges:
            edge_x.append([res.indicator[e.id] for e in g.edges])
    return wc, betas, np.array(edge_x, dtype=np.int8) if keep_edges else None


def sample_roundings(inst: Instance, z, trials: int, seed: int, rho: float = 2.0, strata: int | None = 10,
                     beta: float | None = None, keep_edges: bool = False, workers: int | None = None):
    """Run ``trials`` independent rounds; returns per-trial machine costs and betas.

    Trial ``t`` uses generators keyed by ``(seed, tag, t)`` so results do not
    depend on ``workers``.  With a fixed ``beta`` and ``keep_edges`` the final
    edge indicators are returned as a ``trials x edges`` matrix.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if keep_edges and beta is None:
        raise ValueError("edge indicators are only comparable at a fixed beta")
    workers = workers or int(os.environ.get("SCHEDROUND_THREADS", "1"))
    chunks = max(1, min(workers, trials))
    bounds = np.linspace(0, trials, chunks + 1).astype(int)
    jobs = [(inst, np.asarray(z), seed, rho, strata, beta, int(a), int(b), keep_edges)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_trials, jobs))
    else:
        parts = [_run_trials(j) for j in jobs]
    wc = np.concatenate([p[0] for p in parts])
    betas = np.concatenate([p[1] for p in parts])
    edges = np.concatenate([p[2] for p in parts]) if keep_edges else None
    return wc, betas, edges


@dataclass
class MachineCostReport:
    machine: int
    lp_cost: float
    eq6_value: float
    eq7_bound_mean: float
    empirical_wc_mean: float
    empirical_wc_sigma: float
    trials: int
    eq7_bound_per_beta: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "machine": self.machine,
            "lp_cost": self.lp_cost,
            "eq6_value": self.eq6_value,
            "bound_mean": self.eq7_bound_mean,
            "wc_mean": self.empirical_wc_mean,
            "wc_halfwidth": 4 * self.empirical_wc_sigma,
            "trials": self.trials,
        }


@dataclass
class MonteCarloReport:
    lp_objective: float
    cost_mean: float
    cost_sigma: float
    ratio: float
    ratio_sigma: float
    trials: int
    machines: list[MachineCostReport]
    costs: np.ndarray = field(repr=False)
    betas: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "lp_objective": self.lp_objective,
            "cost_mean": self.cost_mean,
            "cost_halfwidth": 4 * self.cost_sigma,
            "ratio": self.ratio,
            "ratio_halfwidth": 4 * self.ratio_sigma,
            "trials": self.trials,
            "machines": [mr.to_dict() for mr in self.machines],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _sigma(samples: np.ndarray) -> float:
    """Standard error of the sample mean."""
    n = len(samples)
    return float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def monte_carlo(inst: Instance, trials: int, seed: int, rho: float = 2.0, sol: ConfigLPSolution | None = None,
                strata: int | None = 10, beta: float | None = None, workers: int | None = None) -> MonteCarloReport:
    """Empirical cost of the rounding against the LP and the per-machine bound.

    ``inst`` may be a standard instance (it is swapped) or already have
    machine-independent sizes.  ``sol`` defaults to the LP optimum; any
    feasible configuration solution can be passed instead, in which case
    ``lp_objective`` is its cost.
    """
    work = prepare(inst)
    if sol is None:
        sol = solve_config_lp(work)
    wc, betas, _ = sample_roundings(work, sol.z, trials, seed, rho, strata, beta, workers=workers)
    total = wc.sum(axis=1)
    lp = float(sum(y * c for y, c in _config_costs(sol, work)))
    machines = []
    uniq = {}
    for b in betas:
        if b not in uniq:
            uniq[b] = [eq7_bound(sol.z, work, i, b, rho) for i in range(work.machine_count)]
    for i in range(work.machine_count):
        per_beta = [(float(b), uniq[b][i]) for b in betas]
        machines.append(MachineCostReport(
            machine=i,
            lp_cost=float(sum(y * c for y, c in _config_costs(sol, work, i))),
            eq6_value=eq6_rewrite(sol, work, i),
            eq7_bound_mean=float(np.mean([v for _, v in per_beta])),
            empirical_wc_mean=float(wc[:, i].mean()),
            empirical_wc_sigma=_sigma(wc[:, i]),
            trials=trials,
            eq7_bound_per_beta=per_beta,
        ))
    mean = float(total.mean())
    sig = _sigma(total)
    return MonteCarloReport(lp, mean, sig, mean / lp if lp > 0 else 1.0, sig / lp if lp > 0 else 0.0,
                            trials, machines, total, betas)


def _config_costs(sol: ConfigLPSolution, inst: Instance, machine: int | None = None):
    for (i, f), y in sol.masses.items():
        if machine is not None and i != machine:
            continue
        yield y, _smith_float(inst, i, f)


def _smith_float(inst: Instance, machine: int, jobs) -> float:
    p, w = inst.p_array[machine], inst.w_array[machine]
    t = c = 0.0
    for j in sorted(jobs, key=lambda j: (-w[j] / p[j], j)):
        t += p[j]
        c += w[j] * t
    return c


def edge_checks(graph, X: np.ndarray, sigmas: float = 4.0) -> dict[str, dict]:
    """Statistical checks on final edge indicators from fixed-beta runs.

    ``X`` is ``trials x edges`` in graph edge order.  Each entry reports the
    worst standardized excess ``(empirical - bound) / sigma`` and a pass flag.
    """
    X = np.asarray(X, dtype=float)
    N = X.shape[0]
    xs = np.array([e.x for e in graph.edges])
    ps = np.array([e.p for e in graph.edges])

    def excess(samples, target, two_sided=False):
        mean = samples.mean(axis=0)
        sd = samples.std(axis=0, ddof=1) / math.sqrt(N) if N > 1 else np.zeros_like(mean)
        diff = mean - target
        if two_sided:
            diff = np.abs(diff)
        # zero-variance samples must meet the target up to round-off
        return np.where(sd > 0, diff / np.where(sd > 0, sd, 1.0), np.where(diff > 1e-9, np.inf, 0.0))

    out = {}
    z = excess(X, xs, two_sided=True)
    out["marginals"] = {"worst": float(z.max(initial=0.0)), "count": int(len(xs)), "pass": bool((z <= sigmas).all())}

    groups: dict[tuple[int, int], list[int]] = {}
    for a, e in enumerate(graph.edges):
        groups.setdefault((e.machine, e.k), []).append(a)
    pair_z, group_z = [], []
    for idx in groups.values():
        um = [a for a in idx if not graph.edges[a].marked]
        mk = [a for a in idx if graph.edges[a].marked]
        for u in range(len(um)):
            for v in range(u + 1, len(um)):
                a, b = um[u], um[v]
                pair_z.append(excess(X[:, [a]] * X[:, [b]], np.array([xs[a] * xs[b]]))[0])
        if mk:
            mvol = X[:, mk] @ ps[mk]
            for a in um:
                group_z.append(excess((X[:, a] * mvol)[:, None], np.array([xs[a] * (xs[mk] @ ps[mk])]))[0])
    for name, vals in (("unmarked_pairs", pair_z), ("unmarked_vs_marked", group_z)):
        vals = np.array(vals)
        out[name] = {"worst": float(vals.max(initial=-np.inf)) if vals.size else None,
                     "count": int(vals.size), "pass": bool((vals <= sigmas).all())}
    return out
