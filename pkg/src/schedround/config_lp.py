"""Configuration LP, solved exactly by enumerating every job subset.

A configuration is a set of jobs run together on one machine.  There is one
LP column per (machine, configuration); the rows ask for exactly one unit of
configuration per machine and for every job to be covered exactly once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import Instance, smith_cost
from .simplex import simplex

DEFAULT_JOB_CAP = 14
MASS_EPS = 1e-12


class TooManyJobs(ValueError):
    pass


@dataclass(frozen=True)
class ConfigTable:
    """All subsets of the jobs eligible on one machine.

    ``order`` lists the eligible jobs in Smith order; bit ``r`` of a mask
    refers to ``order[r]``.
    """

    machine: int
    order: tuple[int, ...]
    masks: np.ndarray
    costs: np.ndarray

    def jobs(self, mask: int) -> tuple[int, ...]:
        return tuple(sorted(self.order[r] for r in range(len(self.order)) if mask >> r & 1))


def config_table(inst: Instance, machine: int, cap: int = DEFAULT_JOB_CAP) -> ConfigTable:
    if inst.job_count > cap:
        raise TooManyJobs(
            f"{inst.job_count} jobs exceeds the enumeration cap of {cap}; "
            "exact configuration enumeration only works on small instances")
    p, w = inst.p_array[machine], inst.w_array[machine]
    order = sorted(inst.eligible_jobs(machine), key=lambda j: (-w[j] / p[j], j))
    size = 1 << len(order)
    psum = np.zeros(size)
    cost = np.zeros(size)
    # appending the lowest-ratio job last: it completes at p(f)
    for r, j in enumerate(order):
        lo, hi = 1 << r, 1 << (r + 1)
        psum[lo:hi] = psum[:lo] + p[j]
        cost[lo:hi] = cost[:lo] + w[j] * psum[lo:hi]
    return ConfigTable(machine, tuple(order), np.arange(size, dtype=np.int64), cost)


def enumerate_configs(inst: Instance, machine: int, cap: int = DEFAULT_JOB_CAP) -> list[tuple[frozenset, float]]:
    """Every subset of jobs eligible on ``machine`` with its Smith-rule cost."""
    table = config_table(inst, machine, cap)
    return [(frozenset(table.jobs(int(mk))), float(c)) for mk, c in zip(table.masks, table.costs)]


@dataclass
class ConfigLPSolution:
    masses: dict[tuple[int, tuple[int, ...]], float]
    z: np.ndarray
    objective: float
    duality_gap: float = 0.0
    iterations: int = 0

    def machine_masses(self, machine: int) -> list[tuple[tuple[int, ...], float]]:
        return [(f, y) for (i, f), y in self.masses.items() if i == machine]

    def to_dict(self) -> dict:
        return {
            "configurations": [[i, list(f), y] for (i, f), y in sorted(self.masses.items())],
            "z": self.z.tolist(),
            "objective": self.objective,
            "duality_gap": self.duality_gap,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def z_from_masses(masses, m: int, n: int) -> np.ndarray:
    z = np.zeros((m, n))
    for (i, f), y in masses.items():
        for j in f:
            z[i, j] += y
    return z


def solve_config_lp(inst: Instance, cap: int = DEFAULT_JOB_CAP, tol: float = 1e-10) -> ConfigLPSolution:
    """Solve the configuration LP over all enumerated columns.

    Returns an optimal basic solution.  ``duality_gap`` bounds the distance to
    the true optimum: every column is at most one (its machine row forces it),
    so ``b.y + sum(min(0, reduced cost))`` is a valid lower bound.
    """
    m, n = inst.machine_count, inst.job_count
    tables = [config_table(inst, i, cap) for i in range(m)]
    ncols = sum(len(t.masks) for t in tables)
    A = np.zeros((m + n, ncols))
    c = np.empty(ncols)
    col_machine = np.empty(ncols, dtype=np.int64)
    col_mask = np.empty(ncols, dtype=np.int64)
    start = 0
    for t in tables:
        k = len(t.masks)
        sl = slice(start, start + k)
        A[t.machine, sl] = 1.0
        for r, j in enumerate(t.order):
            A[m + j, sl] = (t.masks >> r) & 1
        c[sl] = t.costs
        col_machine[sl] = t.machine
        col_mask[sl] = t.masks
        start += k
    b = np.ones(m + n)

    res = simplex(c, A, b, tol=tol)
    lower = float(b @ res.duals) + float(np.minimum(res.reduced_costs, 0.0).sum())
    masses = {}
    for col in np.flatnonzero(res.x > MASS_EPS):
        i = int(col_machine[col])
        masses[(i, tables[i].jobs(int(col_mask[col])))] = float(res.x[col])
    z = z_from_masses(masses, m, n)
    objective = sum(y * float(c_) for y, c_ in zip(res.x[res.x > MASS_EPS], c[res.x > MASS_EPS]))
    return ConfigLPSolution(masses=masses, z=z, objective=float(objective),
                            duality_gap=max(0.0, float(objective) - lower), iterations=res.iterations)


def lp_cost_on_machine(sol: ConfigLPSolution, inst: Instance, machine: int) -> float:
    """Configuration-LP cost paid on one machine: sum of mass times Smith cost."""
    return sum(y * float(smith_cost(inst, machine, f)) for f, y in sol.machine_masses(machine))


def mixture_solution(inst: Instance, assignments, weights) -> ConfigLPSolution:
    """Feasible LP point from a convex combination of integral assignments.

    Each assignment (a job -> machine sequence) contributes its machine
    configurations with the assignment's weight.
    """
    weights = np.asarray(weights, dtype=float)
    if len(assignments) != len(weights) or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be a probability vector matching the assignments")
    m, n = inst.machine_count, inst.job_count
    masses: dict[tuple[int, tuple[int, ...]], float] = {}
    for phi, lam in zip(assignments, weights):
        if lam <= 0:
            continue
        for i in range(m):
            f = tuple(j for j in range(n) if phi[j] == i)
            if any(not inst.eligible(i, j) for j in f):
                raise ValueError(f"assignment puts an ineligible job on machine {i}")
            masses[(i, f)] = masses.get((i, f), 0.0) + float(lam)
    objective = sum(y * float(smith_cost(inst, i, f)) for (i, f), y in masses.items())
    return ConfigLPSolution(masses=masses, z=z_from_masses(masses, m, n), objective=objective)


def random_mixture(inst: Instance, rng: np.random.Generator, parts: int = 4) -> ConfigLPSolution:
    """Random feasible fractional point: Dirichlet mix of random eligible assignments."""
    choices = [[i for i in range(inst.machine_count) if inst.eligible(i, j)] for j in range(inst.job_count)]
    phis = [[int(rng.choice(c)) for c in choices] for _ in range(parts)]
    return mixture_solution(inst, phis, rng.dirichlet(np.ones(parts)))
