"""Scheduling instances, Smith-rule costs and the size/weight swap.

Processing times are stored per (machine, job) pair; ``None`` marks a pair
where the job cannot run (infinite processing time).  All instance data is
held as :class:`fractions.Fraction` so the cost identities can be checked
exactly.  Float views (``p_array``/``w_array``) are provided for the
numerical parts of the pipeline.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class IneligibleError(ValueError):
    """A job was placed on a machine where its processing time is infinite."""

    def __init__(self, machine: int, job: int):
        super().__init__(f"job {job} is not eligible on machine {machine} (p_ij = inf)")
        self.machine = machine
        self.job = job


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # decimal literal semantics: 0.1 -> 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to a rational")


def _fraction_json(value: Fraction):
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Instance:
    """Unrelated-machine instance with per-pair sizes and weights.

    ``p[i][j]`` is ``None`` when job ``j`` cannot be processed on machine ``i``.
    ``w[i][j]`` is always present; for a standard instance every column of
    ``w`` is constant.
    """

    p: tuple[tuple[Fraction | None, ...], ...]
    w: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        m = len(self.p)
        if m == 0 or len(self.w) != m:
            raise ValueError("need at least one machine and matching p/w row counts")
        n = len(self.p[0])
        if n == 0:
            raise ValueError("need at least one job")
        for i in range(m):
            if len(self.p[i]) != n or len(self.w[i]) != n:
                raise ValueError(f"row {i} of p or w has wrong length")
            for j in range(n):
                pij = self.p[i][j]
                if pij is not None and pij <= 0:
                    raise ValueError(f"p[{i}][{j}] = {pij} must be positive")
                if self.w[i][j] <= 0:
                    raise ValueError(f"w[{i}][{j}] = {self.w[i][j]} must be positive")
        for j in range(n):
            if all(self.p[i][j] is None for i in range(m)):
                raise ValueError(f"job {j} has no eligible machine")

    @classmethod
    def from_lists(cls, p: Sequence[Sequence], w: Sequence) -> "Instance":
        """Build from nested lists; ``w`` may be a vector (standard instance) or a matrix."""
        pp = tuple(tuple(None if v is None or v == float("inf") else to_fraction(v) for v in row) for row in p)
        m = len(pp)
        if len(w) and not isinstance(w[0], (list, tuple)):
            wrow = tuple(to_fraction(v) for v in w)
            ww = tuple(wrow for _ in range(m))
        else:
            ww = tuple(tuple(to_fraction(v) for v in row) for row in w)
        return cls(pp, ww)

    @property
    def machine_count(self) -> int:
        return len(self.p)

    @property
    def job_count(self) -> int:
        return len(self.p[0])

    def eligible(self, i: int, j: int) -> bool:
        return self.p[i][j] is not None

    def eligible_jobs(self, i: int) -> list[int]:
        return [j for j in range(self.job_count) if self.p[i][j] is not None]

    @cached_property
    def sizes_machine_independent(self) -> bool:
        return all(len({self.p[i][j] for i in range(self.machine_count) if self.p[i][j] is not None}) == 1
                   for j in range(self.job_count))

    @cached_property
    def weights_machine_independent(self) -> bool:
        return all(len({self.w[i][j] for i in range(self.machine_count) if self.p[i][j] is not None}) == 1
                   for j in range(self.job_count))

    def job_size(self, j: int) -> Fraction:
        """Machine-independent size of job ``j``; only valid after a swap."""
        if not self.sizes_machine_independent:
            raise ValueError("sizes depend on the machine; swap a standard instance first")
        return next(self.p[i][j] for i in range(self.machine_count) if self.p[i][j] is not None)

    @cached_property
    def p_array(self) -> np.ndarray:
        return np.array([[np.inf if v is None else float(v) for v in row] for row in self.p])

    @cached_property
    def w_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.w])

    @cached_property
    def sizes(self) -> np.ndarray:
        """Float vector of machine-independent sizes."""
        return np.array([float(self.job_size(j)) for j in range(self.job_count)])

    def to_dict(self) -> dict:
        m, n = self.machine_count, self.job_count
        p = [[None if v is None else _fraction_json(v) for v in row] for row in self.p]
        dependent = not self.weights_machine_independent
        if dependent:
            w = [[_fraction_json(v) for v in row] for row in self.w]
        else:
            w = [_fraction_json(next(self.w[i][j] for i in range(m) if self.p[i][j] is not None))
                 for j in range(n)]
        return {"machines": m, "jobs": n, "p": p, "w": w, "weights_machine_dependent": dependent}

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        inst = cls.from_lists(data["p"], data["w"])
        if inst.machine_count != data["machines"] or inst.job_count != data["jobs"]:
            raise ValueError("machines/jobs counts disagree with the p matrix")
        w = data["w"]
        if not data.get("weights_machine_dependent", False) and len(w) and isinstance(w[0], list):
            if not inst.weights_machine_independent:
                raise ValueError("weights_machine_dependent is false but w varies across machines")
        return inst

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Assignment:
    """Integral job -> machine map together with its Smith-rule cost."""

    machine_of: tuple[int, ...]
    total_cost: Fraction = field(compare=False)

    @classmethod
    def build(cls, inst: Instance, machine_of: Iterable[int]) -> "Assignment":
        phi = tuple(int(i) for i in machine_of)
        return cls(phi, total_cost(inst, phi))

    def jobs_on(self, machine: int) -> list[int]:
        return [j for j, i in enumerate(self.machine_of) if i == machine]


def swap_instance(inst: Instance) -> Instance:
    """Exchange sizes and weights on every eligible pair.

    Ineligible pairs stay ineligible and keep their (unused) weight, so the
    swap is an involution.
    """
    p = tuple(tuple(None if inst.p[i][j] is None else inst.w[i][j] for j in range(inst.job_count))
              for i in range(inst.machine_count))
    w = tuple(tuple(inst.w[i][j] if inst.p[i][j] is None else inst.p[i][j] for j in range(inst.job_count))
              for i in range(inst.machine_count))
    return Instance(p, w)


def smith_order(inst: Instance, machine: int, jobs: Iterable[int]) -> list[int]:
    """Jobs sorted by descending w/p on ``machine``; ties by ascending index."""
    jobs = list(jobs)
    for j in jobs:
        if inst.p[machine][j] is None:
            raise IneligibleError(machine, j)
    return sorted(jobs, key=lambda j: (-(inst.w[machine][j] / inst.p[machine][j]), j))


def smith_cost(inst: Instance, machine: int, jobs: Iterable[int]) -> Fraction:
    """Weighted completion time of ``jobs`` on ``machine`` under the Smith rule.

    Uses the order-free pair form: sum of p*w plus, for every unordered pair,
    the smaller of the two cross products.
    """
    jobs = sorted(set(jobs))
    p, w = inst.p[machine], inst.w[machine]
    for j in jobs:
        if p[j] is None:
            raise IneligibleError(machine, j)
    cost = Fraction(0)
    for a, j in enumerate(jobs):
        cost += p[j] * w[j]
        for jj in jobs[a + 1:]:
            cost += min(p[j] * w[jj], p[jj] * w[j])
    return cost


def schedule_cost(inst: Instance, machine: int, order: Sequence[int]) -> Fraction:
    """Weighted completion time when ``order`` is processed exactly as given."""
    p, w = inst.p[machine], inst.w[machine]
    t = Fraction(0)
    cost = Fraction(0)
    for j in order:
        if p[j] is None:
            raise IneligibleError(machine, j)
        t += p[j]
        cost += w[j] * t
    return cost


def sequential_cost(inst: Instance, machine: int, jobs: Iterable[int]) -> Fraction:
    """Same quantity as :func:`smith_cost`, by simulating the Smith-order schedule."""
    return schedule_cost(inst, machine, smith_order(inst, machine, jobs))


def total_cost(inst: Instance, asg: Assignment | Sequence[int]) -> Fraction:
    phi = asg.machine_of if isinstance(asg, Assignment) else tuple(asg)
    if len(phi) != inst.job_count:
        raise ValueError(f"assignment covers {len(phi)} jobs, instance has {inst.job_count}")
    per_machine: dict[int, list[int]] = {}
    for j, i in enumerate(phi):
        if not 0 <= i < inst.machine_count:
            raise ValueError(f"job {j} assigned to unknown machine {i}")
        per_machine.setdefault(i, []).append(j)
    return sum((smith_cost(inst, i, js) for i, js in sorted(per_machine.items())), Fraction(0))


def machine_costs_float(inst: Instance, machine_of: Sequence[int]) -> np.ndarray:
    """Per-machine Smith cost in double precision (fast path for experiments)."""
    p, w = inst.p_array, inst.w_array
    out = np.zeros(inst.machine_count)
    for i in range(inst.machine_count):
        jobs = [j for j, ii in enumerate(machine_of) if ii == i]
        jobs.sort(key=lambda j: (-w[i, j] / p[i, j], j))
        t = 0.0
        c = 0.0
        for j in jobs:
            t += p[i, j]
            c += w[i, j] * t
        out[i] = c
    return out
