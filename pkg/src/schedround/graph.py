"""Random size classes and the marked/unmarked edge multigraph.

Jobs are grouped by size into geometric classes ``[beta*rho^k, beta*rho^(k+1))``
with a random shift ``beta``.  For every (machine, class) pair the edges of
the fractional assignment are visited in descending Smith ratio and the first
``beta*rho^k`` of volume is marked; an edge straddling the threshold is split
into a marked and an unmarked parallel copy.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Instance

DROP_EPS = 1e-12
ROW_TOL = 1e-9


def sample_beta(rng: np.random.Generator, rho: float = 2.0) -> float:
    """``rho**u`` with ``u`` uniform in [0, 1), i.e. log-uniform on [1, rho)."""
    if rho <= 1:
        raise ValueError("rho must exceed 1")
    return float(rho ** rng.random())


def stratified_beta(stratum: int, u: float, strata: int = 10, rho: float = 2.0) -> float:
    """Log-uniform draw restricted to stratum ``stratum`` of ``strata`` equal log-width slices."""
    return float(rho ** ((stratum + u) / strata))


def class_floor(beta: float, rho: float, k: int) -> float:
    return beta * rho ** k


def classify(p: float, beta: float, rho: float = 2.0) -> int:
    """Integer ``k`` with ``beta*rho^k <= p < beta*rho^(k+1)``.

    The log gives a first guess; the boundary is then settled by comparing
    against the same products used as marking thresholds.
    """
    if p <= 0:
        raise ValueError("size must be positive")
    k = math.floor(math.log(p / beta, rho))
    while class_floor(beta, rho, k + 1) <= p:
        k += 1
    while class_floor(beta, rho, k) > p:
        k -= 1
    return k


@dataclass(frozen=True)
class ShiftedClasses:
    rho: float
    beta: float
    class_of_job: tuple[int, ...]

    @classmethod
    def build(cls, sizes, beta: float, rho: float = 2.0) -> "ShiftedClasses":
        if not 1 <= beta < rho:
            raise ValueError(f"beta={beta} outside [1, {rho})")
        return cls(rho, beta, tuple(classify(float(p), beta, rho) for p in sizes))

    def threshold(self, k: int) -> float:
        return class_floor(self.beta, self.rho, k)

    def jobs_in(self, k: int) -> list[int]:
        return [j for j, kk in enumerate(self.class_of_job) if kk == k]

    @property
    def classes(self) -> list[int]:
        return sorted(set(self.class_of_job))


@dataclass(frozen=True)
class Edge:
    id: int
    machine: int
    job: int
    x: float
    marked: bool
    k: int
    sigma: float
    p: float

    @property
    def volume(self) -> float:
        return self.x * self.p


@dataclass
class EdgeGraph:
    """Edges are stored in creation order, which is the Smith order within each (machine, class)."""

    edges: list[Edge]
    classes: ShiftedClasses
    machine_count: int
    job_count: int
    _by_class: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for e in self.edges:
            self._by_class.setdefault(e.k, []).append(e)

    def class_edges(self, k: int) -> list[Edge]:
        return self._by_class.get(k, [])

    @property
    def class_ids(self) -> list[int]:
        return sorted(self._by_class)

    def group(self, machine: int, k: int) -> list[Edge]:
        return [e for e in self.class_edges(k) if e.machine == machine]

    def marked_volume(self, machine: int, k: int) -> float:
        return sum(e.volume for e in self.group(machine, k) if e.marked)

    def volume(self, machine: int, k: int) -> float:
        return sum(e.volume for e in self.group(machine, k))

    def merged_z(self) -> np.ndarray:
        z = np.zeros((self.machine_count, self.job_count))
        for e in self.edges:
            z[e.machine, e.job] += e.x
        return z

    def to_dict(self) -> dict:
        return {
            "beta": self.classes.beta,
            "rho": self.classes.rho,
            "edges": [{"id": e.id, "i": e.machine, "j": e.job, "x": e.x, "marked": e.marked, "k": e.k}
                      for e in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_graph(z: np.ndarray, inst: Instance, classes: ShiftedClasses) -> EdgeGraph:
    """Create the marked/unmarked multigraph from a fractional assignment ``z``."""
    z = np.asarray(z, dtype=float)
    m, n = inst.machine_count, inst.job_count
    if z.shape != (m, n):
        raise ValueError(f"z has shape {z.shape}, expected {(m, n)}")
    cover = z.sum(axis=0)
    bad = np.flatnonzero(np.abs(cover - 1.0) > ROW_TOL)
    if bad.size:
        raise ValueError(f"jobs {bad.tolist()} are covered {cover[bad].tolist()} times, expected 1")
    sizes = inst.sizes
    w = inst.w_array
    edges: list[Edge] = []

    def add(i, j, x, marked, k):
        if x >= DROP_EPS:
            edges.append(Edge(len(edges), i, j, float(x), marked, k, w[i, j] / sizes[j], float(sizes[j])))

    for k in classes.classes:
        jobs = classes.jobs_in(k)
        cap = classes.threshold(k)
        for i in range(m):
            order = sorted((j for j in jobs if z[i, j] > 0), key=lambda j: (-w[i, j] / sizes[j], j))
            v = 0.0
            for j in order:
                pj, zij = sizes[j], z[i, j]
                vol = pj * zij
                if v + vol <= cap:
                    add(i, j, zij, True, k)
                elif v >= cap:
                    add(i, j, zij, False, k)
                else:
                    xm = (cap - v) / pj
                    add(i, j, xm, True, k)
                    add(i, j, zij - xm, False, k)
                v += vol
    return EdgeGraph(edges, classes, m, n)
