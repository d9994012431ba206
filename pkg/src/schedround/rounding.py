"""Randomized iterative rounding of the marked/unmarked graph, one size class at a time.

Each iteration finds either a cycle of live marked edges or a
pseudo-marked-path (a simple all-marked path between two jobs, extended at
both ends by an edge that is unmarked or is the only live marked edge at its
machine).  A direction vector on that structure keeps every job's total
fixed and keeps the size-weighted marked total fixed at every machine that
still has two or more live marked edges.  A random step along it preserves
every marginal in expectation and drops at least one edge to zero.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graph import Edge, EdgeGraph
from .model import Assignment, Instance

ZERO_EPS = 1e-12
INTEGRAL_TOL = 1e-6
CHECK_TOL = 1e-9


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class Structure:
    """Edges listed as (i0,j1), (j1,i1), (i1,j2), ..., (jt,it), by local edge index."""

    kind: str
    edges: tuple[int, ...]
    machines: tuple[int, ...]
    jobs: tuple[int, ...]


@dataclass
class RoundingState:
    k: int
    edges: list[Edge]
    x: list[float]
    live: list[bool]
    machine_count: int
    job_count: int
    job_edges: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.job_edges:
            for a, e in enumerate(self.edges):
                self.job_edges.setdefault(e.job, []).append(a)

    @classmethod
    def from_graph(cls, graph: EdgeGraph, k: int) -> "RoundingState":
        es = graph.class_edges(k)
        return cls(k, es, [e.x for e in es], [True] * len(es), graph.machine_count, graph.job_count)

    def live_edges(self) -> list[int]:
        return [a for a, ok in enumerate(self.live) if ok]

    def live_marked_at(self, machine: int) -> list[int]:
        return [a for a, e in enumerate(self.edges) if self.live[a] and e.marked and e.machine == machine]

    def marked_volume(self, machine: int) -> float:
        return sum(self.x[a] * self.edges[a].p for a in self.live_marked_at(machine))

    def job_total(self, job: int) -> float:
        return sum(self.x[a] for a, e in enumerate(self.edges) if self.live[a] and e.job == job)

    def jobs(self) -> list[int]:
        return sorted({e.job for e in self.edges})


class _DSU:
    __slots__ = ("parent",)

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, u):
        parent = self.parent
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    def union(self, u, v):
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return False
        self.parent[rv] = ru
        return True


def _tree_path(adj, src, dst):
    """Edge indices along the unique forest path from node ``src`` to ``dst``."""
    if src == dst:
        return []
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, a in adj.get(u, ()):
            if v not in prev:
                prev[v] = (u, a)
                if v == dst:
                    path = []
                    while prev[v] is not None:
                        v, a = prev[v]
                        path.append(a)
                    path.reverse()
                    return path
                queue.append(v)
    raise InvariantViolation(f"no forest path between nodes {src} and {dst}")


def _structure(kind, seq, edges):
    machines = [edges[seq[0]].machine]
    jobs = []
    for pos, a in enumerate(seq):
        if pos % 2 == 0:
            jobs.append(edges[a].job)
        else:
            machines.append(edges[a].machine)
    return Structure(kind, tuple(seq), tuple(machines), tuple(jobs))


def find_structure(state: RoundingState) -> Structure | None:
    """A marked cycle if one exists, else a pseudo-marked-path, else ``None``.

    Machines are graph nodes ``0..m-1`` and job ``j`` is node ``m + j``.
    Edges are scanned in id order so the choice is reproducible.
    """
    edges, live = state.edges, state.live
    m = state.machine_count
    dsu = _DSU(m + state.job_count)
    adj: dict[int, list[tuple[int, int]]] = {}
    marked_deg = [0] * m
    marked_at = [-1] * m
    for a, e in enumerate(edges):
        if not (live[a] and e.marked):
            continue
        u, v = e.machine, m + e.job
        if not dsu.union(u, v):
            # closing edge runs i0 -> j1; the forest path leads from j1 back to i0
            seq = [a] + _tree_path(adj, v, u)
            return _structure("cycle", seq, edges)
        adj.setdefault(u, []).append((v, a))
        adj.setdefault(v, []).append((u, a))
        marked_deg[e.machine] += 1
        marked_at[e.machine] = a

    # end attachments, unmarked ones first, each keyed by the tree of its job
    attach = [a for a, e in enumerate(edges) if live[a] and not e.marked]
    attach += sorted(marked_at[i] for i in range(m) if marked_deg[i] == 1)
    seen: dict[int, int] = {}
    for a in attach:
        root = dsu.find(m + edges[a].job)
        if root in seen:
            first = seen[root]
            ja, jb = m + edges[first].job, m + edges[a].job
            seq = [first] + _tree_path(adj, ja, jb) + [a]
            return _structure("pseudo-path", seq, edges)
        seen[root] = a
    return None


def build_direction(structure: Structure, edges: list[Edge]) -> dict[int, float]:
    """Direction ``a`` supported on the structure, scaled so the first edge gets +1.

    Consecutive edges at a job sum to zero; consecutive marked edges at an
    inner machine balance in size (``a p`` sums to zero).
    """
    seq = structure.edges
    if len(seq) < 2 or len(seq) % 2:
        raise InvariantViolation(f"structure has {len(seq)} edges; expected an even number >= 2")
    a = {seq[0]: 1.0}
    for pos in range(1, len(seq)):
        prev, cur = edges[seq[pos - 1]], edges[seq[pos]]
        if pos % 2 == 1:
            if prev.job != cur.job:
                raise InvariantViolation("consecutive edges do not share a job")
            a[seq[pos]] = -a[seq[pos - 1]]
        else:
            if prev.machine != cur.machine:
                raise InvariantViolation("consecutive edges do not share a machine")
            a[seq[pos]] = -a[seq[pos - 1]] * prev.p / cur.p
    if len(a) != len(seq):
        raise InvariantViolation("structure repeats an edge")
    return a


def step(state: RoundingState, a: dict[int, float], rng: np.random.Generator):
    """Move to ``x + theta a`` w.p. theta'/(theta+theta'), else to ``x - theta' a``.

    Returns ``(theta, theta_prime, went_plus)``.
    """
    x = state.x
    theta = theta_p = float("inf")
    arg_minus: list[int] = []
    arg_plus: list[int] = []
    for e, ae in a.items():
        if ae < 0:
            r = x[e] / -ae
            if r < theta:
                theta, arg_minus = r, [e]
            elif r == theta:
                arg_minus.append(e)
        elif ae > 0:
            r = x[e] / ae
            if r < theta_p:
                theta_p, arg_plus = r, [e]
            elif r == theta_p:
                arg_plus.append(e)
    if not (theta < float("inf") and theta_p < float("inf")):
        raise InvariantViolation("direction is one-signed")
    plus = rng.random() * (theta + theta_p) < theta_p
    if plus:
        for e, ae in a.items():
            x[e] += theta * ae
        binding = arg_minus
    else:
        for e, ae in a.items():
            x[e] -= theta_p * ae
        binding = arg_plus
    for e in binding:
        x[e] = 0.0
    live = state.live
    for e in a:
        if x[e] < ZERO_EPS:
            x[e] = 0.0
            live[e] = False
    # a job left with a single live edge holds it fully
    for j in {state.edges[e].job for e in a}:
        rest = [b for b in state.job_edges[j] if live[b]]
        if len(rest) == 1:
            x[rest[0]] = 1.0
    return theta, theta_p, plus


@dataclass
class ClassRounding:
    k: int
    selected: dict[int, Edge]
    indicator: dict[int, int]
    iterations: int
    trace: list[dict] = field(default_factory=list)


def _check_direction(state, a, multi_marked):
    for j in {state.edges[e].job for e in a}:
        s = sum(ae for e, ae in a.items() if state.edges[e].job == j)
        if abs(s) > CHECK_TOL:
            raise InvariantViolation(f"direction unbalanced at job {j}: {s}")
    for i in multi_marked:
        s = sum(ae * state.edges[e].p for e, ae in a.items()
                if state.edges[e].machine == i and state.edges[e].marked)
        if abs(s) > CHECK_TOL:
            raise InvariantViolation(f"direction changes marked volume at machine {i}: {s}")


def round_class(graph: EdgeGraph, k: int, rng: np.random.Generator, check: bool = False,
                trace: bool = False, on_iteration: Callable | None = None) -> ClassRounding:
    """Run the rounding loop for class ``k`` until no structure remains.

    With ``check=True`` job coverage and marked-volume conservation are
    asserted after every iteration.
    """
    state = RoundingState.from_graph(graph, k)
    edges = state.edges
    limit = len(edges)
    jobs = state.jobs()
    log = []
    it = 0
    while True:
        s = find_structure(state)
        if s is None:
            break
        if it >= limit:
            raise InvariantViolation(f"class {k}: more than {limit} iterations")
        a = build_direction(s, edges)
        if check:
            multi = [i for i in range(state.machine_count) if len(state.live_marked_at(i)) >= 2]
            before = {i: state.marked_volume(i) for i in multi}
            _check_direction(state, a, multi)
        theta, theta_p, plus = step(state, a, rng)
        it += 1
        if check:
            for j in jobs:
                if abs(state.job_total(j) - 1.0) > CHECK_TOL:
                    raise InvariantViolation(f"job {j} total drifted to {state.job_total(j)}")
            for i, vol in before.items():
                if abs(state.marked_volume(i) - vol) > CHECK_TOL:
                    raise InvariantViolation(f"marked volume at machine {i} moved {vol} -> {state.marked_volume(i)}")
        if trace:
            log.append({"kind": s.kind, "edges": [edges[e].id for e in s.edges],
                        "theta": theta, "theta_prime": theta_p, "branch": "+" if plus else "-"})
        if on_iteration is not None:
            on_iteration(state, s, a)

    selected: dict[int, Edge] = {}
    indicator = {}
    for idx, e in enumerate(edges):
        if state.live[idx]:
            if abs(state.x[idx] - 1.0) > INTEGRAL_TOL:
                raise InvariantViolation(f"edge {e.id} ended fractional at {state.x[idx]}")
            if e.job in selected:
                raise InvariantViolation(f"job {e.job} selected twice")
            selected[e.job] = e
            indicator[e.id] = 1
        else:
            indicator[e.id] = 0
    missing = [j for j in jobs if j not in selected]
    if missing:
        raise InvariantViolation(f"jobs {missing} left unassigned in class {k}")
    per_machine = {}
    for e in selected.values():
        if e.marked:
            if e.machine in per_machine:
                raise InvariantViolation(f"machine {e.machine} got two marked edges in class {k}")
            per_machine[e.machine] = e
    return ClassRounding(k, selected, indicator, it, log)


def _zigzag(k: int) -> int:
    return 2 * k if k >= 0 else -2 * k - 1


def class_streams(seed, classes) -> dict[int, np.random.Generator]:
    """Independent generator per class, keyed by (seed, k)."""
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63))
    if isinstance(seed, np.random.SeedSequence):
        entropy, key = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, key = int(seed), ()
    return {k: np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=key + (_zigzag(k),)))
            for k in classes}


@dataclass
class RoundingResult:
    machine_of: tuple[int, ...]
    indicator: dict[int, int]
    iterations: dict[int, int]
    per_class: dict[int, ClassRounding]
    assignment: Assignment | None = None


def round_all(graph: EdgeGraph, rng, inst: Instance | None = None, check: bool = False,
              trace: bool = False, class_order=None) -> RoundingResult:
    """Round every class independently and assemble the job -> machine map.

    ``rng`` may be an int seed, a ``SeedSequence`` or a ``Generator``; each
    class draws from its own stream derived from it.  When ``inst`` is given
    the exact Smith-rule cost is attached as ``result.assignment``.
    """
    ks = graph.class_ids if class_order is None else list(class_order)
    streams = class_streams(rng, graph.class_ids)
    machine_of = [-1] * graph.job_count
    indicator: dict[int, int] = {}
    per_class = {}
    for k in ks:
        res = round_class(graph, k, streams[k], check=check, trace=trace)
        per_class[k] = res
        indicator.update(res.indicator)
        for j, e in res.selected.items():
            machine_of[j] = e.machine
    if any(i < 0 for i in machine_of):
        raise InvariantViolation("some job was not assigned")
    out = RoundingResult(tuple(machine_of), indicator, {k: r.iterations for k, r in per_class.items()}, per_class)
    if inst is not None:
        out.assignment = Assignment.build(inst, machine_of)
    return out
