"""Checker for the Lagrangian-multiplier certificate of the approximation ratio.

The scaled total volume ``L`` ranges over ``[2, 4)``, cut into ten
log-equal intervals.  For each interval a row fixes a target ratio ``alpha``
and multipliers for two relaxed sub-programs.  Each sub-program bound is a
maximum over a finite list of size-configuration cases; each case has at
most one free element ``a`` and the objective is a concave quadratic in
``a`` (leading coefficient ``1 - alpha``), so its maximum over the allowed
range is found in closed form.  The objective depends on ``L`` only through
the convex ``L^2/2 - mu L``, so checking both interval endpoints suffices.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Sequence

import numpy as np

MARGIN = 1e-9
INTERVALS = 10
INF = math.inf

# type -> closed value range; the open end at 0 of type-s is widened to 0
TYPES_13 = {"s": (0.0, 2.0), "1": (2.0, 4.0), "2": (4.0, 8.0), "b": (8.0, INF)}
TYPES_14 = {"s": (0.0, 1.0), "0": (1.0, 2.0), "1": (2.0, 4.0), "2": (4.0, 8.0), "b": (8.0, INF)}


@dataclass(frozen=True)
class SizeConfigCase:
    """Fixed elements as ``(value, type)`` plus at most one flexible element ``(type, lo, hi)``."""

    name: str
    fixed: tuple[tuple[float, str], ...]
    flexible: tuple[str, float, float] | None

    def fixed_sum(self) -> float:
        return sum(v for v, _ in self.fixed)

    def fixed_sq(self) -> float:
        return sum(v * v for v, _ in self.fixed)

    def fixed_v(self, t: str) -> float:
        return sum(v for v, tt in self.fixed if tt == t)


def _flex(table, t):
    lo, hi = table[t]
    return (t, lo, hi)


def case_tables() -> tuple[list[SizeConfigCase], list[SizeConfigCase]]:
    """The 6 cases for the first Lagrangian bound and the 23 for the second."""
    c13 = [SizeConfigCase(f"1{t}", (), _flex(TYPES_13, t)) for t in ("s", "1", "2", "b")]
    c13 += [SizeConfigCase(f"2s+{t}", ((2.0, "s"),), _flex(TYPES_13, t)) for t in ("s", "1")]

    c14 = [SizeConfigCase(f"1{t}", (), _flex(TYPES_14, t)) for t in ("s", "0", "1", "2", "b")]
    heads = [(1.0, "s"), (2.0, "0"), (2.0, "1")]
    for h in heads:
        for t in ("s", "0", "1"):
            c14.append(SizeConfigCase(f"{h[0]:g}{h[1]}+{t}", (h,), _flex(TYPES_14, t)))
    for h in heads:
        for t in ("s", "0"):
            c14.append(SizeConfigCase(f"1s+{h[0]:g}{h[1]}+{t}", ((1.0, "s"), h), _flex(TYPES_14, t)))
    c14.append(SizeConfigCase("1s+1s+1", ((1.0, "s"), (1.0, "s")), _flex(TYPES_14, "1")))
    for t in ("s", "0"):
        c14.append(SizeConfigCase(f"1s+1s+1s+{t}", ((1.0, "s"),) * 3, _flex(TYPES_14, t)))
    return c13, c14


@dataclass(frozen=True)
class CertificateRow:
    o: int
    alpha: float
    mu13: float
    l1_13: float
    l2_13: float
    mu14: float
    l0: float
    l1: float
    l2: float

    def __post_init__(self):
        if not 1 <= self.o <= INTERVALS:
            raise ValueError(f"interval index {self.o} outside 1..{INTERVALS}")
        if min(self.mu13, self.l1_13, self.l2_13, self.mu14, self.l0, self.l1, self.l2) < 0:
            raise ValueError(f"row {self.o}: multipliers must be non-negative")

    @property
    def L_lo(self) -> float:
        return interval_endpoints(self.o)[0]

    @property
    def L_hi(self) -> float:
        return interval_endpoints(self.o)[1]

    @property
    def sub1_threshold(self) -> float:
        return sub1_threshold(self.L_hi)

    @property
    def params13(self) -> tuple[float, float, float]:
        return (self.mu13, self.l1_13, self.l2_13)

    @property
    def params14(self) -> tuple[float, float, float, float]:
        return (self.mu14, self.l0, self.l1, self.l2)


_ENDPOINTS = [2.0 ** (1 + o / INTERVALS) for o in range(INTERVALS + 1)]


def interval_endpoints(o: int) -> tuple[float, float]:
    return _ENDPOINTS[o - 1], _ENDPOINTS[o]


def sub1_threshold(L: float) -> float:
    """Smallest ratio for which the bound with both small classes saturated holds at ``L``."""
    return 1.5 - 2.0 / (L * L)


def _vsum(g, t):
    return sum(a for a, tt in g if tt == t)


def objective13(g, alpha, L, mu, l1, l2):
    """Lagrangian bound for the sub-program where class 0 is saturated; ``g`` is ``[(a, type), ...]``."""
    s = sum(a for a, _ in g)
    sq = sum(a * a for a, _ in g)
    return ((1 - alpha / 2) * sq - alpha / 2 * s * s + mu * s - l1 * _vsum(g, "1") - l2 * _vsum(g, "2")
            + 0.5 * L * L - mu * L - 0.5 + 0.5 * (l1 * l1 + l2 * l2))


def objective14(g, alpha, L, mu, l0, l1, l2):
    """Lagrangian bound for the sub-program with no class saturated."""
    s = sum(a for a, _ in g)
    sq = sum(a * a for a, _ in g)
    return ((1 - alpha / 2) * sq - alpha / 2 * s * s + mu * s
            - l0 * _vsum(g, "0") - l1 * _vsum(g, "1") - l2 * _vsum(g, "2")
            + 0.5 * L * L - mu * L + 0.5 * (l0 * l0 + l1 * l1 + l2 * l2))


def _coefficients(case: SizeConfigCase, alpha, L, params, which):
    """Objective as ``q a^2 + r a + c`` in the flexible element (arrays broadcast over params)."""
    if which == 13:
        mu, l1, l2 = params
        lam = {"1": l1, "2": l2}
        const_extra = -0.5 + 0.5 * (l1 * l1 + l2 * l2)
    elif which == 14:
        mu, l0, l1, l2 = params
        lam = {"0": l0, "1": l1, "2": l2}
        const_extra = 0.5 * (l0 * l0 + l1 * l1 + l2 * l2)
    else:
        raise ValueError("which must be 13 or 14")
    F, Fsq = case.fixed_sum(), case.fixed_sq()
    c = ((1 - alpha / 2) * Fsq - alpha / 2 * F * F + mu * F
         - sum(lam[t] * case.fixed_v(t) for t in lam)
         + 0.5 * L * L - mu * L + const_extra)
    if case.flexible is None:
        return 0.0, 0.0, c
    t = case.flexible[0]
    q = 1 - alpha
    r = -alpha * F + mu - lam.get(t, 0.0)
    return q, r, c


def max_over_case(case: SizeConfigCase, alpha, L, params, which):
    """Maximum of the objective over the flexible element's range; returns ``(value, argmax)``.

    Works elementwise when ``alpha``/``params`` are arrays.
    """
    if np.any(np.asarray(alpha) <= 1):
        raise ValueError("alpha must exceed 1 for the case objective to be concave")
    q, r, c = _coefficients(case, alpha, L, params, which)
    if case.flexible is None:
        return c, None
    _, lo, hi = case.flexible
    vertex = -r / (2 * q)
    a = np.clip(vertex, lo, hi) if math.isfinite(hi) else np.maximum(vertex, lo)
    return q * a * a + r * a + c, a


@dataclass
class Violation:
    o: int
    L: float
    program: int
    case: str
    a: float | None
    value: float

    def __str__(self):
        where = "" if self.a is None else f" at a={self.a:.6g}"
        return (f"interval {self.o}, L={self.L:.6f}, program {self.program}, case {self.case}{where}: "
                f"value {self.value:.3e} > {MARGIN:g}")


@dataclass
class IntervalResult:
    o: int
    passed: bool
    sub1_ok: bool
    worst_value: float
    worst: Violation
    violations: list[Violation]
    evaluations: int


def check_interval(row: CertificateRow, margin: float = MARGIN) -> IntervalResult:
    """Check one row: the saturated-class threshold and every case at both ``L`` endpoints."""
    if row.alpha <= 1:
        raise ValueError(f"row {row.o}: alpha must exceed 1")
    c13, c14 = case_tables()
    sub1_ok = row.alpha >= row.sub1_threshold - margin
    worst = None
    violations = []
    n = 0
    for L in (row.L_lo, row.L_hi):
        for which, cases, params in ((13, c13, row.params13), (14, c14, row.params14)):
            for case in cases:
                val, a = max_over_case(case, row.alpha, L, params, which)
                val = float(val)
                n += 1
                v = Violation(row.o, L, which, case.name, None if a is None else float(a), val)
                if worst is None or val > worst.value:
                    worst = v
                if val > margin:
                    violations.append(v)
    return IntervalResult(row.o, sub1_ok and not violations, sub1_ok, worst.value, worst, violations, n)


@dataclass
class TableResult:
    passed: bool
    mean_alpha: float
    intervals: list[IntervalResult]

    def report(self) -> str:
        lines = []
        for r in self.intervals:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"interval {r.o:2d}: {status}  worst case value {r.worst_value:+.3e} ({r.worst.case}, "
                         f"program {r.worst.program}, L={r.worst.L:.4f})")
            if not r.sub1_ok:
                lines.append(f"    alpha below 3/2 - 2/L^2 at the right endpoint")
            for v in r.violations:
                lines.append(f"    {v}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"mean alpha = {self.mean_alpha:.7f} (< 1.36 required)")
        lines.append(f"verdict: {verdict}")
        return "\n".join(lines)


def check_table(rows: Sequence[CertificateRow], margin: float = MARGIN, target: float = 1.36) -> TableResult:
    if len(rows) != INTERVALS:
        raise ValueError(f"expected {INTERVALS} rows, got {len(rows)}")
    if sorted(r.o for r in rows) != list(range(1, INTERVALS + 1)):
        raise ValueError("rows must cover intervals 1..10 exactly once")
    rows = sorted(rows, key=lambda r: r.o)
    results = [check_interval(r, margin) for r in rows]
    mean = float(np.mean([r.alpha for r in rows]))
    return TableResult(all(r.passed for r in results) and mean < target, mean, results)


def load_rows(data) -> list[CertificateRow]:
    """Rows from parsed certificate JSON (a list of row objects)."""
    if not isinstance(data, list):
        raise ValueError("certificate must be a JSON array of rows")
    return [CertificateRow(**{k: (int(v) if k == "o" else float(v)) for k, v in item.items()}) for item in data]


def default_certificate_text() -> str:
    return resources.files(__package__).joinpath("data/table1.json").read_text()


def default_rows() -> list[CertificateRow]:
    return load_rows(json.loads(default_certificate_text()))


def rows_to_json(rows: Sequence[CertificateRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2)


def git_blob_hash(content: bytes) -> str:
    """Content hash as ``git hash-object`` computes it."""
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    step: float

    def values(self) -> np.ndarray:
        if self.hi < self.lo or self.step <= 0:
            raise ValueError(f"empty search range {self}")
        count = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return np.maximum(self.lo + self.step * np.arange(count), 0.0)


def _max_over_cases(cases, alpha, L_values, params, which):
    worst = None
    for L in L_values:
        for case in cases:
            v, _ = max_over_case(case, alpha, L, params, which)
            worst = v if worst is None else np.maximum(worst, v)
    return worst


def min_feasible_alpha(o: int, params, which: int, tol: float = 1e-8, margin: float = MARGIN,
                       lo: float = 1.0 + 1e-9, hi: float = 1.5):
    """Smallest alpha (to ``tol``) for which all cases are ``<= margin``, per parameter vector.

    ``params`` is a tuple of equally-shaped arrays.  Infeasible points get ``inf``.
    """
    c13, c14 = case_tables()
    cases = c13 if which == 13 else c14
    Ls = interval_endpoints(o)
    shape = np.broadcast(*params).shape
    a_lo = np.full(shape, lo)
    a_hi = np.full(shape, hi)
    ok_hi = _max_over_cases(cases, a_hi, Ls, params, which) <= margin
    # feasibility only improves with alpha, so bisect
    while np.max(a_hi - a_lo) > tol:
        mid = 0.5 * (a_lo + a_hi)
        ok = _max_over_cases(cases, mid, Ls, params, which) <= margin
        a_hi = np.where(ok, mid, a_hi)
        a_lo = np.where(ok, a_lo, mid)
    return np.where(ok_hi, a_hi, np.inf)


def _grid_search(o, axes: Sequence[Axis], which, rounds, shrink, tol):
    best_alpha, best = np.inf, None
    for rnd in range(rounds):
        grids = np.meshgrid(*[ax.values() for ax in axes], indexing="ij")
        params = tuple(g.ravel() for g in grids)
        alphas = min_feasible_alpha(o, params, which, tol=tol)
        idx = int(np.argmin(alphas))
        if alphas[idx] < best_alpha:
            best_alpha = float(alphas[idx])
            best = tuple(float(p[idx]) for p in params)
        if best is None:
            break
        axes = [Axis(max(0.0, c - ax.step), c + ax.step, ax.step / shrink) for c, ax in zip(best, axes)]
    return best_alpha, best


def search_params(o: int, grid13: Sequence[Axis], grid14: Sequence[Axis], rounds: int = 3,
                  shrink: float = 10.0, tol: float = 1e-7) -> CertificateRow:
    """Grid search over multipliers with bisection on alpha, refined ``rounds`` times.

    Each refinement searches one old step either side of the incumbent with
    steps ``shrink`` times smaller.  The returned alpha is the largest of the
    saturated-class threshold and the two multiplier bounds.
    """
    if len(grid13) != 3 or len(grid14) != 4:
        raise ValueError("grid13 needs (mu, l1, l2) axes and grid14 needs (mu, l0, l1, l2) axes")
    for ax in (*grid13, *grid14):
        ax.values()
    a13, p13 = _grid_search(o, grid13, 13, rounds, shrink, tol)
    a14, p14 = _grid_search(o, grid14, 14, rounds, shrink, tol)
    if not (math.isfinite(a13) and math.isfinite(a14)):
        raise ValueError(f"interval {o}: no feasible multipliers with alpha <= 1.5 in the grid; widen the bounds")
    alpha = max(a13, a14, sub1_threshold(interval_endpoints(o)[1]))
    return CertificateRow(o, alpha, *p13, *p14)


def grid_around(row: CertificateRow, half_width: float = 0.05, step: float = 0.01):
    """Axes centred on a row's multipliers, e.g. to re-derive a published row."""
    def ax(c):
        return Axis(max(0.0, c - half_width), c + half_width, step)
    return [ax(v) for v in row.params13], [ax(v) for v in row.params14]
