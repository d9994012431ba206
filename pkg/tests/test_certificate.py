import dataclasses

import numpy as np
import pytest

from schedround.certificate import (Axis, CertificateRow, SizeConfigCase, TYPES_13, TYPES_14, case_tables,
                                    check_interval, check_table, default_rows, git_blob_hash, interval_endpoints,
                                    max_over_case, objective13, objective14, search_params, sub1_threshold)

ROWS = default_rows()


def test_case_counts():
    c13, c14 = case_tables()
    assert len(c13) == 6 and len(c14) == 23
    assert len({c.name for c in c13}) == 6 and len({c.name for c in c14}) == 23
    for cases, types in ((c13, TYPES_13), (c14, TYPES_14)):
        for c in cases:
            if not c.fixed:
                t, lo, hi = c.flexible
                assert (lo, hi) == types[t]


def test_table_mean_alpha():
    # plain sum of the ten published alpha values
    alphas = [1.376228, 1.370445, 1.364426, 1.356049, 1.349022, 1.344238, 1.341530, 1.340912, 1.356413, 1.375]
    assert sum(alphas) / 10 == pytest.approx(1.3574263, abs=1e-7)
    res = check_table(ROWS)
    assert res.passed
    assert res.mean_alpha == pytest.approx(1.3574263, abs=1e-6)
    assert all(r.worst_value <= 1e-9 for r in res.intervals)


def test_empty_g_values():
    assert objective13([], 1.4, 2.5, 2.0, 0.1, 0.2) == pytest.approx(0.5 * 6.25 - 5.0 - 0.5 + 0.5 * 0.05)
    assert objective14([], 1.4, 2.5, 2.0, 0.1, 0.2, 0.3) == pytest.approx(0.5 * 6.25 - 5.0 + 0.5 * 0.14)


def test_row1_two_small_elements():
    r = ROWS[0]
    ah = r.alpha / 2
    expect = (1 - ah) * 4 - ah * 4 + 2.06 * 2 + 2 - 4.12 - 0.5 + 0.5 * 0.08 ** 2
    got = objective13([(2.0, "s")], r.alpha, 2.0, r.mu13, r.l1_13, r.l2_13)
    assert got == pytest.approx(expect)
    assert got <= 0


def test_type_routing():
    base = objective14([(2.0, "0")], 1.4, 3.0, 2.5, 0.3, 0.0, 0.0)
    assert base == pytest.approx(objective14([(2.0, "0")], 1.4, 3.0, 2.5, 0.0, 0.0, 0.0) - 0.6 + 0.045)
    assert objective14([(2.0, "1")], 1.4, 3.0, 2.5, 0.3, 0.0, 0.0) == pytest.approx(
        objective14([(2.0, "1")], 1.4, 3.0, 2.5, 0.0, 0.0, 0.0) + 0.045)


def test_big_singleton_row1():
    r = ROWS[0]
    v = objective14([(8.0, "b")], r.alpha, r.L_hi, *r.params14)
    assert np.isfinite(v) and v <= 0


def test_max_over_case_vertex_positions():
    case = SizeConfigCase("t", (), ("1", 2.0, 4.0))
    # alpha = 2: q = -1, vertex at (mu - l1) / 2
    v, a = max_over_case(case, 2.0, 3.0, (10.0, 0.0, 0.0), 13)
    assert a == 4.0
    v, a = max_over_case(case, 2.0, 3.0, (6.0, 0.0, 0.0), 13)
    assert a == 3.0
    lo = objective13([(2.0, "1")], 2.0, 3.0, 6.0, 0.0, 0.0)
    hi = objective13([(4.0, "1")], 2.0, 3.0, 6.0, 0.0, 0.0)
    assert v >= max(lo, hi)
    assert v == pytest.approx(objective13([(3.0, "1")], 2.0, 3.0, 6.0, 0.0, 0.0))
    nof, a = max_over_case(SizeConfigCase("f", ((1.0, "s"),), None), 1.3, 3.0, (2.0, 0.1, 0.1), 13)
    assert a is None
    with pytest.raises(ValueError):
        max_over_case(case, 1.0, 3.0, (6.0, 0.0, 0.0), 13)


def test_case_max_matches_dense_scan():
    c13, c14 = case_tables()
    for row in ROWS:
        for L in (row.L_lo, row.L_hi):
            for which, cases, params, obj in ((13, c13, row.params13, objective13),
                                             (14, c14, row.params14, objective14)):
                for case in cases:
                    v, _ = max_over_case(case, row.alpha, L, params, which)
                    if case.flexible is None:
                        continue
                    t, lo, hi = case.flexible
                    grid = np.linspace(lo, min(hi, 40.0), 801)
                    scan = max(obj(list(case.fixed) + [(a, t)], row.alpha, L, *params) for a in grid)
                    assert scan <= v + 1e-9


def test_objective_convex_in_L_and_monotone_in_alpha():
    c13, c14 = case_tables()
    rng = np.random.default_rng(0)
    for row in ROWS:
        lo, hi = row.L_lo, row.L_hi
        for which, cases, params in ((13, c13, row.params13), (14, c14, row.params14)):
            for case in cases:
                ends = max(max_over_case(case, row.alpha, L, params, which)[0] for L in (lo, hi))
                for L in np.linspace(lo, hi, 12)[1:-1]:
                    assert max_over_case(case, row.alpha, L, params, which)[0] <= ends + 1e-12
                L = rng.uniform(lo, hi)
                a1 = max_over_case(case, row.alpha, L, params, which)[0]
                a2 = max_over_case(case, row.alpha + 0.01, L, params, which)[0]
                assert a2 <= a1 + 1e-12


def test_threshold_examples():
    assert sub1_threshold(interval_endpoints(10)[1]) == pytest.approx(1.375)
    assert sub1_threshold(interval_endpoints(1)[1]) == pytest.approx(1.5 - 2 / 2 ** 2.2)
    assert round(sub1_threshold(interval_endpoints(1)[1]), 5) == 1.06472
    assert check_interval(ROWS[9]).sub1_ok


def test_corrupted_row_fails():
    bad = dataclasses.replace(ROWS[0], alpha=1.0 + 1e-6)
    res = check_interval(bad)
    assert not res.passed and res.violations
    assert res.violations[0].o == 1
    rows = list(ROWS)
    rows[3] = dataclasses.replace(rows[3], mu14=rows[3].mu14 + 0.3)
    assert not check_table(rows).passed


def test_all_alpha_one_and_a_half_fails_on_mean():
    rows = [dataclasses.replace(r, alpha=1.5) for r in ROWS]
    res = check_table(rows)
    assert all(r.passed for r in res.intervals)
    assert not res.passed and res.mean_alpha == pytest.approx(1.5)


def test_row_count_and_validation():
    with pytest.raises(ValueError):
        check_table(ROWS[:9])
    with pytest.raises(ValueError):
        CertificateRow(11, 1.3, 1, 0, 0, 1, 0, 0, 0)
    with pytest.raises(ValueError):
        CertificateRow(1, 1.3, -1, 0, 0, 1, 0, 0, 0)


def test_degenerate_grid_recovers_published_alpha():
    r = ROWS[6]
    g13 = [Axis(v, v, 0.01) for v in r.params13]
    g14 = [Axis(v, v, 0.01) for v in r.params14]
    found = search_params(7, g13, g14, rounds=1)
    assert found.alpha <= r.alpha + 1e-6
    assert check_interval(found).passed


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        search_params(1, [Axis(1, 0, 0.1)] * 3, [Axis(0, 1, 0.1)] * 4)


def test_infeasible_grid_rejected():
    # mu = 0 leaves the objective at 1/2 L^2 - 1/2 > 0 for the empty element
    with pytest.raises(ValueError, match="widen"):
        search_params(1, [Axis(0, 0, 0.1)] * 3, [Axis(0, 0, 0.1)] * 4, rounds=1)


def test_git_blob_hash():
    assert git_blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    assert git_blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"
