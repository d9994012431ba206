"""
Checking the multiplier table
=============================

The ratio argument reduces to checking finitely many one-variable concave
quadratics per interval of the scaled volume.  The bundled table passes
with mean ratio 1.3574263, and a local grid search recovers a row.
"""

import dataclasses

from schedround.certificate import check_interval, check_table, default_rows, grid_around, search_params

rows = default_rows()
result = check_table(rows)
print(result.report())

# Lowering one ratio below what its multipliers support is caught, with the
# offending case named.
bad = dataclasses.replace(rows[4], alpha=1.30)
print(check_interval(bad).violations[0])

# Re-derive interval 5 from a coarse grid around the published multipliers.
g13, g14 = grid_around(rows[4], half_width=0.04, step=0.02)
found = search_params(5, g13, g14, rounds=2)
print("searched alpha %.6f, published %.6f" % (found.alpha, rows[4].alpha))
