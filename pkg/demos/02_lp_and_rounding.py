"""
From the configuration LP to a schedule
=======================================

We solve the configuration LP on a small random instance, draw the random
class shift, build the marked/unmarked edge graph and round it class by
class.  Because LP optima of random instances are nearly always integral,
the second half uses a hand-made fractional point to show the rounding at
work.
"""

import numpy as np

from schedround import ShiftedClasses, build_graph, round_all, solve_config_lp, total_cost
from schedround.analysis import prepare
from schedround.config_lp import mixture_solution
from schedround.harness import InstanceSpec, cmd_solve, gen_instance

inst = gen_instance(InstanceSpec(n=8, m=3, density=0.8), seed=1)
work = prepare(inst)  # swapped copy with machine-independent sizes
sol = solve_config_lp(work)
print("LP value %.4f, duality gap %.1e, %d simplex pivots" % (sol.objective, sol.duality_gap, sol.iterations))

# One full run of the pipeline on the original instance.
report = cmd_solve(inst, seed=7)
print("assignment", report["assignment"], "cost %.4f ratio %.4f" % (report["cost"], report["ratio"]))

# %%
# A fractional point: an even mix of three integral assignments.
rng = np.random.default_rng(0)
phis = [list(rng.integers(0, 3, size=8)) for _ in range(3)]
for phi in phis:
    for j, i in enumerate(phi):
        if not work.eligible(i, j):
            phi[j] = next(k for k in range(3) if work.eligible(k, j))
mix = mixture_solution(work, phis, [1 / 3] * 3)
print("fractional z:\n", np.round(mix.z, 3))

beta = 1.37
graph = build_graph(mix.z, work, ShiftedClasses.build(work.sizes, beta))
for k in graph.class_ids:
    print("class %d: %d edges, %d marked" % (k, len(graph.class_edges(k)),
                                              sum(e.marked for e in graph.class_edges(k))))

# Each class gets its own random stream; the trace lists every structure used.
res = round_all(graph, np.random.SeedSequence(3), trace=True, check=True)
for k, cr in res.per_class.items():
    for step in cr.trace:
        print("class", k, step["kind"], "edges", step["edges"], "branch", step["branch"])
print("rounded assignment", res.machine_of, "cost", float(total_cost(work, res.machine_of)))
print("fractional point cost %.4f" % mix.objective)
