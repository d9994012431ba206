"""
Expected cost against the LP
============================

Repeating the rounding many times estimates the expected schedule cost.
Per machine it should stay below the conditional bound, and overall the
ratio to the fractional cost should sit well under 1.36.
"""

import numpy as np

from schedround import monte_carlo
from schedround.analysis import prefix_ratio, prepare
from schedround.config_lp import random_mixture
from schedround.harness import InstanceSpec, gen_instance

inst = prepare(gen_instance(InstanceSpec(n=10, m=3, density=0.8), seed=5))
sol = random_mixture(inst, np.random.default_rng(1), parts=5)

rep = monte_carlo(inst, trials=2000, seed=2, sol=sol)
print("fractional cost %.3f, mean rounded cost %.3f +- %.3f" % (rep.lp_objective, rep.cost_mean, 4 * rep.cost_sigma))
print("ratio %.4f +- %.4f" % (rep.ratio, 4 * rep.ratio_sigma))
for mr in rep.machines:
    print("machine %d: LP %.2f  mean %.2f  bound %.2f" % (mr.machine, mr.lp_cost, mr.empirical_wc_mean,
                                                         mr.eq7_bound_mean))

# The bound averaged over the shift, prefix by prefix, against the LP term.
for i in range(inst.machine_count):
    print("machine %d worst prefix ratio %.4f" % (i, np.nanmax(prefix_ratio(sol, inst, i))))
