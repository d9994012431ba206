"""
Single-machine costs and the size/weight swap
=============================================

On one machine the best order is by decreasing weight/size ratio.  Swapping
every size with its weight leaves the cost of every assignment unchanged,
which is what lets the rounding work with machine-independent sizes.
"""

import itertools

from schedround import Instance, smith_cost, swap_instance, total_cost
from schedround.model import schedule_cost, smith_order

# Two jobs on one machine: sizes (1, 2), weights (2, 1).
inst = Instance.from_lists([[1, 2]], [2, 1])
print("order:", smith_order(inst, 0, [0, 1]))
print("cost in Smith order:", smith_cost(inst, 0, [0, 1]))
print("cost in the other order:", schedule_cost(inst, 0, [1, 0]))

# A standard instance has one weight per job and sizes that vary by machine.
inst = Instance.from_lists([[3, 1, 4], [2, 5, None]], [2, 7, 1])
swapped = swap_instance(inst)
print("swapped sizes are machine independent:", swapped.sizes_machine_independent)

# Every eligible assignment costs the same before and after the swap,
# exactly, in rational arithmetic.
choices = [[i for i in range(2) if inst.eligible(i, j)] for j in range(3)]
for phi in itertools.product(*choices):
    print(phi, total_cost(inst, phi), total_cost(swapped, phi))
