"""
How many sensors do I need?
===========================

Compare measured decay to the square-root bounds, then invert the lower
bound to size a tree.
"""

import math

from relaytree import (FailureSchedule, evolve, estimate_c, theorem1_upper, theorem23_bounds,
                       theorem4_bounds, required_sensors, classify_decay)
from relaytree.core import log2_inv

# ## Measured bits against the sandwich

sched = FailureSchedule.quadratic(0.05)
traj = evolve((0.02, 0.03), sched, 20, wide=True)
L0 = 0.05
C = estimate_c(traj)
print("C =", C)

for h in range(2, 21, 2):
    N = 2 ** h
    lo, hi = theorem23_bounds(L0, C, N)
    measured = log2_inv(traj[h].L)
    print(f"h={h:2d}  lower={lo:10.2f}  measured={measured:10.2f}  upper={hi:10.2f}")

# ## Unequal priors shift both sides

theorem4_bounds(L0, C, 2 ** 10, 0.4)

theorem1_upper(L0, 2 ** 10)

# ## Sizing

for eps in (1e-2, 1e-6, 1e-12):
    print(eps, required_sensors(eps, 0.1, 0.0))

# The count grows like (log 1/eps)^2.

math.log2(required_sensors(1e-12, 0.1, 0.0))

# ## Is the failure rate decaying fast enough?

[str(classify_decay(s, 20)) for s in (FailureSchedule.quadratic(0.1),
                                      FailureSchedule.geometric(0.1, 0.5),
                                      FailureSchedule.constant(0.1))]
