"""
Following one tree up, level by level
=====================================

Start every leaf with the same error pair, let nodes and links fail on a
quadratic schedule, and watch where the pair goes.
"""

# ## Imports

import numpy as np

from relaytree import FailureSchedule, evolve, classify, b_upper_boundary, ru_upper_boundary

# ## A trajectory

sched = FailureSchedule.quadratic(0.1)
traj = evolve((0.1, 0.2), sched, 12, wide=True)

for lv in traj.levels:
    print(lv.k, float(lv.triplet.alpha), float(lv.triplet.beta), float(lv.L), lv.region)

# The two error types swap sides almost every level: OR and AND rules alternate.

[str(lv.region) for lv in traj.levels[:6]]

# ## Starting far from the diagonal

far = evolve((0.01, 0.9), sched, 8)
[(lv.k, str(lv.region)) for lv in far.levels]

# It drifts toward the diagonal, enters the invariant region, and stays.

# ## The boundary curves at q = 0.1

alphas = np.linspace(0, 0.5, 6)
np.column_stack([alphas, b_upper_boundary(alphas, 0.1), ru_upper_boundary(alphas, 0.1)])

classify((0.1, 0.3, 0.1)), classify((0.1, 0.5, 0.1)), classify((0.1, 0.7, 0.1))
