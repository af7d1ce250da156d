"""
Checking the recursion two ways
===============================

The exact enumeration and the pruned-tree simulation never call the
recursion, so agreement with it means something.
"""

from relaytree import FailureSchedule, evolve, exact_pair_distribution, monte_carlo

sched = FailureSchedule.quadratic(0.1)

# ## Exact law at height 4

dist = exact_pair_distribution((0.1, 0.2), sched, 4)
len(dist), dist.weight.sum()

dist.mean

root = evolve((0.1, 0.2), sched, 4).root
float(root.alpha), float(root.beta)

# ## Simulation at height 6

est = monte_carlo((0.1, 0.2), sched, 6, 100_000, seed=0, workers=4)
rec = evolve((0.1, 0.2), sched, 6).root

for name, got, se, want in [("type I", est.est_typeI, est.se_typeI, rec.alpha),
                            ("type II", est.est_typeII, est.se_typeII, rec.beta)]:
    print(f"{name:8s} {got:.6f} +- {se:.6f}   recursion {float(want):.6f}   z={(got - want) / se:+.2f}")

# Same seed, different worker count: same numbers.

print(monte_carlo((0.1, 0.2), sched, 6, 20_000, seed=1, workers=1)
      == monte_carlo((0.1, 0.2), sched, 6, 20_000, seed=1, workers=3))
