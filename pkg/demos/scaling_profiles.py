"""
Square-root decay and what breaks it
====================================

log2 log2 1/P_N against log2 N for three failure profiles.  A slope of 1/2
means P_N falls like 2^-sqrt(N).
"""

import numpy as np

from relaytree.cli import scaling_rows

rows = scaling_rows(0.1, 0.2, p0=0.1, prior0=0.4, heights=list(range(1, 21)), window=(10, 20))

# ## Fitted slopes over log2 N in [10, 20]

{r["profile"]: round(r["fitted_slope"], 4) for r in rows}

# ## The raw series, ready for plotting

for name in ("none", "quadratic", "constant"):
    ys = np.array([r["log2_log2_inv_P_N"] for r in rows if r["profile"] == name])
    print(name, np.round(ys, 3))

# Constant failures flatten the curve: a fixed fraction of subtrees goes
# silent at every level, so the tree never compounds its evidence fully.
