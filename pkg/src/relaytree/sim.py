"""Two independent checks of the triplet recursion.

:func:`exact_pair_distribution` enumerates, level by level, the exact law of
a node's (Type I, Type II) error pair conditioned on the node having data.
:func:`monte_carlo` prunes random trees and pushes one-bit decisions through
them.  Neither calls :func:`relaytree.core.fuse_step`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import FailureSchedule

ORACLE_MAX_HEIGHT = 5
MERGE_TOL = 1e-14
BLOCK = 4096
Z95 = 1.959963984540054


@dataclass
class PairDistribution:
    """Exact conditional law of the error pair at the root.

    ``typeI[i], typeII[i]`` is an atom and ``weight[i]`` its probability
    given the root has data.  ``silence[k]`` is the exact probability that a
    level-``k`` node's parent hears nothing from it.
    """

    typeI: np.ndarray
    typeII: np.ndarray
    weight: np.ndarray
    data_prob: float
    silence: tuple
    rules: tuple

    def __len__(self):
        return len(self.weight)

    @property
    def mean(self) -> tuple:
        return float(self.weight @ self.typeI), float(self.weight @ self.typeII)

    @property
    def starvation(self) -> float:
        return 1.0 - self.data_prob


def _merge(a, b, w):
    keep = w > 0
    a, b, w = a[keep], b[keep], w[keep]
    keys = np.column_stack([np.round(a / MERGE_TOL), np.round(b / MERGE_TOL)]).astype(np.int64)
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    wm = np.bincount(inv, weights=w)
    am = np.bincount(inv, weights=w * a) / wm
    bm = np.bincount(inv, weights=w * b) / wm
    return am, bm, wm


def _silent_given(data_prob: float, n: float, l: float) -> float:
    """Probability a child is not heard, summed over its joint
    (has data, node up, link up) outcomes."""
    heard = 0.0
    for has, p_has in ((True, data_prob), (False, 1 - data_prob)):
        for node_up, p_node in ((True, 1 - n), (False, n)):
            for link_up, p_link in ((True, 1 - l), (False, l)):
                if has and node_up and link_up:
                    heard += p_has * p_node * p_link
    return 1.0 - heard


def exact_pair_distribution(t0, schedule: FailureSchedule, height: int,
                            rules=None) -> PairDistribution:
    """Enumerate the exact conditional error-pair law at level ``height``.

    Each level applies one fixed two-input rule to every node that hears both
    children: ``"or"`` (decide H1 if either child does) when the level's mean
    Type I error does not exceed its mean Type II error, ``"and"`` otherwise.
    Pass ``rules`` to fix them explicitly.  Atoms closer than ``1e-14`` are
    merged at their weighted mean.
    """
    if not 0 <= height <= ORACLE_MAX_HEIGHT:
        raise ValueError(f"oracle height must lie in 0..{ORACLE_MAX_HEIGHT}, got {height}")
    if schedule.horizon < height:
        raise ValueError("schedule shorter than height")
    alpha0, beta0 = t0
    a = np.array([float(alpha0)])
    b = np.array([float(beta0)])
    w = np.array([1.0])
    data = 1.0
    silence = []
    used = []
    for k in range(height):
        n, l = schedule.node_link(k)
        q = _silent_given(data, n, l)
        silence.append(q)
        if q >= 1:
            raise ValueError(f"every level-{k} node is silent; no data reaches level {k + 1}")
        if rules is not None:
            rule = rules[k]
        else:
            rule = "or" if w @ a <= w @ b else "and"
        used.append(rule)

        i, j = np.triu_indices(len(w))
        pw = w[i] * w[j] * np.where(i == j, 1.0, 2.0)
        if rule == "or":
            fa = 1 - (1 - a[i]) * (1 - a[j])
            fb = b[i] * b[j]
        else:
            fa = a[i] * a[j]
            fb = 1 - (1 - b[i]) * (1 - b[j])
        # cases given the parent has data: one child heard, both heard
        one = 2 * q * (1 - q) / (1 - q * q)
        both = (1 - q) ** 2 / (1 - q * q)
        a, b, w = _merge(np.concatenate([a, fa]), np.concatenate([b, fb]),
                         np.concatenate([one * w, both * pw]))
        data = 1 - q * q
    return PairDistribution(a, b, w, data, tuple(silence), tuple(used))


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class SimEstimate:
    trials: int
    est_typeI: float
    est_typeII: float
    est_starvation: float
    half_width_95: float
    seed: int
    se_typeI: float
    se_typeII: float
    se_starvation: float
    level_silence: tuple
    unconditional_error: float
    prior0: float

    FIELDS = ("trials", "seed", "prior0", "est_typeI", "se_typeI", "est_typeII", "se_typeII",
              "est_starvation", "se_starvation", "half_width_95", "unconditional_error")

    def as_flat(self) -> dict:
        d = {k: getattr(self, k) for k in self.FIELDS}
        for k, s in enumerate(self.level_silence):
            d[f"silence_{k}"] = s
        return d


def _se(successes: int, n: int) -> float:
    """Agresti-Coull standard error; stays positive when no event was seen."""
    if n <= 0:
        return math.nan
    p = (successes + 2) / (n + 4)
    return math.sqrt(p * (1 - p) / (n + 4))


def level_rules(t0, schedule: FailureSchedule, height: int) -> tuple:
    """Fusion rule per level from the nominal recursion."""
    from .core import evolve

    traj = evolve(t0, schedule, height)
    return tuple("or" if t.alpha <= t.beta else "and" for t in traj.triplets[:height])


def _run_block(block: int, size: int, seed: int, t0, failures, rules):
    """Simulate ``size`` trees under each hypothesis; returns summed counts."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    height = len(rules)
    alpha0, beta0 = t0
    counts = np.zeros(4 + 2 * height)
    for hyp in (0, 1):
        wrong = rng.random((size, 2 ** height)) < (alpha0 if hyp == 0 else beta0)
        says_h1 = wrong if hyp == 0 else ~wrong
        has = np.ones_like(says_h1)
        for k, rule in enumerate(rules):
            n, l = failures[k]
            up = rng.random(has.shape) >= n
            if l > 0:
                up &= rng.random(has.shape) >= l
            heard = has & up
            counts[4 + 2 * k] += np.count_nonzero(~heard)
            counts[5 + 2 * k] += heard.size
            hl, hr = heard[:, 0::2], heard[:, 1::2]
            dl, dr = says_h1[:, 0::2], says_h1[:, 1::2]
            fused = (dl | dr) if rule == "or" else (dl & dr)
            says_h1 = np.where(hl & hr, fused, np.where(hl, dl, dr))
            has = hl | hr
        root_has = has[:, 0]
        root_err = (says_h1[:, 0] if hyp == 0 else ~says_h1[:, 0]) & root_has
        counts[2 * hyp] += np.count_nonzero(root_err)
        counts[2 * hyp + 1] += np.count_nonzero(root_has)
    return counts


def monte_carlo(t0, schedule: FailureSchedule, height: int, trials: int, seed: int,
                prior0: float = 0.5, workers: int = 1) -> SimEstimate:
    """Estimate root error rates on randomly pruned trees.

    Trials run in fixed blocks of 4096 with block ``b`` drawing from
    ``SeedSequence(seed, spawn_key=(b,))``, so the result depends only on the
    seed and configuration, not on ``workers``.  Type I/II estimates are
    conditional on the root having data.  ``unconditional_error`` charges a
    starving root ``min(prior0, 1 - prior0)``.
    """
    if trials < 1 or height < 1:
        raise ValueError("need trials >= 1 and height >= 1")
    if not 0 < prior0 < 1:
        raise ValueError("prior0 must lie in (0, 1)")
    rules = level_rules(t0, schedule, height)
    failures = [tuple(float(x) for x in schedule.node_link(k)) for k in range(height)]
    sizes = [BLOCK] * (trials // BLOCK) + ([trials % BLOCK] if trials % BLOCK else [])
    jobs = [(b, s, seed, tuple(t0), failures, rules) for b, s in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _run_block(*j), jobs))
    else:
        parts = [_run_block(*j) for j in jobs]
    c = np.sum(parts, axis=0)

    err0, data0, err1, data1 = c[:4]
    typeI = err0 / data0 if data0 else math.nan
    typeII = err1 / data1 if data1 else math.nan
    starve = 1 - (data0 + data1) / (2 * trials)
    starved = 2 * trials - int(data0 + data1)
    se1, se2, se3 = _se(int(err0), int(data0)), _se(int(err1), int(data1)), _se(starved, 2 * trials)
    silence = tuple(float(c[4 + 2 * k] / c[5 + 2 * k]) for k in range(height))
    cond = prior0 * (typeI if data0 else 0.0) + (1 - prior0) * (typeII if data1 else 0.0)
    uncond = (1 - starve) * cond + starve * min(prior0, 1 - prior0)
    return SimEstimate(
        trials=trials, est_typeI=float(typeI), est_typeII=float(typeII),
        est_starvation=float(starve), half_width_95=Z95 * float(np.nanmax([se1, se2, se3])),
        seed=seed, se_typeI=se1, se_typeII=se2, se_starvation=se3, level_silence=silence,
        unconditional_error=float(uncond), prior0=prior0,
    )
