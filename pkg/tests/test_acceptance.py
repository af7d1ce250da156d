"""Acceptance criteria 1-9.

Each test prints one ``criterion N: PASS|FAIL`` line (also collected into the
pytest terminal summary).  Tolerances are pinned below.
"""
import itertools
import time

import numpy as np
import pytest

from relaytree.bounds import (DecayClass, check_step_ratios, classify_decay, estimate_c,
                              theorem1_upper, theorem23_bounds, theorem4_bounds)
from relaytree.cli import main, scaling_rows
from relaytree.core import FailureSchedule, evolve, log2_inv, silence_step, weighted_error
from relaytree.geometry import REGION_TOL, classify, containment_violations, verify_invariance
from relaytree.sim import exact_pair_distribution, monte_carlo

from conftest import VERDICTS

ORACLE_TOL = 1e-10
ORACLE_BUDGET_S = 10.0
MC_SE_MULTIPLE = 4.0
MC_BUDGET_S = 30.0
CONTAINMENT_TOL = 1e-12
RATIO_TOL = 1e-12
SLOPE_TARGET, SLOPE_TOL, SLOPE_GAP = 0.5, 0.05, 0.05
SCALING_BUDGET_S = 5.0
N_STARTS, START_HEIGHT = 1000, 20
SEED = 20240601


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    VERDICTS.append(line)
    assert ok, line


# --------------------------------------------------------------------------
# shared random configurations for criteria 4-6


def _random_schedule(rng, p0):
    kind = rng.integers(3)
    if kind == 0:
        return FailureSchedule.quadratic(p0)
    if kind == 1:
        return FailureSchedule.geometric(p0, float(rng.uniform(0, 1)))
    # decreasing list whose second entry keeps q_1 <= q_0
    first = [p0, float(rng.uniform(0, p0 / (1 + p0)))]
    rest = np.sort(rng.uniform(0, first[1], START_HEIGHT - 1))[::-1]
    return FailureSchedule.explicit(first + [float(x) for x in rest])


def _random_start(rng, q0):
    while True:
        a = rng.uniform(0, 0.5)
        b = rng.uniform(a, 1 - a)
        if rng.random() < 0.5:
            a, b = b, a
        if a + b < 1 and classify((a, b, q0), tol=0.0).in_R:
            return float(a), float(b)


@pytest.fixture(scope="module")
def configurations():
    rng = np.random.default_rng(SEED)
    out = []
    while len(out) < N_STARTS:
        p0 = float(rng.uniform(0, 0.3))
        sched = _random_schedule(rng, p0)
        if silence_step(sched.prob(0), sched.prob(1)) > sched.prob(0):
            continue
        t0 = _random_start(rng, p0)
        out.append((t0, sched, evolve(t0, sched, START_HEIGHT, wide=True)))
    return out


# --------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence():
    schedules = [FailureSchedule.constant(0.1), FailureSchedule.quadratic(0.1),
                 FailureSchedule.geometric(0.1, 0.5), FailureSchedule.none()]
    start = time.perf_counter()
    worst_mean = worst_silence = 0.0
    cases = 0
    for h, a, b, s in itertools.product(range(1, 6), (0.05, 0.1, 0.3), (0.1, 0.2, 0.4), schedules):
        dist = exact_pair_distribution((a, b), s, h)
        traj = evolve((a, b), s, h)
        mean = dist.mean
        worst_mean = max(worst_mean, abs(mean[0] - traj.root.alpha), abs(mean[1] - traj.root.beta))
        worst_silence = max([worst_silence] + [abs(x - y) for x, y in zip(dist.silence, traj.q)])
        cases += 1
    elapsed = time.perf_counter() - start
    ok = worst_mean <= ORACLE_TOL and worst_silence <= ORACLE_TOL and elapsed < ORACLE_BUDGET_S
    verdict(1, ok, f"{cases} cases, max mean err {worst_mean:.2e}, "
                   f"max silence err {worst_silence:.2e}, {elapsed:.2f}s")


def test_criterion_2_monte_carlo():
    s = FailureSchedule.quadratic(0.1)
    start = time.perf_counter()
    est = monte_carlo((0.1, 0.2), s, 6, 100_000, seed=SEED)
    elapsed = time.perf_counter() - start
    traj = evolve((0.1, 0.2), s, 6)
    z = [abs(est.est_typeI - traj.root.alpha) / est.se_typeI,
         abs(est.est_typeII - traj.root.beta) / est.se_typeII,
         abs(est.est_starvation - traj.levels[-1].starvation) / est.se_starvation]
    ok = max(z) <= MC_SE_MULTIPLE and elapsed < MC_BUDGET_S
    verdict(2, ok, f"|z| = {', '.join(f'{x:.2f}' for x in z)}, {elapsed:.2f}s")


def test_criterion_3_containment():
    bad = containment_violations(1e-3, 1e-2, 0.99, CONTAINMENT_TOL)
    alphas = np.arange(0.0, 0.5, 1e-3)
    verdict(3, len(bad) == 0, f"{len(alphas) * 100} grid points, {len(bad)} violations")


def test_criterion_4_invariance(configurations):
    exits = grows = 0
    for t0, sched, traj in configurations:
        labels = [classify(t, REGION_TOL) for t in traj.triplets]
        exits += sum(not lab.in_R for lab in labels)
        qs = traj.q
        grows += sum(qs[k + 1] > qs[k] for k in range(len(qs) - 1))
    # the library entry point agrees on a sample
    for t0, sched, _ in configurations[:20]:
        assert verify_invariance(t0, sched, START_HEIGHT).ok
    verdict(4, exits == 0 and grows == 0,
            f"{len(configurations)} starts, {exits} exits from R, {grows} q increases")


def test_criterion_5_step_ratios(configurations):
    failures = {}
    for t0, sched, traj in configurations:
        rep = check_step_ratios(traj, estimate_c(traj), RATIO_TOL)
        for key in rep.violations():
            failures[key] = failures.get(key, 0) + 1
    verdict(5, not failures, f"violations by check: {failures or 'none'}")


def test_criterion_6_sandwich(configurations):
    t1 = sand = t4 = checked_sand = 0
    for (a, b), sched, traj in configurations:
        L0 = a + b
        for h in range(2, START_HEIGHT + 1):
            N = 2 ** h
            root = traj[h].triplet
            measured = log2_inv(root.alpha + root.beta)
            c = estimate_c(traj, h - 1)
            t1 += measured > theorem1_upper(L0, N) + RATIO_TOL
            lo, hi = theorem23_bounds(L0, c, N)
            if lo > 0:
                checked_sand += 1
                sand += not (lo - RATIO_TOL <= measured <= hi + RATIO_TOL)
            for prior0 in (0.4, 0.5):
                lo4, hi4 = theorem4_bounds(L0, c, N, prior0)
                m4 = log2_inv(weighted_error(root, prior0))
                t4 += m4 > hi4 + RATIO_TOL or (lo4 > 0 and m4 < lo4 - RATIO_TOL)
    verdict(6, t1 == sand == t4 == 0,
            f"Thm1 {t1} fails, Thm2/3 {sand} fails of {checked_sand} non-vacuous, Thm4 {t4} fails")


def test_criterion_7_scaling():
    start = time.perf_counter()
    rows = scaling_rows(0.1, 0.2, 0.1, 0.4, list(range(1, 21)), (10, 20))
    elapsed = time.perf_counter() - start
    slope = {r["profile"]: r["fitted_slope"] for r in rows}
    P = {(r["profile"], r["log2_N"]): r["P_N"] for r in rows}
    worse = all(P["constant", h] > P["quadratic", h] for h in range(4, 21))
    ok = (abs(slope["none"] - SLOPE_TARGET) <= SLOPE_TOL
          and abs(slope["quadratic"] - SLOPE_TARGET) <= SLOPE_TOL
          and slope["constant"] <= min(slope["none"], slope["quadratic"]) - SLOPE_GAP
          and worse and elapsed < SCALING_BUDGET_S)
    verdict(7, ok, "slopes " + ", ".join(f"{k}={v:.4f}" for k, v in slope.items())
            + f"; constant worse at every h>=4: {worse}; {elapsed:.2f}s")


def test_criterion_8_decay():
    boundary = FailureSchedule.explicit([2.0 ** -(2 ** (k / 2)) for k in range(21)])
    got = [classify_decay(FailureSchedule.quadratic(0.1), 20),
           classify_decay(FailureSchedule.constant(0.1), 20),
           classify_decay(FailureSchedule.geometric(0.1, 0.5), 20),
           classify_decay(boundary, 20)]
    want = [DecayClass.SUFFICIENT, DecayClass.INSUFFICIENT, DecayClass.INSUFFICIENT,
            DecayClass.SUFFICIENT]
    verdict(8, got == want, "verdicts " + ", ".join(str(g) for g in got))


def test_criterion_9_determinism(tmp_path):
    argv = ["simulate", "--height", "6", "--schedule", "quadratic:p0=0.1", "--alpha0", "0.1",
            "--beta0", "0.2", "--trials", "100000", "--seed", str(SEED)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = main(argv + ["-o", str(a)]), main(argv + ["-o", str(b)])
    body = lambda p: p.read_bytes().split(b"\n", 1)[1]
    same = codes == (0, 0) and body(a) == body(b)
    verdict(9, same, f"exit codes {codes}, bodies identical: {same}")
