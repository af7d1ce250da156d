"""Non-asymptotic bounds on ``log2(1/P_N)`` and the step-ratio inequalities.

All logarithms are base 2.  Bounds are expressed in bits: a bound ``b`` on
``log2(1/P_N)`` means ``P_N`` is at most (lower bound) or at least (upper
bound) ``2**-b``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

from .core import ErrorTriplet, FailureSchedule, Trajectory, fuse_step, log2_inv, total_error
from .geometry import REGION_TOL, classify

RATIO_TOL = 1e-12


def sensor_height(n_sensors: int) -> int:
    """``log2(N)`` for a power of two ``N >= 1``."""
    if not isinstance(n_sensors, int) or n_sensors < 1 or n_sensors & (n_sensors - 1):
        raise ValueError(f"number of sensors must be a power of two, got {n_sensors!r}")
    return n_sensors.bit_length() - 1


def _check_L0(L0):
    if not (0 < L0 < 1):
        raise ValueError(f"L0 must lie in (0, 1), got {L0!r}")


def estimate_c(traj: Trajectory, upto: int | None = None) -> float:
    """Smallest ``C`` with ``q_k <= C * L_k`` over levels ``0..upto``.

    Defaults to the whole trajectory.
    """
    levels = traj.levels if upto is None else traj.levels[: upto + 1]
    if not levels:
        raise ValueError("empty trajectory")
    c = 0.0
    for lv in levels:
        if lv.L == 0:
            raise ValueError(f"L_{lv.k} = 0; the ratio bounds do not apply")
        c = max(c, float(lv.triplet.q / lv.L))
    return c


def theorem1_upper(L0, n_sensors: int) -> float:
    """``sqrt(N) * (log2(1/L0) + 1)``."""
    sensor_height(n_sensors)
    _check_L0(L0)
    return math.sqrt(n_sensors) * (log2_inv(L0) + 1)


def theorem23_bounds(L0, c_constant: float, n_sensors: int) -> tuple:
    """``(lower, upper)`` on ``log2(1/P_N)`` for equal priors.

    Even ``log2 N`` scales both sides by ``sqrt(N)``; odd ``log2 N`` uses
    ``sqrt(N/2)`` below and ``sqrt(2N)`` above.  The lower bound is returned
    as-is even when negative.
    """
    h = sensor_height(n_sensors)
    _check_L0(L0)
    if c_constant < 0:
        raise ValueError("C must be non-negative")
    gain = log2_inv(L0)
    if h % 2 == 0:
        lo_scale = hi_scale = math.sqrt(n_sensors)
    else:
        lo_scale, hi_scale = math.sqrt(n_sensors / 2), math.sqrt(2 * n_sensors)
    return lo_scale * (gain - math.log2(6 * c_constant + 2)), hi_scale * (gain + 1)


def _ordered_priors(prior0: float) -> tuple:
    if not (0 < prior0 < 1):
        raise ValueError(f"prior0 must lie in (0, 1), got {prior0!r}")
    prior1 = 1 - prior0
    return (prior0, prior1) if prior0 <= prior1 else (prior1, prior0)


def theorem4_bounds(L0, c_constant: float, n_sensors: int, prior0: float) -> tuple:
    """Bounds on ``log2(1/P_hat_N)`` for the prior-weighted error.

    The hypotheses are relabelled so the smaller prior plays the role of
    ``P(H0)``; the equal-prior bounds then shift by ``log2(1/P(H1))`` below and
    ``log2(1/P(H0))`` above.
    """
    small, large = _ordered_priors(prior0)
    lo, hi = theorem23_bounds(L0, c_constant, n_sensors)
    return lo + log2_inv(large), hi + log2_inv(small)


@dataclass(frozen=True)
class BoundsReport:
    n_sensors: int
    height: int
    c_constant: float
    lower_bits: float
    upper_bits: float
    parity: str
    priors: tuple
    theorem1_bits: float
    vacuous: bool

    FIELDS = ("n_sensors", "height", "c_constant", "lower_bits", "upper_bits", "parity",
              "prior0", "prior1", "theorem1_bits", "vacuous")

    def as_flat(self) -> dict:
        d = asdict(self)
        d["prior0"], d["prior1"] = d.pop("priors")
        return {k: d[k] for k in self.FIELDS}

    def to_record(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.as_flat().items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def bounds_report(L0, c_constant: float, n_sensors: int, prior0: float = 0.5) -> BoundsReport:
    """Bundle the bound for ``N`` sensors; equal priors use the plain sandwich."""
    h = sensor_height(n_sensors)
    if prior0 == 0.5:
        lo, hi = theorem23_bounds(L0, c_constant, n_sensors)
    else:
        lo, hi = theorem4_bounds(L0, c_constant, n_sensors, prior0)
    return BoundsReport(
        n_sensors=n_sensors, height=h, c_constant=float(c_constant), lower_bits=lo, upper_bits=hi,
        parity="even" if h % 2 == 0 else "odd", priors=(prior0, 1 - prior0),
        theorem1_bits=theorem1_upper(L0, n_sensors), vacuous=lo <= 0,
    )


# --------------------------------------------------------------------------
# ratio inequalities


@dataclass
class StepRatioReport:
    """Per-level verdicts; index ``k`` refers to the step(s) starting at level ``k``."""

    c_constant: float
    one_step_lower: list = field(default_factory=list)   # L_{k+1} >= L_k^2
    one_step_upper: list = field(default_factory=list)   # L_{k+1} <= L_k
    two_step_ratio: list = field(default_factory=list)   # L_{k+2} / L_k^2
    two_step_applicable: list = field(default_factory=list)
    two_step_ok: list = field(default_factory=list)
    silence_monotone: list = field(default_factory=list)  # smaller q never raises L_{k+1}
    diagonal_equality: list = field(default_factory=list)

    def violations(self) -> dict:
        out = {}
        for name in ("one_step_lower", "one_step_upper", "silence_monotone", "diagonal_equality"):
            bad = [k for k, ok in enumerate(getattr(self, name)) if not ok]
            if bad:
                out[name] = bad
        bad = [k for k, (app, ok) in enumerate(zip(self.two_step_applicable, self.two_step_ok))
               if app and not ok]
        if bad:
            out["two_step_ratio"] = bad
        return out

    @property
    def ok(self) -> bool:
        return not self.violations()


def _refused_L(t: ErrorTriplet, q):
    return total_error(fuse_step(type(t)(t.alpha, t.beta, q), 0))


def check_step_ratios(traj: Trajectory, c_constant: float | None = None,
                      tol: float = RATIO_TOL) -> StepRatioReport:
    """Evaluate the one- and two-step inequalities along a trajectory.

    The two-step bound ``1/2 <= L_{k+2}/L_k^2 <= 6C+2`` is only marked
    applicable while the state is in ``R`` with non-increasing ``q``.  The
    silence comparison re-fuses each state with ``q/2`` and ``q = 0`` and
    checks ``L_{k+1}`` does not increase, with equality exactly on the
    diagonal.
    """
    if c_constant is None:
        c_constant = estimate_c(traj)
    rep = StepRatioReport(c_constant)
    L = traj.L
    tri = traj.triplets
    upper = 6 * c_constant + 2
    for k in range(len(L) - 1):
        r1 = L[k + 1] / (L[k] * L[k])
        rep.one_step_lower.append(bool(r1 >= 1 - tol))
        rep.one_step_upper.append(bool(L[k + 1] <= L[k] * (1 + tol)))

        t = tri[k]
        base = _refused_L(t, t.q)
        monotone = True
        for q_small in (t.q / 2, 0 * t.q):
            Ls = _refused_L(t, q_small)
            if Ls > base * (1 + tol):
                monotone = False
        rep.silence_monotone.append(monotone)
        a, b = t.alpha, t.beta
        L_zero = _refused_L(t, 0 * t.q)
        if a == b:
            rep.diagonal_equality.append(bool(abs(L_zero - base) <= tol * base))
        else:
            # exact gap is (1 - pi) * |b - a| * (1 - a - b) with pi = (1-q)/(1+q)
            gap = (2 * t.q / (1 + t.q)) * abs(b - a) * (1 - a - b)
            resolvable = gap > 8 * 2.0 ** -52 * base
            rep.diagonal_equality.append(bool(L_zero < base) if resolvable else True)

    for k in range(len(L) - 2):
        ratio = L[k + 2] / (L[k] * L[k])
        rep.two_step_ratio.append(float(ratio))
        app = (classify(tri[k], REGION_TOL).in_R and tri[k + 1].q <= tri[k].q
               and tri[k + 2].q <= tri[k + 1].q)
        rep.two_step_applicable.append(bool(app))
        rep.two_step_ok.append(bool(0.5 - tol <= ratio <= upper + tol))
    return rep


def required_sensors(epsilon: float, L0: float, c_constant: float) -> int:
    """Smallest power of four guaranteeing ``P_N <= epsilon`` via the even-height
    lower bound."""
    if not (0 < epsilon < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    _check_L0(L0)
    den = log2_inv(L0) - math.log2(6 * c_constant + 2)
    if den <= 0:
        raise ValueError("bound inapplicable for this C: log2(1/L0) <= log2(6C+2)")
    need = (log2_inv(epsilon) / den) ** 2
    n = 1
    while n < need:
        n *= 4
    return n


# --------------------------------------------------------------------------
# decay of local failure probabilities


class DecayClass(str, Enum):
    SUFFICIENT = "sufficient"
    INSUFFICIENT = "insufficient"
    INDETERMINATE = "indeterminate"

    def __str__(self) -> str:
        return self.value


DECAY_DELTA = 0.05


def decay_ratios(schedule: FailureSchedule, horizon: int) -> list:
    """``(k, log2(1/p_k) / 2**(k/2))`` over the second half of the horizon."""
    start = math.ceil(horizon / 2)
    return [(k, schedule.neg_log2(k) / 2 ** (k / 2)) for k in range(start, horizon + 1)]


def classify_decay(schedule: FailureSchedule, horizon: int,
                   delta: float = DECAY_DELTA) -> DecayClass:
    """Finite-horizon surrogate for ``log2(1/p_k) = Omega(2**(k/2))``.

    ``sufficient`` when the normalised ratio stays at or above ``delta`` over
    the window; ``insufficient`` when it falls monotonically and ends below
    ``delta``; otherwise ``indeterminate``.  This is a heuristic on a finite
    window, not a proof of the asymptotic class.
    """
    if horizon < 8:
        raise ValueError("classify_decay needs a horizon of at least 8 levels")
    if not schedule.is_non_increasing(horizon):
        raise ValueError("decay classification needs a non-increasing schedule")
    r = [v for _, v in decay_ratios(schedule, horizon)]
    if min(r) >= delta:
        return DecayClass.SUFFICIENT
    falling = all(b <= a * (1 + 1e-12) for a, b in zip(r, r[1:]))
    if falling and r[-1] < delta:
        return DecayClass.INSUFFICIENT
    return DecayClass.INDETERMINATE
