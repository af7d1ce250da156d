"""Regions of the ``(alpha, beta, q)`` prism and their boundaries.

``U`` is the half of the prism with ``beta >= alpha``, ``L`` the mirror half.
``B`` is the part of ``U`` that one fusion step sends across the diagonal, and
``R_U`` (the reflection of the image of ``B``) contains ``B``.  ``R = R_U u
R_L`` is invariant once entered, provided silence probabilities do not grow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath
import numpy as np

from .core import DomainError, ErrorTriplet, FailureSchedule, evolve, fuse_step, silence_step

REGION_TOL = 1e-12


class RegionLabel(str, Enum):
    U_OUTSIDE_B = "U-outside-B"
    B = "B"
    RU_MINUS_B = "R_U-minus-B"
    RL = "R_L"
    L_OUTSIDE_RL = "L-outside-R_L"
    INVALID = "invalid"

    def __str__(self) -> str:
        return self.value

    @property
    def in_R(self) -> bool:
        return self in (RegionLabel.B, RegionLabel.RU_MINUS_B, RegionLabel.RL)


def _sqrt(x):
    if isinstance(x, np.ndarray):
        return np.sqrt(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.sqrt(x)
    return math.sqrt(x)


def _check_q(q):
    if np.any(np.asarray(q >= 1)) or np.any(np.asarray(q < 0)):
        raise DomainError("boundaries are defined for 0 <= q < 1 only")


def b_upper_boundary(alpha, q):
    """Largest ``beta`` at which ``(alpha, beta, q)`` still flips sides.

    Solves ``beta_next == alpha_next`` for ``beta``; at ``q = 0`` this is
    ``sqrt(2*alpha - alpha**2)``.  Written in rationalised form so small
    ``alpha`` next to larger ``q`` does not cancel.  Accepts arrays.
    """
    _check_q(q)
    # alpha_next * (1 + q), the quantity beta_next * (1 + q) must not exceed
    target = (1 - q) * (2 * alpha - alpha * alpha) + 2 * q * alpha
    root = _sqrt(q * q + (1 - q) * target)
    den = root + q
    if isinstance(den, np.ndarray):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, target / np.where(den > 0, den, 1), 0.0)
    return target / den if den > 0 else 0 * den


def ru_upper_boundary(alpha, q):
    """Upper boundary of ``R_U``: ``-alpha + 2*(sqrt(q^2 + (1-q^2)*alpha) - q)/(1-q)``.

    At ``q = 0`` this is ``2*sqrt(alpha) - alpha``.  Accepts arrays.
    """
    _check_q(q)
    root = _sqrt(q * q + (1 - q * q) * alpha)
    den = root + q
    if isinstance(den, np.ndarray):
        with np.errstate(invalid="ignore", divide="ignore"):
            core = np.where(den > 0, 2 * (1 + q) * alpha / np.where(den > 0, den, 1), 0.0)
        return core - alpha
    core = 2 * (1 + q) * alpha / den if den > 0 else 0 * den
    return core - alpha


def _below(beta, bound, tol):
    return beta <= bound + tol * abs(bound)


def classify(t, tol: float = REGION_TOL) -> RegionLabel:
    """Region label of a triplet (or ``(alpha, beta, q)`` tuple).

    Upper boundaries are closed and tested with relative tolerance ``tol``.
    Points below the diagonal are mirrored, tested, and reported as ``R_L`` or
    ``L-outside-R_L``.
    """
    if isinstance(t, ErrorTriplet):
        a, b, q = t.alpha, t.beta, t.q
    else:
        a, b, q = t
    if not (a >= 0 and b >= 0 and a + b < 1 and 0 <= q < 1):
        return RegionLabel.INVALID
    mirrored = b < a
    if mirrored:
        a, b = b, a
    if _below(b, b_upper_boundary(a, q), tol):
        label = RegionLabel.B
    elif _below(b, ru_upper_boundary(a, q), tol):
        label = RegionLabel.RU_MINUS_B
    else:
        label = RegionLabel.U_OUTSIDE_B
    if mirrored:
        return RegionLabel.RL if label is not RegionLabel.U_OUTSIDE_B else RegionLabel.L_OUTSIDE_RL
    return label


def in_region_R(t, tol: float = REGION_TOL) -> bool:
    return classify(t, tol).in_R


def check_flip(t: ErrorTriplet, p_next, tol: float = 0.0) -> bool:
    """Whether one fusion step from ``t`` (which must lie in ``U``) lands in ``L``.

    Landing exactly on the diagonal counts as a flip; the diagonal is the
    shared lower boundary of ``B`` and ``R_U``.
    """
    if t.beta < t.alpha:
        raise ValueError("check_flip expects a triplet with beta >= alpha")
    nxt = fuse_step(t, p_next)
    return nxt.beta <= nxt.alpha + tol * abs(nxt.alpha)


@dataclass
class InvarianceReport:
    labels: list
    q: list
    entry_level: int | None
    violations: list = field(default_factory=list)
    q_increases: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.q_increases


def verify_invariance(t0, schedule: FailureSchedule, height: int, tol: float = REGION_TOL,
                      wide: bool = True) -> InvarianceReport:
    """Replay a trajectory and list every level at which it leaves ``R`` after
    first entering it, plus every level at which ``q`` grows.

    Uses extended-exponent arithmetic by default: with plain floats the
    smaller error probability underflows to 0 after a few dozen levels and
    the state then looks as if it left ``R``.
    """
    if not schedule.is_non_increasing(height):
        raise ValueError("invariance needs a non-increasing schedule")
    q0 = schedule.prob(0)
    if height >= 1 and silence_step(q0, schedule.prob(1)) > q0:
        raise ValueError("invariance needs q_1 <= q_0")
    traj = evolve(t0, schedule, height, wide=wide)
    labels = [classify(t, tol) for t in traj.triplets]
    entry = next((k for k, lab in enumerate(labels) if lab.in_R), None)
    violations = [] if entry is None else [k for k in range(entry, len(labels)) if not labels[k].in_R]
    qs = traj.q
    grows = [k + 1 for k in range(len(qs) - 1) if qs[k + 1] > qs[k]]
    return InvarianceReport(labels, qs, entry, violations, grows)


def boundary_grid(q_values, alpha_step: float = 1e-3, alpha_max: float = 0.5) -> list:
    """Rows ``(q, alpha, b_upper, ru_upper)`` for plotting the boundary curves."""
    alphas = np.arange(0.0, alpha_max, alpha_step)
    rows = []
    for q in q_values:
        b = b_upper_boundary(alphas, float(q))
        r = ru_upper_boundary(alphas, float(q))
        rows.extend(zip(np.full_like(alphas, q), alphas, b, r))
    return rows


def containment_violations(alpha_step: float = 1e-3, q_step: float = 1e-2,
                           q_max: float = 0.99, tol: float = 1e-12) -> np.ndarray:
    """Grid points ``(alpha, q)`` where the ``B`` boundary rises above ``R_U``'s."""
    alphas = np.arange(0.0, 0.5, alpha_step)
    qs = np.arange(0, int(round(q_max / q_step)) + 1) * q_step
    A, Q = np.meshgrid(alphas, qs, indexing="ij")
    bad = b_upper_boundary(A, Q) > ru_upper_boundary(A, Q) + tol
    return np.column_stack([A[bad], Q[bad]])
