"""Error-probability triplets and the level-by-level fusion recursion.

A node at level ``k`` of a balanced binary relay tree is summarised by the
triplet ``(alpha, beta, q)``: its Type I and Type II error probabilities
(conditioned on the node having data) and the probability that its parent
hears nothing from it.  :func:`fuse_step` maps the triplet at one level to the
triplet at the next.

All arithmetic in this module is restricted to ``+ - * /`` and comparisons, so
the same functions run on plain floats and on :class:`mpmath.mpf` values.  The
latter keep the 53-bit mantissa but have an unbounded exponent, which matters
once the error probability at the root drops below ``1e-308`` (around
``2**20`` sensors).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import mpmath

Number = Union[float, mpmath.mpf]


class DomainError(ValueError):
    """A probability left the domain on which the recursion is defined."""


def _check_prob(name: str, x) -> None:
    if not (0 <= x <= 1):
        raise DomainError(f"{name}={x!r} is not a probability")


def widen(x) -> mpmath.mpf:
    """Convert to an extended-exponent number with double precision mantissa."""
    return mpmath.mpf(x)


def log2_inv(x) -> float:
    """``log2(1/x)`` as a float, exact in range for both floats and mpf."""
    if x <= 0:
        return math.inf
    if isinstance(x, mpmath.mpf):
        return float(-mpmath.log(x, 2))
    return -math.log2(x)


@dataclass(frozen=True)
class ErrorTriplet:
    """State of one tree level: Type I, Type II and silence probabilities."""

    alpha: Number
    beta: Number
    q: Number

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise DomainError(f"negative error probability in {self}")
        if not self.alpha + self.beta < 1:
            raise DomainError(f"alpha + beta must be < 1, got {self.alpha + self.beta!r}")
        if not (0 <= self.q < 1):
            raise DomainError(f"silence probability must lie in [0, 1), got {self.q!r}")

    def swapped(self) -> "ErrorTriplet":
        return ErrorTriplet(self.beta, self.alpha, self.q)

    def widened(self) -> "ErrorTriplet":
        return ErrorTriplet(widen(self.alpha), widen(self.beta), widen(self.q))


def local_failure_prob(n, l):
    """Probability that a node fails or its uplink erases: ``n + l - n*l``."""
    _check_prob("n", n)
    _check_prob("l", l)
    return n + l - n * l


def silence_step(q_k, p_next):
    """Silence probability one level up.

    The parent is starving with probability ``q_k**2``; otherwise its own
    local failure silences it with probability ``p_next``.
    """
    if not (0 <= q_k < 1):
        raise DomainError(f"q_k={q_k!r} outside [0, 1)")
    _check_prob("p_next", p_next)
    q2 = q_k * q_k
    return q2 + (1 - q2) * p_next


def fuse_step(t: ErrorTriplet, p_next) -> ErrorTriplet:
    """One application of the triplet recursion.

    The smaller of the two error probabilities goes through the OR-type
    branch (``2x - x**2`` when both children report), the larger through the
    AND-type branch (``x**2``); a single reporting child forwards its message
    unchanged.  Ties ``alpha == beta`` take the ``alpha <= beta`` branch.
    """
    a, b, q = t.alpha, t.beta, t.q
    one_q = 1 - q
    den = 1 + q
    if a <= b:
        a_next = (one_q * (2 * a - a * a) + 2 * q * a) / den
        b_next = (one_q * b * b + 2 * q * b) / den
    else:
        a_next = (one_q * a * a + 2 * q * a) / den
        b_next = (one_q * (2 * b - b * b) + 2 * q * b) / den
    q_next = silence_step(q, p_next)
    if q_next >= 1:
        raise DomainError("silence probability reached 1; every message is lost")
    return ErrorTriplet(a_next, b_next, q_next)


def total_error(t: ErrorTriplet):
    """``alpha + beta``: twice the total error probability under equal priors."""
    return t.alpha + t.beta


def weighted_error(t: ErrorTriplet, prior0):
    """Bayes error ``prior0*alpha + (1 - prior0)*beta``."""
    if not (0 < prior0 < 1):
        raise ValueError(f"prior0 must lie in (0, 1), got {prior0!r}")
    return prior0 * t.alpha + (1 - prior0) * t.beta


# --------------------------------------------------------------------------
# failure schedules

_KINDS = ("constant", "quadratic", "geometric", "raw", "explicit")


@dataclass(frozen=True)
class FailureSchedule:
    """Per-level local failure probabilities ``p_0, p_1, ...``.

    Build one through the class constructors (:meth:`constant`,
    :meth:`quadratic`, :meth:`geometric`, :meth:`raw`, :meth:`explicit`) or
    from the text grammar with :meth:`parse`.  Generator schedules are
    unbounded; list schedules have ``horizon = len(list) - 1``.
    """

    kind: str
    params: tuple = ()
    pairs: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant":
            _check_prob("p", self.params[0])
        elif self.kind == "quadratic":
            _check_prob("p0", self.params[0])
        elif self.kind == "geometric":
            p0, r = self.params
            _check_prob("p0", p0)
            if r < 0:
                raise DomainError(f"ratio must be non-negative, got {r!r}")
        elif self.kind == "raw":
            if not self.pairs:
                raise ValueError("raw schedule needs at least one (n, l) pair")
            for n, l in self.pairs:
                _check_prob("n", n)
                _check_prob("l", l)
        else:
            if not self.values:
                raise ValueError("explicit schedule needs at least one value")
            for p in self.values:
                _check_prob("p", p)

    @classmethod
    def constant(cls, p: float) -> "FailureSchedule":
        return cls("constant", (float(p),))

    @classmethod
    def quadratic(cls, p0: float) -> "FailureSchedule":
        return cls("quadratic", (float(p0),))

    @classmethod
    def geometric(cls, p0: float, r: float) -> "FailureSchedule":
        return cls("geometric", (float(p0), float(r)))

    @classmethod
    def raw(cls, pairs: Iterable[Sequence[float]]) -> "FailureSchedule":
        return cls("raw", pairs=tuple((float(n), float(l)) for n, l in pairs))

    @classmethod
    def explicit(cls, values: Iterable[float]) -> "FailureSchedule":
        return cls("explicit", values=tuple(float(p) for p in values))

    @classmethod
    def none(cls) -> "FailureSchedule":
        """Perfect nodes and links."""
        return cls.constant(0.0)

    @classmethod
    def parse(cls, text: str) -> "FailureSchedule":
        """Parse ``constant:p=0.1``, ``quadratic:p0=0.1``,
        ``geometric:p0=0.1,r=0.5``, ``explicit:0.1,0.01`` or
        ``raw:(n,l);(n,l)``."""
        text = text.strip()
        kind, sep, body = text.partition(":")
        kind = kind.strip().lower()
        if kind == "none" and not body.strip():
            return cls.none()
        if not sep:
            raise ValueError(f"schedule {text!r} lacks a ':'")
        body = body.strip()
        try:
            if kind in ("constant", "quadratic", "geometric"):
                kv = {}
                for item in body.split(","):
                    key, eq, val = item.partition("=")
                    if not eq:
                        raise ValueError(f"expected key=value, got {item!r}")
                    kv[key.strip()] = float(val)
                if kind == "constant":
                    return cls.constant(kv.pop("p"))
                if kind == "quadratic":
                    return cls.quadratic(kv.pop("p0"))
                return cls.geometric(kv.pop("p0"), kv.pop("r"))
            if kind == "explicit":
                return cls.explicit(float(v) for v in body.split(","))
            if kind == "raw":
                pairs = re.findall(r"\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)", body)
                if not pairs or len(pairs) != body.count("("):
                    raise ValueError(f"malformed raw schedule {body!r}")
                return cls.raw((float(n), float(l)) for n, l in pairs)
        except KeyError as exc:
            raise ValueError(f"schedule {text!r} missing parameter {exc}") from None
        raise ValueError(f"unknown schedule kind {kind!r}")

    def __str__(self) -> str:
        if self.kind == "constant":
            return f"constant:p={self.params[0]!r}"
        if self.kind == "quadratic":
            return f"quadratic:p0={self.params[0]!r}"
        if self.kind == "geometric":
            return f"geometric:p0={self.params[0]!r},r={self.params[1]!r}"
        if self.kind == "explicit":
            return "explicit:" + ",".join(repr(v) for v in self.values)
        return "raw:" + ";".join(f"({n!r},{l!r})" for n, l in self.pairs)

    @property
    def horizon(self) -> float:
        """Largest level index with a defined probability (``inf`` if unbounded)."""
        if self.kind == "raw":
            return len(self.pairs) - 1
        if self.kind == "explicit":
            return len(self.values) - 1
        return math.inf

    def _check_level(self, k: int) -> None:
        if k < 0:
            raise ValueError(f"negative level {k}")
        if k > self.horizon:
            raise ValueError(f"schedule {self} defines levels 0..{self.horizon}, asked for {k}")

    def node_link(self, k: int) -> tuple:
        """``(n_k, l_k)``; p-only schedules attribute all failure to the link."""
        self._check_level(k)
        if self.kind == "raw":
            return self.pairs[k]
        return 0.0, float(self.prob(k))

    def prob(self, k: int, wide: bool = False) -> Number:
        """Local failure probability ``p_k``."""
        self._check_level(k)
        if self.kind == "constant":
            p = widen(self.params[0]) if wide else self.params[0]
        elif self.kind == "quadratic":
            p0 = widen(self.params[0]) if wide else self.params[0]
            p = p0 ** (2 ** k)
        elif self.kind == "geometric":
            p0, r = self.params
            p = widen(p0) * widen(r) ** k if wide else p0 * r ** k
        elif self.kind == "raw":
            n, l = self.pairs[k]
            p = local_failure_prob(widen(n), widen(l)) if wide else local_failure_prob(n, l)
        else:
            p = widen(self.values[k]) if wide else self.values[k]
        if not (0 <= p <= 1):
            raise DomainError(f"schedule {self} produced p_{k}={p!r} outside [0, 1]")
        return p

    def probs(self, horizon: int, wide: bool = False) -> list:
        """``[p_0, ..., p_horizon]``."""
        return [self.prob(k, wide) for k in range(horizon + 1)]

    def neg_log2(self, k: int) -> float:
        """``log2(1/p_k)`` without underflow for the generator kinds."""
        self._check_level(k)
        if self.kind == "quadratic":
            p0 = self.params[0]
            return math.inf if p0 == 0 else (2 ** k) * -math.log2(p0)
        if self.kind == "geometric":
            p0, r = self.params
            if p0 == 0 or r == 0 and k > 0:
                return math.inf
            return -math.log2(p0) - k * math.log2(r)
        return log2_inv(self.prob(k))

    def is_non_increasing(self, horizon: int) -> bool:
        if self.kind == "constant":
            return True
        if self.kind == "quadratic":
            return True  # p0 in [0, 1]
        if self.kind == "geometric":
            return self.params[1] <= 1 or self.params[0] == 0
        ps = self.probs(min(horizon, int(self.horizon)))
        return all(b <= a for a, b in zip(ps, ps[1:]))


# --------------------------------------------------------------------------
# trajectories


class Level(NamedTuple):
    k: int
    triplet: ErrorTriplet
    L: Number
    half_L: Number
    starvation: Number
    region: str


@dataclass
class Trajectory:
    """Levels ``0..height`` of one run of the recursion."""

    levels: list
    schedule: FailureSchedule
    wide: bool = False

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, k) -> Level:
        return self.levels[k]

    @property
    def height(self) -> int:
        return len(self.levels) - 1

    @property
    def triplets(self) -> list:
        return [lv.triplet for lv in self.levels]

    @property
    def L(self) -> list:
        return [lv.L for lv in self.levels]

    @property
    def q(self) -> list:
        return [lv.triplet.q for lv in self.levels]

    @property
    def root(self) -> ErrorTriplet:
        return self.levels[-1].triplet

    def to_rows(self) -> list:
        return [
            dict(k=lv.k, alpha=lv.triplet.alpha, beta=lv.triplet.beta, q=lv.triplet.q,
                 L=lv.L, halfL=lv.half_L, starvation=lv.starvation, region=lv.region)
            for lv in self.levels
        ]


def initial_triplet(alpha0, beta0, schedule: FailureSchedule, wide: bool = False) -> ErrorTriplet:
    """Sensor-level triplet; the silence probability is always ``p_0``."""
    p0 = schedule.prob(0, wide)
    if wide:
        return ErrorTriplet(widen(alpha0), widen(beta0), p0)
    return ErrorTriplet(alpha0, beta0, p0)


def evolve(t0, schedule: FailureSchedule, height: int, wide: bool = False) -> Trajectory:
    """Run the recursion from the sensors up to level ``height``.

    ``t0`` is ``(alpha0, beta0)`` or an :class:`ErrorTriplet` whose ``q`` must
    equal ``p_0``.  ``wide=True`` switches to extended-exponent arithmetic so
    tiny root errors do not underflow.
    """
    from .geometry import classify

    if height < 0:
        raise ValueError("height must be non-negative")
    if schedule.horizon < height:
        raise ValueError(f"schedule horizon {schedule.horizon} shorter than height {height}")
    if isinstance(t0, ErrorTriplet):
        start = initial_triplet(t0.alpha, t0.beta, schedule, wide)
        if start.q != t0.q:
            raise ValueError("q_0 is fixed to p_0 by the schedule and cannot be set independently")
    else:
        alpha0, beta0 = t0
        start = initial_triplet(alpha0, beta0, schedule, wide)

    levels = []
    t = start
    starvation = widen(0) if wide else 0.0
    for k in range(height + 1):
        L = total_error(t)
        levels.append(Level(k, t, L, L / 2, starvation, classify(t)))
        if k == height:
            break
        starvation = t.q * t.q
        t = fuse_step(t, schedule.prob(k + 1, wide))
    return Trajectory(levels, schedule, wide)
