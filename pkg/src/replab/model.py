"""Domain primitives: monitoring structures, game parameters, belief updates.

The game, shared by every module in this package: a pool of long-lived
officeholders faces a sequence of short-lived voters. Each officeholder is
a good type (always works) with probability ``pi0``, otherwise an
opportunist who trades off the effort cost ``kappa`` against holding
office, discounting at ``delta``. Effort generates a public signal from a
finite alphabet under ``f1`` (work) or ``f0`` (shirk); voters may replace
the incumbent at cost ``c``.

Period-order contract (binding for all modules): at period t > 0 the voter
first replaces with the state's replacement probability; the (possibly
new) incumbent then acts; the realized signal extends the incumbent's
career history. At t = 0 there is no vote.

All probabilities are double-precision floats; probability vectors must
sum to one within ``SIMPLEX_TOL``. Model objects are immutable after
validation and safe to share across threads; operators are pure functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError, Violation

SIMPLEX_TOL = 1e-12

#: Beliefs are plain floats in [0, 1]; operators below restrict to (0, 1].
Belief = float

STRICT = "strict"
RELAXED = "relaxed"


@dataclass(frozen=True)
class MonitoringStructure:
    """Signal alphabet with its two conditional distributions.

    ``f0`` is the signal distribution under shirking, ``f1`` under effort.
    Maintained assumptions (enforced by :func:`validate`): both are
    probability vectors, ``f1`` has full support, and the two differ in at
    least one coordinate. Signals with ``f0(s) = 0`` are allowed; their
    likelihood ratio is 0.
    """

    signals: tuple[str, ...]
    f0: tuple[float, ...]
    f1: tuple[float, ...]

    @classmethod
    def binary(cls, precision: float) -> "MonitoringStructure":
        """Two-signal structure where each action produces its own signal
        with probability ``precision``: Pass indicates work, Fail shirk."""
        p = float(precision)
        return cls(signals=("Fail", "Pass"), f0=(p, 1.0 - p), f1=(1.0 - p, p))

    def index(self, signal: str) -> int:
        return self.signals.index(signal)

    def likelihood_ratio(self, signal: str) -> float:
        """f0(s)/f1(s); low values indicate effort."""
        i = self.index(signal)
        return self.f0[i] / self.f1[i]

    @property
    def min_ratio(self) -> float:
        """Smallest likelihood ratio over the alphabet (most favorable signal)."""
        return min(self.f0[i] / self.f1[i] for i in range(len(self.signals)))

    def mixture(self, effort: float) -> tuple[float, ...]:
        """Signal distribution when effort is exerted with probability ``effort``."""
        return tuple(effort * q1 + (1.0 - effort) * q0 for q0, q1 in zip(self.f0, self.f1))


@dataclass(frozen=True)
class GameParams:
    """(kappa, delta, pi0, c): effort cost, discount factor, prior on the
    good type, replacement cost."""

    kappa: float
    delta: float
    pi0: float
    c: float = 0.0


@dataclass(frozen=True)
class Model:
    """A validated (monitoring, params) pair; the level records which bound
    on the replacement cost was enforced."""

    monitoring: MonitoringStructure
    params: GameParams
    level: str


def find_violations(
    monitoring: MonitoringStructure, params: GameParams, level: str = STRICT
) -> list[Violation]:
    """Collect every violated assumption without raising.

    ``level="strict"`` additionally enforces ``c < min(pi0, 1 - pi0)``,
    required for the equilibrium constructions; ``level="relaxed"`` drops
    that bound, which the outside-option analysis does not need.
    """
    if level not in (STRICT, RELAXED):
        raise ValueError(f"unknown validation level {level!r}")
    out: list[Violation] = []

    n = len(monitoring.signals)
    if n < 2 or len(monitoring.f0) != n or len(monitoring.f1) != n:
        out.append(Violation("NonSimplex", "need >= 2 signals and matching f0/f1 lengths"))
        return out
    if len(set(monitoring.signals)) != n:
        out.append(Violation("NonSimplex", "duplicate signal names"))
    for name, vec in (("f0", monitoring.f0), ("f1", monitoring.f1)):
        if any((not math.isfinite(q)) or q < 0.0 for q in vec):
            out.append(Violation("NonSimplex", f"{name} has negative or non-finite entries"))
        elif abs(sum(vec) - 1.0) > SIMPLEX_TOL:
            out.append(Violation("NonSimplex", f"{name} sums to {sum(vec)!r}, not 1"))
    if not all(q > 0.0 for q in monitoring.f1):
        out.append(Violation("MissingFullSupport", "f1 must be strictly positive everywhere"))
    if all(abs(a - b) <= SIMPLEX_TOL for a, b in zip(monitoring.f0, monitoring.f1)):
        out.append(Violation("UninformativeMonitoring", "f0 and f1 coincide"))

    p = params
    for name, val, lo, hi in (
        ("kappa", p.kappa, 0.0, 1.0),
        ("delta", p.delta, 0.0, 1.0),
        ("pi0", p.pi0, 0.0, 1.0),
    ):
        if not (math.isfinite(val) and lo < val < hi):
            out.append(Violation("ParamOutOfRange", f"{name}={val!r} not in ({lo}, {hi})"))
    if not (math.isfinite(p.c) and p.c >= 0.0):
        out.append(Violation("ParamOutOfRange", f"c={p.c!r} must be >= 0"))
    elif level == STRICT and math.isfinite(p.pi0) and 0.0 < p.pi0 < 1.0:
        if p.c >= min(p.pi0, 1.0 - p.pi0):
            out.append(
                Violation(
                    "ReplacementCostTooLarge",
                    f"c={p.c!r} must be < min(pi0, 1-pi0) = {min(p.pi0, 1.0 - p.pi0)!r}",
                )
            )
    return out


def validate(
    monitoring: MonitoringStructure, params: GameParams, level: str = STRICT
) -> Model:
    """Return an immutable validated model, or raise :class:`ValidationError`
    carrying the full violation list."""
    violations = find_violations(monitoring, params, level)
    if violations:
        raise ValidationError(violations)
    return Model(monitoring=monitoring, params=params, level=level)


def bayes_update(monitoring: MonitoringStructure, pi: Belief, a: float, s: str) -> Belief:
    """Posterior reputation after signal ``s`` when the opportunist works
    with probability ``a``.

        beta_a(pi | s) = pi f1(s) / ([pi + (1-pi) a] f1(s) + (1-pi)(1-a) f0(s))

    Defined for pi in (0, 1]; pi = 0 is rejected (callers handle absorbing
    zero beliefs explicitly). Pooling (a = 1) and a degenerate prior
    (pi = 1) both leave the belief unchanged.
    """
    if not 0.0 < pi <= 1.0:
        raise ValueError(f"bayes_update requires pi in (0, 1], got {pi!r}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"effort probability must be in [0, 1], got {a!r}")
    i = monitoring.index(s)
    num = pi * monitoring.f1[i]
    den = (pi + (1.0 - pi) * a) * monitoring.f1[i] + (1.0 - pi) * (1.0 - a) * monitoring.f0[i]
    return num / den


def max_update(monitoring: MonitoringStructure, pi: Belief, eta: float) -> Belief:
    """Highest one-period posterior when the opportunist's effort is known
    to be at least ``eta``:

        Bbar_eta(pi) = pi / (pi + (1-pi) [eta + (1-eta) lambda]),

    with lambda the smallest likelihood ratio. Equals the maximum of
    ``bayes_update`` over effort in [eta, 1] and all signals.
    """
    if not 0.0 < pi <= 1.0:
        raise ValueError(f"max_update requires pi in (0, 1], got {pi!r}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta!r}")
    lam = monitoring.min_ratio
    return pi / (pi + (1.0 - pi) * (eta + (1.0 - eta) * lam))


def iterated_max_update(
    monitoring: MonitoringStructure, pi: Belief, eta: float, t: int
) -> Belief:
    """t-fold composition of :func:`max_update`; t = 0 returns ``pi``."""
    if t < 0:
        raise ValueError("t must be a nonnegative integer")
    out = pi
    for _ in range(t):
        out = max_update(monitoring, out, eta)
    return out


def belief_growth_bound(pi: Belief, eta: float, t: int) -> float:
    """Closed-form ceiling on eta-damped belief growth over t periods:

        (pi + (1-pi) eta^(t+1)) / (pi + (1-pi) eta^t)

    Dominates ``Bbar^t(pi) + (1 - Bbar^t(pi)) eta`` and increases in t.
    """
    if not 0.0 < pi < 1.0:
        raise ValueError(f"belief_growth_bound requires pi in (0, 1), got {pi!r}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta!r}")
    if t < 0:
        raise ValueError("t must be a nonnegative integer")
    return (pi + (1.0 - pi) * eta ** (t + 1)) / (pi + (1.0 - pi) * eta**t)
