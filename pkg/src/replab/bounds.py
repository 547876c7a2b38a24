"""Closed-form ceiling on the voters' outside option when incentives fail.

When full-effort incentives fail with uniform-failure horizon T, every
equilibrium's outside option (expected effort from a newly installed
incumbent) lies below

    c + inf_{eta in (0,1)} g(eta),
    g(eta) = (pi0 + (1-pi0) eta^(T+1)) / (pi0 + (1-pi0) eta^T).

g tends to 1 at both ends of (0,1) and has an interior minimum; it is
minimized here by a log-uniform grid pass followed by golden-section
refinement. The horizon produced by the fei module is conservative
(possibly larger than necessary); g's minimum increases with T, so the
emitted value remains a valid upper bound. T is surfaced in all outputs
so callers can substitute a sharper horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fei
from .errors import FeiHoldsNoBound, ValidationError
from .model import GameParams, MonitoringStructure, RELAXED, find_violations

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OutsideOptionBound:
    horizon_T: int
    eta_star: float
    bound_value: float  # c + g(eta_star)
    g_value: float      # g(eta_star)

    def to_dict(self) -> dict:
        return {
            "horizon_T": self.horizon_T,
            "eta_star": self.eta_star,
            "bound_value": self.bound_value,
            "g_value": self.g_value,
        }


def g_ratio(pi0: float, eta: float, horizon_T: int) -> float:
    """The belief-growth ratio whose infimum over eta caps the outside option."""
    return (pi0 + (1.0 - pi0) * eta ** (horizon_T + 1)) / (
        pi0 + (1.0 - pi0) * eta**horizon_T
    )


def _golden_section(func, lo: float, hi: float, width: float = 1e-12) -> float:
    """Minimizer of a unimodal function on [lo, hi] to the given bracket width."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = func(d)
    return 0.5 * (a + b)


def minimize_g(pi0: float, horizon_T: int, grid_points: int = 1024) -> tuple[float, float]:
    """(eta_star, g(eta_star)): log-uniform grid sweep guarding against
    multimodality, then golden-section to a 1e-12 bracket."""
    grid = np.geomspace(1e-12, 1.0 - 1e-12, grid_points)
    vals = (pi0 + (1.0 - pi0) * grid ** (horizon_T + 1)) / (
        pi0 + (1.0 - pi0) * grid**horizon_T
    )
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid_points - 1)]
    eta_star = _golden_section(lambda e: g_ratio(pi0, e, horizon_T), lo, hi)
    return eta_star, g_ratio(pi0, eta_star, horizon_T)


def outside_option_bound(
    params: GameParams, monitoring: MonitoringStructure
) -> OutsideOptionBound:
    """Upper bound c + min_eta g(eta) on the outside option; requires the
    full-effort-incentive check to fail."""
    violations = find_violations(monitoring, params, RELAXED)
    if violations:
        raise ValidationError(violations)
    cert = fei.check_fei(params, monitoring)
    if cert.holds:
        raise FeiHoldsNoBound("full-effort incentives hold; the ceiling does not apply")
    horizon_T = cert.refutation.horizon_T
    eta_star, g_min = minimize_g(params.pi0, horizon_T)
    return OutsideOptionBound(
        horizon_T=horizon_T,
        eta_star=eta_star,
        bound_value=params.c + g_min,
        g_value=g_min,
    )


def bound_sweep(
    params: GameParams,
    monitoring: MonitoringStructure,
    pi0_grid: list[float],
    c_grid: list[float],
) -> list[dict]:
    """Bound table over a (pi0, c) grid for fixed (kappa, delta, monitoring).

    Sanity-asserts the comparative statics the closed form guarantees:
    the bound weakly falls as pi0 falls (at fixed c) and moves exactly
    additively in c.
    """
    first = GameParams(params.kappa, params.delta, pi0_grid[0], c_grid[0])
    violations = find_violations(monitoring, first, RELAXED)
    if violations:
        raise ValidationError(violations)
    cert = fei.check_fei(params, monitoring)
    if cert.holds:
        raise FeiHoldsNoBound("full-effort incentives hold; the ceiling does not apply")
    horizon_T = cert.refutation.horizon_T

    g_by_pi0 = {}
    for pi0 in pi0_grid:
        eta_star, g_min = minimize_g(pi0, horizon_T)
        g_by_pi0[pi0] = (eta_star, g_min)
    ordered = sorted(pi0_grid, reverse=True)
    for hi, lo in zip(ordered, ordered[1:]):
        assert g_by_pi0[hi][1] >= g_by_pi0[lo][1], "bound must fall with pi0"

    rows = []
    for pi0 in pi0_grid:
        eta_star, g_min = g_by_pi0[pi0]
        for c in c_grid:
            rows.append(
                {
                    "pi0": pi0,
                    "c": c,
                    "T": horizon_T,
                    "eta_star": eta_star,
                    "bound": c + g_min,
                }
            )
    return rows
