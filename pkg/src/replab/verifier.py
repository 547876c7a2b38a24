"""Independently certify a strategy automaton as an equilibrium.

Three families of checks, each reduced to signed residuals with explicit
tolerances:

1. Officeholder one-shot deviations. At every state the work-minus-shirk
   value gap (computed from the automaton's own value table, never from
   construction closed forms) must match the prescribed action: zero gap
   (within tolerance) where effort mixes, nonnegative where effort is
   certain, nonpositive where shirking is certain.

2. Voter replacement choices. Expected incumbent effort e(q) is compared
   with the outside option net of the replacement cost, u0 - c, with u0
   read off the initial state. Mixing requires indifference; certain
   retention (replacement) requires e(q) to be weakly above (below) the
   net outside option. The initial state has no vote. States reachable
   only through a certain-replacement state are evaluated as informational
   only: the voter never actually moves there.

3. Bayes consistency. Along every edge out of a state that retains with
   positive probability (or out of the initial state),
   |f_e(s) pi(succ) - pi(q) f1(s)| must vanish; edges out of
   certain-replacement states carry unconstrained beliefs.

Officeholder tolerances are widened per state by the exact influence of
any unmaterialized branches on the value gap, so verification of lazily
truncated automata stays sound.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .equilibria import EquilibriumAutomaton, ValueTable, compute_values
from .model import GameParams, MonitoringStructure


@dataclass(frozen=True)
class Offender:
    category: str  # "politician_ic" | "voter_ic" | "bayes"
    location: str  # state id or "state --signal--> state"
    residual: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "location": self.location,
            "residual": self.residual,
            "tolerance": self.tolerance,
        }


@dataclass
class VerificationReport:
    passed: bool
    tol: float
    tail_bound: float
    outside_option: float
    politician_ic: dict[int, float]          # violation magnitude per state
    politician_gap: dict[int, float]         # signed work-minus-shirk gap
    politician_tol: dict[int, float]
    voter_ic: dict[int, float]               # violation magnitude per non-initial state
    voter_gap: dict[int, float]              # signed e(q) - (u0 - c)
    informational_states: set[int]           # voter checks evaluated but non-binding
    bayes: dict[tuple[int, str], float]
    offenders: list[Offender] = field(default_factory=list)

    def worst(self, category: Optional[str] = None) -> Optional[Offender]:
        pool = [o for o in self.offenders if category is None or o.category == category]
        return pool[0] if pool else None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "tail_bound": self.tail_bound,
            "outside_option": self.outside_option,
            "max_politician_residual": max(self.politician_ic.values(), default=0.0),
            "max_voter_residual": max(
                (r for q, r in self.voter_ic.items() if q not in self.informational_states),
                default=0.0,
            ),
            "max_bayes_residual": max(self.bayes.values(), default=0.0),
            "offenders": [o.to_dict() for o in self.offenders[:10]],
        }


def expected_effort(automaton: EquilibriumAutomaton, state_id: int) -> float:
    """e(q) = pi + (1 - pi) sigma_P; at the initial state this is the
    voters' outside option."""
    q = automaton.state(state_id)
    return q.belief + (1.0 - q.belief) * q.effort_prob


def _on_path_states(automaton: EquilibriumAutomaton) -> set[int]:
    """States reachable from the initial state without crossing a
    certain-replacement state; every other state is only consulted after
    the career has already ended."""
    seen = {automaton.initial}
    queue = deque([automaton.initial])
    while queue:
        qid = queue.popleft()
        state = automaton.state(qid)
        if qid != automaton.initial and state.replace_prob >= 1.0:
            continue
        for s in automaton.signals:
            nxt = automaton.successor(qid, s)
            if nxt is not None and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def verify(
    automaton: EquilibriumAutomaton,
    params: GameParams,
    monitoring: MonitoringStructure,
    tol: float = 1e-8,
    depth: int = 200,
    values: Optional[ValueTable] = None,
) -> VerificationReport:
    """Check every equilibrium condition at every materialized state."""
    if values is None:
        values = compute_values(automaton, params, monitoring, depth=depth)
    delta, kappa = params.delta, params.kappa
    u0 = expected_effort(automaton, automaton.initial)
    target = u0 - params.c
    on_path = _on_path_states(automaton)

    politician_ic: dict[int, float] = {}
    politician_gap: dict[int, float] = {}
    politician_tol: dict[int, float] = {}
    voter_ic: dict[int, float] = {}
    voter_gap: dict[int, float] = {}
    informational: set[int] = set()
    bayes: dict[tuple[int, str], float] = {}
    offenders: list[Offender] = []
    passed = True

    for q in automaton.states:
        # -- one-shot deviation gap for the officeholder ---------------------
        cont1 = 0.0  # discounted continuation under work
        cont0 = 0.0  # ... under shirk
        gap_slack = 0.0  # widening from unmaterialized successors
        for i, s in enumerate(monitoring.signals):
            succ = automaton.successor(q.id, s)
            if succ is None:
                gap_slack += delta * (monitoring.f1[i] + monitoring.f0[i])
                continue
            surv = 1.0 - automaton.state(succ).replace_prob
            v = values.values[succ]
            err = values.errors[succ]
            cont1 += delta * monitoring.f1[i] * surv * v
            cont0 += delta * monitoring.f0[i] * surv * v
            gap_slack += delta * (monitoring.f1[i] + monitoring.f0[i]) * surv * err
        gap = -(1.0 - delta) * kappa + cont1 - cont0
        if 0.0 < q.effort_prob < 1.0:
            violation = abs(gap)
        elif q.effort_prob >= 1.0:
            violation = max(0.0, -gap)
        else:
            violation = max(0.0, gap)
        q_tol = tol + gap_slack
        politician_gap[q.id] = gap
        politician_ic[q.id] = violation
        politician_tol[q.id] = q_tol
        if violation > q_tol:
            passed = False
            offenders.append(Offender("politician_ic", str(q.id), violation, q_tol))

        # -- voter replacement choice ---------------------------------------
        if q.id != automaton.initial:
            vgap = expected_effort(automaton, q.id) - target
            if 0.0 < q.replace_prob < 1.0:
                vviol = abs(vgap)
            elif q.replace_prob <= 0.0:
                vviol = max(0.0, -vgap)
            else:
                vviol = max(0.0, vgap)
            voter_gap[q.id] = vgap
            voter_ic[q.id] = vviol
            if q.id not in on_path:
                informational.add(q.id)
            elif vviol > tol:
                passed = False
                offenders.append(Offender("voter_ic", str(q.id), vviol, tol))

        # -- Bayes consistency along outgoing edges --------------------------
        if q.id == automaton.initial or q.replace_prob < 1.0:
            e_q = expected_effort(automaton, q.id)
            law = monitoring.mixture(e_q)
            for i, s in enumerate(monitoring.signals):
                succ = automaton.successor(q.id, s)
                if succ is None:
                    continue
                residual = abs(
                    law[i] * automaton.state(succ).belief - q.belief * monitoring.f1[i]
                )
                bayes[(q.id, s)] = residual
                if residual > tol:
                    passed = False
                    offenders.append(
                        Offender("bayes", f"{q.id} --{s}--> {succ}", residual, tol)
                    )

    offenders.sort(key=lambda o: o.residual / max(o.tolerance, 1e-300), reverse=True)
    return VerificationReport(
        passed=passed,
        tol=tol,
        tail_bound=values.tail_bound,
        outside_option=u0,
        politician_ic=politician_ic,
        politician_gap=politician_gap,
        politician_tol=politician_tol,
        voter_ic=voter_ic,
        voter_gap=voter_gap,
        informational_states=informational,
        bayes=bayes,
        offenders=offenders,
    )
