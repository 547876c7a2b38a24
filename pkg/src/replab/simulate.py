"""Seeded Monte Carlo careers under a strategy automaton, with analytic
stationary-chain oracles.

Period order follows the package-wide contract: at t > 0 the voter first
replaces (resetting the automaton to its initial state and drawing a fresh
type, good with probability pi0); the incumbent then acts (good types
always work, opportunists work with the state's effort probability); the
signal is drawn from the action's distribution and advances the state. At
t = 0 there is no vote.

Determinism contract: path p consumes a fixed layout of uniforms,
(horizon x 4) slots [vote, type, action, signal], from a counter-based
Philox stream keyed by (master_seed, p). Results are therefore
bit-identical regardless of batching or scheduling.

The belief-martingale residual averages one-step increments of the acting
incumbent's reputation, pi(successor) - pi(state), over every acting
period. The successor belief forms before the next vote, so replacement
resets never enter the average and no retention selection biases it; under
Bayes-consistent beliefs the increments have mean zero exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .equilibria import REGIME_FIRST, EquilibriumAutomaton
from .errors import DepthInsufficient
from .model import GameParams, MonitoringStructure
from .verifier import expected_effort

_BATCH = 4096
_UNIFORM_SLOTS = 4  # vote, type, action, signal
TENURE_THRESHOLDS = (10, 50, 100, 200)


@dataclass(frozen=True)
class SimulationConfig:
    horizon: int
    paths: int
    master_seed: int
    record_traces: bool = False

    def __post_init__(self):
        if self.horizon < 1 or self.paths < 1:
            raise ValueError("horizon and paths must both be >= 1")


@dataclass
class SimulationStats:
    """Per-period and aggregate measurements from seeded career runs."""

    horizon: int
    paths: int
    master_seed: int
    # per-period arrays (length horizon)
    mean_effort: np.ndarray
    replace_rate: np.ndarray
    mean_belief: np.ndarray
    favorable_replacements: np.ndarray  # counts of replacements at belief > pi0
    # aggregates
    favorable_total: int
    burn_in: int
    long_run_effort: float
    long_run_se: float
    burn_in_sensitivity: dict[int, float]
    martingale_mean: float
    martingale_se: float
    tenure_histogram: np.ndarray  # completed tenures, index = periods served
    censored_tenures: int
    final_tenure_exceeds: dict[int, float]
    first_replacement_histogram: np.ndarray  # index = period of first replacement
    first_politician_survival: dict[int, float]  # P(first career outlives t)
    traces: Optional[dict] = field(default=None, repr=False)

    def to_json(self) -> str:
        """Canonical JSON; byte-identical across reruns with equal inputs."""
        payload = {
            "horizon": self.horizon,
            "paths": self.paths,
            "master_seed": self.master_seed,
            "mean_effort": self.mean_effort.tolist(),
            "replace_rate": self.replace_rate.tolist(),
            "mean_belief": self.mean_belief.tolist(),
            "favorable_replacements": self.favorable_replacements.tolist(),
            "favorable_total": self.favorable_total,
            "burn_in": self.burn_in,
            "long_run_effort": self.long_run_effort,
            "long_run_se": self.long_run_se,
            "burn_in_sensitivity": {str(k): v for k, v in self.burn_in_sensitivity.items()},
            "martingale_mean": self.martingale_mean,
            "martingale_se": self.martingale_se,
            "tenure_histogram": self.tenure_histogram.tolist(),
            "censored_tenures": self.censored_tenures,
            "final_tenure_exceeds": {str(k): v for k, v in self.final_tenure_exceeds.items()},
            "first_replacement_histogram": self.first_replacement_histogram.tolist(),
            "first_politician_survival": {
                str(k): v for k, v in self.first_politician_survival.items()
            },
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _path_uniforms(master_seed: int, path_index: int, horizon: int) -> np.ndarray:
    key = np.array([master_seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(
        (horizon, _UNIFORM_SLOTS)
    )


def simulate(
    automaton: EquilibriumAutomaton,
    params: GameParams,
    monitoring: MonitoringStructure,
    config: SimulationConfig,
) -> SimulationStats:
    """Run ``config.paths`` independent careers for ``config.horizon`` periods."""
    horizon, paths = config.horizon, config.paths
    pi0 = params.pi0
    sv, sp, pi, nxt = automaton.as_arrays()
    cdf0 = np.cumsum(monitoring.f0)
    cdf1 = np.cumsum(monitoring.f1)
    cdf0[-1] = cdf1[-1] = 1.0

    if config.record_traces and paths * horizon > 20_000_000:
        raise ValueError("record_traces is meant for desk-scale runs")

    effort_sum = np.zeros(horizon)
    belief_sum = np.zeros(horizon)
    replace_count = np.zeros(horizon)
    favorable_count = np.zeros(horizon)
    tenure_hist = np.zeros(horizon + 1, dtype=np.int64)
    first_rep_hist = np.zeros(horizon + 1, dtype=np.int64)  # [horizon] = censored
    censored_tenures = 0
    exceed_counts = {thr: 0 for thr in TENURE_THRESHOLDS}

    burn_in = horizon // 5
    cutoffs = sorted({0, horizon // 10, burn_in, (2 * horizon) // 5})
    # per-path aggregates, reduced once at the end in a batching-independent order
    lr_means = {cut: np.zeros(paths) for cut in cutoffs}
    mart_means = np.zeros(paths)

    traces = None
    if config.record_traces:
        traces = {
            "effort": np.zeros((paths, horizon), dtype=np.uint8),
            "state": np.zeros((paths, horizon), dtype=np.int32),
            "belief": np.zeros((paths, horizon)),
        }

    for start in range(0, paths, _BATCH):
        stop = min(start + _BATCH, paths)
        nb = stop - start
        u = np.empty((nb, horizon, _UNIFORM_SLOTS))
        for i in range(nb):
            u[i] = _path_uniforms(config.master_seed, start + i, horizon)

        state = np.full(nb, automaton.initial, dtype=np.int64)
        good = u[:, 0, 1] < pi0
        tenure = np.zeros(nb, dtype=np.int64)
        path_effort = np.zeros(nb)
        prefix = {cut: np.zeros(nb) for cut in cutoffs}
        path_mart = np.zeros(nb)
        first_rep = np.full(nb, horizon, dtype=np.int64)
        still_first = np.ones(nb, dtype=bool)

        for t in range(horizon):
            if t > 0:
                replaced = u[:, t, 0] < sv[state]
                if replaced.any():
                    favorable_count[t] += np.count_nonzero(
                        replaced & (pi[state] > pi0)
                    )
                    tenure_hist += np.bincount(
                        tenure[replaced], minlength=horizon + 1
                    )
                    newly = replaced & still_first
                    first_rep[newly] = t
                    still_first &= ~replaced
                    good = np.where(replaced, u[:, t, 1] < pi0, good)
                    state = np.where(replaced, automaton.initial, state)
                    tenure = np.where(replaced, 0, tenure)
                replace_count[t] += np.count_nonzero(replaced)
            for cut in cutoffs:
                if t == cut:
                    prefix[cut][:] = path_effort

            belief_now = pi[state]
            belief_sum[t] += belief_now.sum()
            act = good | (u[:, t, 2] < sp[state])
            effort_sum[t] += np.count_nonzero(act)
            path_effort += act

            sig = np.where(
                act,
                np.searchsorted(cdf1, u[:, t, 3], side="right"),
                np.searchsorted(cdf0, u[:, t, 3], side="right"),
            )
            state_next = nxt[state, sig]
            if np.any(state_next < 0):
                raise DepthInsufficient(
                    f"path walked off the materialized automaton at period {t}"
                )
            path_mart += pi[state_next] - belief_now
            if traces is not None:
                traces["effort"][start:stop, t] = act
                traces["state"][start:stop, t] = state
                traces["belief"][start:stop, t] = belief_now
            state = state_next
            tenure += 1

        censored_tenures += nb
        tenure_final = np.minimum(tenure, horizon)
        for thr in TENURE_THRESHOLDS:
            exceed_counts[thr] += int(np.count_nonzero(tenure_final > thr))
        first_rep_hist += np.bincount(first_rep, minlength=horizon + 1)

        for cut in cutoffs:
            lr_means[cut][start:stop] = (path_effort - prefix[cut]) / (horizon - cut)
        mart_means[start:stop] = path_mart / horizon

    long_run = float(lr_means[burn_in].mean())
    long_run_se = float(lr_means[burn_in].std(ddof=1) / np.sqrt(paths)) if paths > 1 else 0.0
    mart_mean = float(mart_means.mean())
    mart_se = float(mart_means.std(ddof=1) / np.sqrt(paths)) if paths > 1 else 0.0

    # first_rep_hist[horizon] counts paths never replaced within the window;
    # survival[t] = P(first incumbent still in office after the period-t vote)
    survival_points = sorted(t for t in (50, 100, 200, horizon - 1) if 0 <= t < horizon)
    survival = {
        t: float(first_rep_hist[t + 1 :].sum() / paths) for t in survival_points
    }

    return SimulationStats(
        horizon=horizon,
        paths=paths,
        master_seed=config.master_seed,
        mean_effort=effort_sum / paths,
        replace_rate=replace_count / paths,
        mean_belief=belief_sum / paths,
        favorable_replacements=favorable_count,
        favorable_total=int(favorable_count.sum()),
        burn_in=burn_in,
        long_run_effort=long_run,
        long_run_se=long_run_se,
        burn_in_sensitivity={cut: float(lr_means[cut].mean()) for cut in cutoffs},
        martingale_mean=mart_mean,
        martingale_se=mart_se,
        tenure_histogram=tenure_hist,
        censored_tenures=censored_tenures,
        final_tenure_exceeds={
            thr: exceed_counts[thr] / paths for thr in TENURE_THRESHOLDS
        },
        first_replacement_histogram=first_rep_hist,
        first_politician_survival=survival,
        traces=traces,
    )


def martingale_diagnostic(stats: SimulationStats) -> float:
    """z-score of the mean one-step belief increment against the zero-drift
    null; identically-zero increments (pooling equilibria) score 0."""
    if stats.martingale_se == 0.0:
        return 0.0 if stats.martingale_mean == 0.0 else float("inf")
    return stats.martingale_mean / stats.martingale_se


@dataclass(frozen=True)
class AnalyticEffort:
    value: float
    method: str  # "lumped" | "direct" | "truncated"
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "residual": self.residual}


def _acting_chain(
    automaton: EquilibriumAutomaton, monitoring: MonitoringStructure
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int]]:
    """Transition matrix of the state in which the incumbent acts:
    replacement redirects probability mass to the initial state. Missing
    transitions are redirected too, with their mass reported separately."""
    index: dict[int, int] = {}
    order: list[int] = []

    def touch(qid: int) -> int:
        if qid not in index:
            index[qid] = len(order)
            order.append(qid)
        return index[qid]

    touch(automaton.initial)
    frontier = [automaton.initial]
    rows: list[tuple[int, dict[int, float], float]] = []
    while frontier:
        nxt_frontier = []
        for qid in frontier:
            q = automaton.state(qid)
            law = monitoring.mixture(expected_effort(automaton, qid))
            row: dict[int, float] = {}
            missing = 0.0
            for i, s in enumerate(monitoring.signals):
                succ = automaton.successor(qid, s)
                if succ is None:
                    missing += law[i]
                    continue
                stay = 1.0 - automaton.state(succ).replace_prob
                if stay > 0.0:
                    known = succ in index
                    j = touch(succ)
                    row[j] = row.get(j, 0.0) + law[i] * stay
                    if not known:
                        nxt_frontier.append(succ)
                row[0] = row.get(0, 0.0) + law[i] * (1.0 - stay)
            rows.append((index[qid], row, missing))
        frontier = nxt_frontier

    n = len(order)
    p = np.zeros((n, n))
    miss = np.zeros(n)
    for i, row, missing in rows:
        for j, mass in row.items():
            p[i, j] = mass
        miss[i] = missing
        p[i, 0] += missing  # truncated branches approximated as renewals
    efforts = np.array([expected_effort(automaton, qid) for qid in order])
    return p, miss, efforts, order


def _stationary(p: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    mu = np.linalg.solve(a, b)
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()


def analytic_long_run_effort(
    automaton: EquilibriumAutomaton,
    params: GameParams,
    monitoring: MonitoringStructure,
) -> AnalyticEffort:
    """Stationary mean effort of the acting-state chain.

    For the three-regime construction the FirstRegime states share one
    expected effort and one replacement probability, so the chain lumps
    exactly into {Initial, FirstRegime, SecondRegime}; otherwise the chain
    is solved directly over the materialized states, with any truncated
    mass redirected to renewal and reported as a residual.
    """
    lump = _try_lumped(automaton, monitoring)
    if lump is not None:
        return lump
    p, miss, efforts, order = _acting_chain(automaton, monitoring)
    mu = _stationary(p)
    residual = float(mu @ miss)
    method = "direct" if (automaton.complete or residual == 0.0) else "truncated"
    return AnalyticEffort(value=float(mu @ efforts), method=method, residual=residual)


def _try_lumped(
    automaton: EquilibriumAutomaton, monitoring: MonitoringStructure
) -> Optional[AnalyticEffort]:
    meta = automaton.meta
    if automaton.kind != "non-efe":
        return None
    if not {"x", "e_star", "a0", "s_star"} <= meta.keys():
        return None
    x, e_star = meta["x"], meta["e_star"]
    s_star = set(meta["s_star"])
    u0 = expected_effort(automaton, automaton.initial)
    # lumpability requires identical behavior across FirstRegime states
    for q in automaton.states:
        if q.regime == REGIME_FIRST:
            if (
                abs(expected_effort(automaton, q.id) - e_star) > 1e-10
                or abs(q.replace_prob - x) > 1e-12
            ):
                return None

    def pass_mass(e: float) -> float:
        law = monitoring.mixture(e)
        return sum(law[i] for i, s in enumerate(monitoring.signals) if s in s_star)

    f1_pass = pass_mass(1.0)
    p = np.zeros((3, 3))  # states: 0=Initial, 1=FirstRegime, 2=SecondRegime
    for i, e in ((0, u0), (1, e_star)):
        m = pass_mass(e)
        p[i, 2] = m
        p[i, 1] = (1.0 - m) * (1.0 - x)
        p[i, 0] = (1.0 - m) * x
    p[2, 2] = f1_pass
    p[2, 0] = 1.0 - f1_pass
    mu = _stationary(p)
    value = float(mu @ np.array([u0, e_star, 1.0]))
    return AnalyticEffort(value=value, method="lumped", residual=0.0)
