"""Average-cost dynamic programming on job-count-truncated state spaces.

The truncated MDP caps every queue at m jobs; an arrival into a full queue is
redirected to the self-transition.  Relative value iteration runs over a
dense value array shaped (nodes, m+1, ..., m+1) so each sweep is a handful of
vectorized shifts, and a feasibility loop escalates m until the optimal
average cost stops moving or the configured budgets run out.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .model import SystemState, TransitionEntry
from .network import NetworkSpec


@dataclass(frozen=True)
class TruncatedMdp:
    """Finite MDP with per-queue cap m over a scheduling network.

    States are indexed mixed-radix: index = (node - 1) * (m+1)^d + the job
    vector read as a base-(m+1) number with x_1 most significant.
    """

    net: NetworkSpec
    m: int
    num_states: int = field(init=False)

    def __post_init__(self) -> None:
        d = self.net.demand_count
        object.__setattr__(
            self, "num_states", self.net.node_count * (self.m + 1) ** d
        )

    def index_of(self, state: SystemState) -> int:
        idx = state.node - 1
        for x in state.jobs:
            if not 0 <= x <= self.m:
                raise ValueError(f"job count {x} outside [0, {self.m}]")
            idx = idx * (self.m + 1) + x
        return idx

    def state_of(self, index: int) -> SystemState:
        d = self.net.demand_count
        jobs = []
        for _ in range(d):
            index, x = divmod(index, self.m + 1)
            jobs.append(x)
        return SystemState(index + 1, tuple(reversed(jobs)))

    def states(self):
        return (self.state_of(i) for i in range(self.num_states))

    def transitions(self, state: SystemState, action: int) -> list[TransitionEntry]:
        """Row of the truncated kernel; probabilities sum to exactly 1."""
        net = self.net
        v, jobs = state
        if action != v and action not in net.adjacency[v]:
            raise ValueError(f"action {action} not available at node {v}")
        entries: list[TransitionEntry] = []
        total = 0.0
        for i in range(1, net.demand_count + 1):
            li = net.lam[i]
            if li > 0.0 and jobs[i - 1] < self.m:  # full queues bounce to self
                bumped = jobs[: i - 1] + (jobs[i - 1] + 1,) + jobs[i:]
                entries.append(TransitionEntry(SystemState(v, bumped), li))
                total += li
        if action == v:
            if v <= net.demand_count and jobs[v - 1] >= 1:
                dropped = jobs[: v - 1] + (jobs[v - 1] - 1,) + jobs[v:]
                entries.append(TransitionEntry(SystemState(v, dropped), net.mu[v]))
                total += net.mu[v]
        else:
            entries.append(TransitionEntry(SystemState(action, jobs), net.tau))
            total += net.tau
        residual = 1.0 - total
        if residual > 0.0:
            entries.append(TransitionEntry(state, residual))
        return entries


#: Guard against value arrays that would not fit in memory.
DEFAULT_STATE_GUARD = 20_000_000


def build_truncated(net: NetworkSpec, m: int, state_guard: int = DEFAULT_STATE_GUARD) -> TruncatedMdp:
    if m < 1:
        raise ValueError("truncation level m must be >= 1")
    mdp = TruncatedMdp(net=net, m=m)
    if mdp.num_states > state_guard:
        raise ValueError(
            f"truncated state space has {mdp.num_states} states, above the guard {state_guard}"
        )
    return mdp


@dataclass(frozen=True)
class DpResult:
    g_star: float
    iterations: int
    span_at_exit: float
    converged: bool
    tolerance: float
    bias: np.ndarray | None = None


def _shift_arrival(arr: np.ndarray, axis: int) -> np.ndarray:
    """Value after one arrival on `axis`, with the full level repeating itself."""
    upper = arr.take(indices=range(1, arr.shape[axis]), axis=axis)
    edge = arr.take(indices=[arr.shape[axis] - 1], axis=axis)
    return np.concatenate([upper, edge], axis=axis)


def _shift_departure(arr: np.ndarray, axis: int) -> np.ndarray:
    """Value after one departure on `axis`; the x=0 slot is a dummy."""
    lower = arr.take(indices=range(arr.shape[axis] - 1), axis=axis)
    edge = arr.take(indices=[0], axis=axis)
    return np.concatenate([edge, lower], axis=axis)


def relative_value_iteration(
    mdp: TruncatedMdp,
    tolerance: float = 1e-7,
    max_iters: int = 1_000_000,
    damping: float = 0.5,
    keep_bias: bool = False,
) -> DpResult:
    """Span-seminorm relative value iteration for the optimal average cost.

    Each sweep applies the Bellman cost operator, re-centers on the reference
    state, and stops once the sweep difference has span below `tolerance`;
    the average cost is the midpoint of that difference's range.  `damping`
    mixes in a self-transition ((1-damping) * identity), which removes
    periodicity without changing the average cost.
    """
    net = mdp.net
    d, m = net.demand_count, mdp.m
    nodes = net.node_count
    shape = (nodes,) + (m + 1,) * d

    levels = np.arange(m + 1, dtype=float)
    cost_grid = np.zeros((m + 1,) * d)
    for i in range(1, d + 1):
        axis_shape = [1] * d
        axis_shape[i - 1] = m + 1
        cost_grid = cost_grid + net.cost[i] * levels.reshape(axis_shape)

    lam_total = sum(net.lam)
    values = np.zeros(shape)
    nu = damping
    span = float("inf")
    g_lo = g_hi = 0.0
    iterations = 0

    masks = {}
    for i in range(1, d + 1):
        axis_shape = [1] * d
        axis_shape[i - 1] = m + 1
        masks[i] = (levels.reshape(axis_shape) >= 1)

    for iterations in range(1, max_iters + 1):
        arrivals = np.zeros(shape)
        for i in range(1, d + 1):
            if net.lam[i] > 0.0:
                arrivals += net.lam[i] * _shift_arrival(values, axis=i)

        best = np.empty(shape)
        for v in range(1, nodes + 1):
            slab = values[v - 1]
            if v <= d:
                served = _shift_departure(slab, axis=v - 1)
                stay = np.where(
                    masks[v],
                    net.mu[v] * served + (1.0 - lam_total - net.mu[v]) * slab,
                    (1.0 - lam_total) * slab,
                )
            else:
                stay = (1.0 - lam_total) * slab
            q = stay + arrivals[v - 1]
            base = (1.0 - lam_total - net.tau) * slab + arrivals[v - 1]
            for u in net.adjacency[v]:
                q = np.minimum(q, base + net.tau * values[u - 1])
            best[v - 1] = q

        updated = cost_grid + (1.0 - nu) * values + nu * best
        diff = updated - values
        g_lo, g_hi = float(diff.min()), float(diff.max())
        span = g_hi - g_lo
        values = updated - updated.flat[0]
        if span < tolerance:
            break

    g_star = 0.5 * (g_lo + g_hi)
    return DpResult(
        g_star=g_star,
        iterations=iterations,
        span_at_exit=span,
        converged=span < tolerance,
        tolerance=tolerance,
        bias=values if keep_bias else None,
    )


def greedy_actions(mdp: TruncatedMdp, bias: np.ndarray) -> np.ndarray:
    """Bellman-greedy action (target node id) per state, from a bias array."""
    net = mdp.net
    d, m = net.demand_count, mdp.m
    lam_total = sum(net.lam)
    values = bias
    shape = values.shape
    arrivals = np.zeros(shape)
    for i in range(1, d + 1):
        if net.lam[i] > 0.0:
            arrivals += net.lam[i] * _shift_arrival(values, axis=i)
    levels = np.arange(m + 1, dtype=float)
    actions = np.empty(shape, dtype=np.int32)
    for v in range(1, net.node_count + 1):
        slab = values[v - 1]
        if v <= d:
            axis_shape = [1] * d
            axis_shape[v - 1] = m + 1
            mask = levels.reshape(axis_shape) >= 1
            served = _shift_departure(slab, axis=v - 1)
            stay = np.where(
                mask,
                net.mu[v] * served + (1.0 - lam_total - net.mu[v]) * slab,
                (1.0 - lam_total) * slab,
            )
        else:
            stay = (1.0 - lam_total) * slab
        choices = [stay + arrivals[v - 1]]
        ids = [v]
        base = (1.0 - lam_total - net.tau) * slab + arrivals[v - 1]
        for u in net.adjacency[v]:
            choices.append(base + net.tau * values[u - 1])
            ids.append(u)
        stacked = np.stack(choices)
        # ids are ascending only for the neighbor block; order candidates so
        # argmin's first-match tie-break is the lowest node id
        order = np.argsort(ids, kind="stable")
        stacked = stacked[order]
        id_arr = np.asarray(ids, dtype=np.int32)[order]
        actions[v - 1] = id_arr[np.argmin(stacked, axis=0)]
    return actions


class GreedyTablePolicy:
    """Tabular policy extracted from a converged value array.

    Job counts beyond the truncation level are clamped, so the policy stays
    defined on the untruncated simulator.
    """

    def __init__(self, mdp: TruncatedMdp, bias: np.ndarray, name: str = "dp-greedy"):
        self.net = mdp.net
        self.m = mdp.m
        self.table = greedy_actions(mdp, bias)
        self.name = name

    def reset(self) -> None:
        pass

    def decide(self, state: SystemState) -> int:
        idx = (state.node - 1,) + tuple(min(x, self.m) for x in state.jobs)
        return int(self.table[idx])


@dataclass(frozen=True)
class FeasibilityLimits:
    """Budgets for the truncation-escalation loop."""

    state_limit: int = 1_000_000
    time_limit: float = 600.0
    m_start: int = 10
    m_step: int = 10
    epsilon: float = 1e-3
    tolerance: float = 1e-7
    max_iters: int = 1_000_000
    max_demand: int = 4  # d >= this is declared infeasible outright


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    g_star: float | None
    reason: str
    history: tuple[dict, ...]
    limits: FeasibilityLimits


def feasibility_escalation(
    net: NetworkSpec, limits: FeasibilityLimits = FeasibilityLimits()
) -> FeasibilityResult:
    """Escalate the truncation level and decide whether DP output is trustworthy.

    Starting from m_start, each level is solved and timed; the level grows by
    m_step while the state count stays below state_limit and the solve stays
    below time_limit.  The instance is infeasible if the demand count is too
    large, the cost never left zero, or the last escalation still moved the
    cost by more than epsilon.
    """
    if net.demand_count >= limits.max_demand:
        return FeasibilityResult(False, None, "too many demand points", (), limits)
    d = net.demand_count
    history: list[dict] = []
    g_prev = 0.0
    g_cur = 0.0
    m = limits.m_start
    while True:
        states = net.node_count * (m + 1) ** d
        if states >= limits.state_limit:
            break
        mdp = build_truncated(net, m)
        started = time.perf_counter()
        result = relative_value_iteration(
            mdp, tolerance=limits.tolerance, max_iters=limits.max_iters
        )
        elapsed = time.perf_counter() - started
        g_prev, g_cur = g_cur, result.g_star
        history.append(
            {"m": m, "g_star": result.g_star, "seconds": elapsed,
             "states": states, "iterations": result.iterations}
        )
        if elapsed >= limits.time_limit:
            break
        m += limits.m_step
    if abs(g_cur) < limits.tolerance:  # zero cost up to solver resolution
        return FeasibilityResult(False, None, "zero average cost", tuple(history), limits)
    if g_cur - g_prev > limits.epsilon:
        return FeasibilityResult(
            False, None, "cost still rising with the truncation level",
            tuple(history), limits,
        )
    return FeasibilityResult(True, g_cur, "converged", tuple(history), limits)
