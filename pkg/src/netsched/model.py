"""Uniformized discrete-time MDP: states, actions, transition kernel, holding
cost, and the reward rate used by the index policies.

Rates are interpreted as per-step probabilities (the unit-step convention), so
a transition row is: one arrival band per demand point, at most one
action-dependent event band (service completion or switch success), and the
residual mass as a self-transition.
"""

from __future__ import annotations

from typing import NamedTuple

from .network import NetworkSpec


class SystemState(NamedTuple):
    """Server location plus the per-demand job counts."""

    node: int
    jobs: tuple[int, ...]


class TransitionEntry(NamedTuple):
    next: SystemState
    prob: float


def initial_state(net: NetworkSpec) -> SystemState:
    """Empty system with the server at node 1."""
    return SystemState(1, (0,) * net.demand_count)


def validate_state(net: NetworkSpec, state: SystemState) -> None:
    if not 1 <= state.node <= net.node_count:
        raise ValueError(f"server node {state.node} outside the network")
    if len(state.jobs) != net.demand_count or any(x < 0 for x in state.jobs):
        raise ValueError("job vector must be nonnegative with one entry per demand point")


def action_set(net: NetworkSpec, state: SystemState) -> tuple[int, ...]:
    """The current node plus its neighbors, ascending."""
    return tuple(sorted((state.node,) + net.adjacency[state.node]))


def step_cost(net: NetworkSpec, state: SystemState) -> float:
    """Holding cost accrued during one step: sum_i c_i x_i."""
    cost = net.cost
    return sum(cost[i + 1] * x for i, x in enumerate(state.jobs))


def reward_rate(net: NetworkSpec, state: SystemState, action: int) -> float:
    """c_i mu_i while serving a non-empty demand point, zero otherwise."""
    v = state.node
    if action != v and action not in net.adjacency[v]:
        raise ValueError(f"action {action} not available at node {v}")
    if action == v and v <= net.demand_count and state.jobs[v - 1] >= 1:
        return net.cost[v] * net.mu[v]
    return 0.0


def transition_distribution(
    net: NetworkSpec, state: SystemState, action: int
) -> list[TransitionEntry]:
    """One-step distribution for (state, action).

    Each demand point contributes an arrival with probability lambda_i.  If
    the action keeps the server at a non-empty demand point, a departure
    occurs there with probability mu_i; if the action targets a neighbor, the
    server moves with probability tau.  Residual mass stays on the state.
    """
    validate_state(net, state)
    v, jobs = state
    d = net.demand_count
    if action != v and action not in net.adjacency[v]:
        raise ValueError(f"action {action} not available at node {v}")

    entries: list[TransitionEntry] = []
    total = 0.0
    for i in range(1, d + 1):
        li = net.lam[i]
        if li > 0.0:
            bumped = jobs[: i - 1] + (jobs[i - 1] + 1,) + jobs[i:]
            entries.append(TransitionEntry(SystemState(v, bumped), li))
            total += li
    if action == v:
        if v <= d and jobs[v - 1] >= 1:
            dropped = jobs[: v - 1] + (jobs[v - 1] - 1,) + jobs[v:]
            entries.append(TransitionEntry(SystemState(v, dropped), net.mu[v]))
            total += net.mu[v]
    else:
        entries.append(TransitionEntry(SystemState(action, jobs), net.tau))
        total += net.tau
    if total > 1.0 + 1e-12:
        raise ValueError(f"event mass {total:.6f} exceeds one step (uniformization violated)")

    residual = 1.0 - total
    if residual > 0.0:
        entries.append(TransitionEntry(state, residual))
    return entries
