"""Fluid-model index machinery for candidate routes.

A route is an ordered tuple of distinct demand points.  In the fluid picture
the server idles for t time units, then walks the route, draining each stop at
net rate mu - lambda while every queue keeps filling at rate lambda and each
edge takes 1/tau time units.  All route indices are ratios of the rewards and
durations produced by that picture.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import SystemState
from .network import NetworkSpec

#: Absolute slack used when comparing fluid quantities for equality.
COMPARISON_TOL = 1e-12

#: Idle-time probe used to read off the sign of d(psi)/dt; monotonicity of
#: psi in t makes any positive probe give the correct global sign.
DERIVATIVE_PROBE = 1e-6

DemandSequence = tuple[int, ...]


def validate_sequence(net: NetworkSpec, seq: DemandSequence) -> None:
    if not seq:
        raise ValueError("route must contain at least one stop")
    if len(set(seq)) != len(seq):
        raise ValueError("route stops must be distinct")
    for j in seq:
        if not 1 <= j <= net.demand_count:
            raise ValueError(f"route stop {j} is not a demand point")


def exhaust_times(
    net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0
) -> list[float]:
    """Fluid time to empty each stop, visiting them in order after idling t.

    The forward recursion: the backlog found at stop j is its current count
    plus all arrivals during the idle time, the earlier legs and drains, and
    the leg into j; it then drains at rate mu_j - lambda_j.
    """
    validate_sequence(net, seq)
    if t < 0:
        raise ValueError("idle time must be nonnegative")
    lam, mu, dist, tau = net.lam, net.mu, net.dist, net.tau
    jobs = state.jobs
    elapsed = t
    prev = state.node
    times: list[float] = []
    for j in seq:
        elapsed += dist[prev][j] / tau
        tj = (jobs[j - 1] + lam[j] * elapsed) / (mu[j] - lam[j])
        times.append(tj)
        elapsed += tj
        prev = j
    return times


def _route_totals(net, state, seq, t):
    """(sum T, sum R, denominator of psi) in one pass."""
    lam, mu, cost, dist, tau = net.lam, net.mu, net.cost, net.dist, net.tau
    jobs = state.jobs
    elapsed = t
    sum_t = sum_r = 0.0
    prev = state.node
    for j in seq:
        elapsed += dist[prev][j] / tau
        tj = (jobs[j - 1] + lam[j] * elapsed) / (mu[j] - lam[j])
        sum_t += tj
        sum_r += cost[j] * mu[j] * tj
        elapsed += tj
        prev = j
    return sum_t, sum_r, elapsed


def _check_head(net: NetworkSpec, state: SystemState, seq: DemandSequence) -> None:
    validate_sequence(net, seq)
    if seq[0] == state.node:
        raise ValueError("route may not start at the server's current node")


def psi(net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0) -> float:
    """Average reward per unit time while idling t and then walking the route."""
    _check_head(net, state, seq)
    _, sum_r, denom = _route_totals(net, state, seq, t)
    return sum_r / denom


def psi_derivative_sign(
    net: NetworkSpec,
    state: SystemState,
    seq: DemandSequence,
    probe: float = DERIVATIVE_PROBE,
) -> int:
    """Sign of d(psi)/dt at t=0: -1, 0, or +1.

    Differences within COMPARISON_TOL are reported as 0, which downstream
    treats as "<= 0" (eligible to start immediately).
    """
    base = psi(net, state, seq, 0.0)
    probed = psi(net, state, seq, probe)
    if abs(probed - base) <= COMPARISON_TOL:
        return 0
    return 1 if probed > base else -1


def phi(net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0) -> list[float]:
    """Average reward of each truncated route that returns to the start node.

    phi[j-1] covers the stops seq[:j] plus the leg back from stop j to the
    server's node.
    """
    _check_head(net, state, seq)
    lam, mu, cost, dist, tau = net.lam, net.mu, net.cost, net.dist, net.tau
    jobs = state.jobs
    v = state.node
    elapsed = float(t)
    sum_r = 0.0
    prev = v
    out: list[float] = []
    for j in seq:
        elapsed += dist[prev][j] / tau
        tj = (jobs[j - 1] + lam[j] * elapsed) / (mu[j] - lam[j])
        sum_r += cost[j] * mu[j] * tj
        elapsed += tj
        out.append(sum_r / (elapsed + dist[j][v] / tau))
        prev = j
    return out


def beta(net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0) -> list[float]:
    """Hurdle rates paired with phi: beta[j-1] mixes the route's own reward
    density with the rate c_v mu_v the server gives up by leaving home, and is
    zero once the route has revisited the start node.

    Only defined when the server sits at a demand point.
    """
    _check_head(net, state, seq)
    v = state.node
    if v > net.demand_count:
        raise ValueError("beta requires the server to be at a demand point")
    lam, mu, cost, dist, tau = net.lam, net.mu, net.cost, net.dist, net.tau
    jobs = state.jobs
    rho = net.traffic_intensity
    home = cost[v] * mu[v] * (1.0 - rho)
    elapsed = float(t)
    sum_t = sum_r = 0.0
    prev = v
    seen_home = False
    out: list[float] = []
    for j in seq:
        elapsed += dist[prev][j] / tau
        tj = (jobs[j - 1] + lam[j] * elapsed) / (mu[j] - lam[j])
        sum_t += tj
        sum_r += cost[j] * mu[j] * tj
        elapsed += tj
        seen_home = seen_home or j == v
        if seen_home:
            out.append(0.0)
        else:
            ratio = sum_r / sum_t if sum_t > 0.0 else 0.0
            out.append(ratio * rho + home)
        prev = j
    return out


def gamma(net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0) -> float:
    """Workload-weighted reward density of the whole route: (sum R / sum T) rho.

    An all-empty route with no inflow has sum T = 0; the ratio is defined as 0
    so that empty routes are never artificially attractive.
    """
    _check_head(net, state, seq)
    sum_t, sum_r, _ = _route_totals(net, state, seq, t)
    if sum_t <= 0.0:
        return 0.0
    return (sum_r / sum_t) * net.traffic_intensity


def xi(net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0) -> float:
    """Fraction of the route's span spent processing rather than traveling."""
    _check_head(net, state, seq)
    sum_t, _, denom = _route_totals(net, state, seq, t)
    return sum_t / denom


@dataclass(frozen=True)
class FluidEvaluation:
    """All route indices for one (state, route, idle time) triple."""

    T: tuple[float, ...]
    R: tuple[float, ...]
    psi: float
    gamma: float
    phi: tuple[float, ...]
    beta: tuple[float, ...] | None  # None when the server is not at a demand point


def evaluate(
    net: NetworkSpec, state: SystemState, seq: DemandSequence, t: float = 0.0
) -> FluidEvaluation:
    times = exhaust_times(net, state, seq, t)
    rewards = tuple(net.cost[j] * net.mu[j] * tj for j, tj in zip(seq, times))
    at_demand = state.node <= net.demand_count
    return FluidEvaluation(
        T=tuple(times),
        R=rewards,
        psi=psi(net, state, seq, t),
        gamma=gamma(net, state, seq, t),
        phi=tuple(phi(net, state, seq, t)),
        beta=tuple(beta(net, state, seq, t)) if at_demand else None,
    )
