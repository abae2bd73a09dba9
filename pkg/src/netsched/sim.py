"""Two simulators and their statistics.

The discrete simulator drives the unit-step chain with one uniform draw per
step, laying the arrival bands at the bottom of the interval and the
action-dependent event band directly above them, so every policy sharing a
stream sees identical arrival realizations (common random numbers).  The
continuous simulator runs the uninterruptible benchmark policy on exponential
event clocks, walking switch legs one edge at a time so trip lengths follow
the edge count exactly.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, asdict

import numpy as np

from .heuristics import DVO_IDLE, DvoCommitment, Policy, dvo_decide
from .model import SystemState
from .network import NetworkSpec


class RandomStream:
    """Reproducible uniform stream: one seed, one sequence of draws."""

    def __init__(self, seed):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def uniforms(self, count: int) -> np.ndarray:
        return self._rng.random(count)

    def generator(self) -> np.random.Generator:
        return self._rng


def _fingerprint(h: int, value: int) -> int:
    return (h * 1_000_003 ^ value) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SimReport:
    """Outcome of one simulation run."""

    policy: str
    seed: str
    warmup: float
    horizon: float
    average_cost: float
    ci_half_width: float
    mean_queue_lengths: tuple[float, ...]
    arrivals: int
    services: int
    switches: int
    batch_means: tuple[float, ...] = ()
    arrival_fingerprint: int | None = None
    arrival_log: tuple[tuple[int, int], ...] | None = None

    def to_json(self, indent: int | None = 2) -> str:
        payload = asdict(self)
        payload.pop("arrival_log")
        return json.dumps(payload, sort_keys=True, indent=indent)


def _batch_half_width(batch_means: list[float]) -> float:
    if len(batch_means) < 2:
        return float("nan")
    arr = np.asarray(batch_means)
    return 1.96 * arr.std(ddof=1) / math.sqrt(len(arr))


def simulate_discrete(
    net: NetworkSpec,
    policy: Policy,
    seed,
    warmup: int = 10_000,
    horizon: int = 1_000_000,
    batches: int = 50,
    record_arrivals: bool = False,
) -> SimReport:
    """Drive a stationary-compatible policy for warmup+horizon unit steps.

    The system starts empty with the server at node 1; the holding cost of
    each post-warmup step is charged on the state at the step's start and the
    average is the total divided by `horizon`.
    """
    d = net.demand_count
    lam_cum = []
    running = 0.0
    for i in range(1, d + 1):
        running += net.lam[i]
        lam_cum.append(running)
    lam_total = running
    mu, tau, cost = net.mu, net.tau, net.cost

    total_steps = warmup + horizon
    draws = RandomStream(seed).uniforms(total_steps)
    policy.reset()
    decide = policy.decide

    v = 1
    jobs = [0] * (d + 1)
    q_sums = [0.0] * (d + 1)
    total_cost = 0.0
    arrivals = services = switches = 0
    fingerprint = 0
    log: list[tuple[int, int]] = []
    batch_len = max(1, horizon // batches)
    batch_sum = 0.0
    batch_fill = 0
    batch_means: list[float] = []

    for step in range(total_steps):
        if step >= warmup:
            holding = 0.0
            for i in range(1, d + 1):
                xi = jobs[i]
                q_sums[i] += xi
                holding += cost[i] * xi
            total_cost += holding
            batch_sum += holding
            batch_fill += 1
            if batch_fill == batch_len:
                batch_means.append(batch_sum / batch_len)
                batch_sum = 0.0
                batch_fill = 0

        action = decide(SystemState(v, tuple(jobs[1:])))
        u = draws[step]
        if u < lam_total:
            i = bisect_right(lam_cum, u) + 1
            jobs[i] += 1
            arrivals += 1
            fingerprint = _fingerprint(fingerprint, step * 31 + i)
            if record_arrivals:
                log.append((step, i))
        elif action == v:
            if v <= d and jobs[v] > 0 and u < lam_total + mu[v]:
                jobs[v] -= 1
                services += 1
        elif u < lam_total + tau:
            v = action
            switches += 1

    return SimReport(
        policy=policy.name,
        seed=repr(seed),
        warmup=warmup,
        horizon=horizon,
        average_cost=total_cost / horizon,
        ci_half_width=_batch_half_width(batch_means),
        mean_queue_lengths=tuple(q_sums[i] / horizon for i in range(1, d + 1)),
        arrivals=arrivals,
        services=services,
        switches=switches,
        batch_means=tuple(batch_means),
        arrival_fingerprint=fingerprint,
        arrival_log=tuple(log) if record_arrivals else None,
    )


def simulate_dvo(
    net: NetworkSpec,
    seed,
    warmup: float = 10_000.0,
    horizon: float = 1_000_000.0,
    batches: int = 50,
) -> SimReport:
    """Continuous-time run of the uninterruptible benchmark policy.

    Arrivals are Poisson per demand point, services exponential, and a switch
    between demand points is a committed walk of exponential legs along the
    shortest path.  Cost accrues as the time integral of the holding rate
    over the post-warmup horizon.
    """
    d = net.demand_count
    rng = np.random.default_rng(seed)
    inf = float("inf")

    def exp_draw(rate: float) -> float:
        return rng.exponential(1.0 / rate) if rate > 0.0 else inf

    next_arrival = [inf] * (d + 1)
    for i in range(1, d + 1):
        next_arrival[i] = exp_draw(net.lam[i])

    v = 1
    jobs = [0] * (d + 1)
    mode = "idle"
    target: int | None = None
    path: list[int] = []
    activity_end = inf

    t = 0.0
    end = warmup + horizon
    window = horizon / batches
    window_sums = [0.0] * batches
    integral = 0.0
    q_int = [0.0] * (d + 1)
    arrivals = services = switches = 0

    def accumulate(t0: float, t1: float, holding: float) -> None:
        nonlocal integral
        lo, hi = max(t0, warmup), min(t1, end)
        if hi <= lo:
            return
        integral += holding * (hi - lo)
        for i in range(1, d + 1):
            q_int[i] += jobs[i] * (hi - lo)
        w = int((lo - warmup) / window)
        seg_lo = lo
        while seg_lo < hi and w < batches:
            seg_hi = min(hi, warmup + (w + 1) * window)
            window_sums[w] += holding * (seg_hi - seg_lo)
            seg_lo = seg_hi
            w += 1

    def begin(commitment: DvoCommitment) -> None:
        nonlocal mode, target, path, activity_end
        mode, target = commitment.mode, commitment.target
        path = list(commitment.path)
        if mode == "processing":
            activity_end = t + exp_draw(net.mu[v])
        elif mode == "switching":
            activity_end = t + exp_draw(net.tau)
        else:
            activity_end = inf

    while True:
        t_arrival = min(next_arrival[1:]) if d else inf
        t_next = min(t_arrival, activity_end)
        if t_next >= end:
            holding = sum(net.cost[i] * jobs[i] for i in range(1, d + 1))
            accumulate(t, end, holding)
            break
        holding = sum(net.cost[i] * jobs[i] for i in range(1, d + 1))
        accumulate(t, t_next, holding)
        t = t_next

        if activity_end <= t_arrival:
            if mode == "processing":
                jobs[v] -= 1
                services += 1
                state = SystemState(v, tuple(jobs[1:]))
                _, commitment = dvo_decide(net, state, "job_finished", DvoCommitment("processing"))
                begin(commitment)
            else:  # one switch leg completed
                v = path.pop(0)
                switches += 1
                if path:
                    activity_end = t + exp_draw(net.tau)
                else:
                    state = SystemState(v, tuple(jobs[1:]))
                    _, commitment = dvo_decide(
                        net, state, "arrived_at_point",
                        DvoCommitment("switching", target=target),
                    )
                    begin(commitment)
        else:
            i = min(j for j in range(1, d + 1) if next_arrival[j] == t_arrival)
            jobs[i] += 1
            arrivals += 1
            next_arrival[i] = t + exp_draw(net.lam[i])
            if mode == "idle":
                state = SystemState(v, tuple(jobs[1:]))
                _, commitment = dvo_decide(net, state, "idle_arrival", DVO_IDLE)
                begin(commitment)

    means = [s / window for s in window_sums]
    return SimReport(
        policy="dvo",
        seed=repr(seed),
        warmup=warmup,
        horizon=horizon,
        average_cost=integral / horizon,
        ci_half_width=_batch_half_width(means),
        mean_queue_lengths=tuple(q_int[i] / horizon for i in range(1, d + 1)),
        arrivals=arrivals,
        services=services,
        switches=switches,
        batch_means=tuple(means),
    )


@dataclass(frozen=True)
class SwitchTimeEstimate:
    mean: float
    std_error: float
    bound: float
    trials: int


def switch_time_bound(net: NetworkSpec) -> float:
    """Closed-form cap on the expected time for the route-index policies to
    reach a demand point from an intermediate stage."""
    M = net.max_stage_distance
    if M == 0:
        raise ValueError("network has no intermediate stages")
    lam_total = net.total_arrival_rate
    return (M / net.tau) * ((lam_total + net.tau) / net.tau) ** (2 * (M - 1))


def estimate_switch_time_bound(
    net: NetworkSpec,
    policy: Policy,
    seed,
    trials: int = 10_000,
    start_node: int | None = None,
) -> SwitchTimeEstimate:
    """Empirical mean time-to-demand-point from intermediate stages vs the
    closed-form bound.

    Each episode starts an empty system at an intermediate stage (cycling
    through all stages unless `start_node` pins one) and counts unit steps
    until the server stands on a demand point.
    """
    d = net.demand_count
    stages = list(range(d + 1, net.node_count + 1))
    if not stages:
        raise ValueError("network has no intermediate stages")
    if start_node is not None:
        if start_node <= d or start_node > net.node_count:
            raise ValueError("start_node must be an intermediate stage")
        stages = [start_node]

    lam_cum = []
    running = 0.0
    for i in range(1, d + 1):
        running += net.lam[i]
        lam_cum.append(running)
    lam_total = running
    tau = net.tau

    rng = np.random.default_rng(seed)
    policy.reset()
    decide = policy.decide
    durations = np.empty(trials)
    for episode in range(trials):
        v = stages[episode % len(stages)]
        jobs = [0] * (d + 1)
        steps = 0
        while v > d:
            action = decide(SystemState(v, tuple(jobs[1:])))
            u = rng.random()
            if u < lam_total:
                jobs[bisect_right(lam_cum, u) + 1] += 1
            elif action != v and u < lam_total + tau:
                v = action
            steps += 1
        durations[episode] = steps

    mean = float(durations.mean())
    se = float(durations.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return SwitchTimeEstimate(
        mean=mean, std_error=se, bound=switch_time_bound(net), trials=trials
    )
