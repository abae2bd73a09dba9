"""Decision policies: route-index policies (kstop, kfroml), the
uninterruptible benchmark policy (dvo), exhaustive cyclic polling, and the
serve-longest-queue reference for complete graphs.

The route-index policies enumerate candidate routes (ordered tuples of
distinct demand points, up to a fixed length, never starting at the server's
node), score them with the fluid indices, and step toward the first stop of
the best eligible route.  Enumeration is a depth-first walk that reuses all
prefix sums, so scoring a route costs O(1) beyond its parent prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fluid import COMPARISON_TOL, DERIVATIVE_PROBE
from .model import SystemState
from .network import NetworkSpec, next_step_on_shortest_path, shortest_path

_TOL = COMPARISON_TOL


@dataclass(frozen=True)
class PolicyDecision:
    """Chosen action plus diagnostics about the route search."""

    action: int
    chosen_sequence: tuple[int, ...] | None = None
    trace: dict | None = None


def _route_search(net: NetworkSpec, state: SystemState, K: int, pool) -> PolicyDecision:
    """Run the route-index decision over candidate stops drawn from `pool`.

    Case 1 (server at a non-empty demand point): a route is eligible when its
    index cannot improve by idling first and every truncated prefix clears its
    hurdle rate; if nothing is eligible the server stays put.  Case 2 (empty
    demand point or intermediate stage): routes that cannot improve by idling
    form the low-priority set; those whose index also clears the
    workload-weighted density both here and from the route's first stop are
    promoted, and the best promoted route wins if any exists.
    """
    v, jobs = state
    d = net.demand_count
    lam, mu, cost, dist, tau = net.lam, net.mu, net.cost, net.dist, net.tau
    rho = net.traffic_intensity
    probe = DERIVATIVE_PROBE

    stops = sorted(j for j in pool)
    nonempty_home = v <= d and jobs[v - 1] > 0
    home_rate = cost[v] * mu[v] * (1.0 - rho) if nonempty_home else 0.0

    best_psi = best2_psi = float("-inf")
    best_seq = best2_seq = None
    n_elig = n_sigma1 = n_sigma2 = n_seen = 0
    seq: list[int] = []
    used = set()

    def extend(prev, e0, st0, sr0, ee, sre, ey, sty, sry, prefix_ok):
        nonlocal best_psi, best_seq, best2_psi, best2_seq
        nonlocal n_elig, n_sigma1, n_sigma2, n_seen
        depth = len(seq)
        for j in stops:
            if j in used or (depth == 0 and j == v):
                continue
            n_seen += 1
            leg = dist[prev][j] / tau
            drain = mu[j] - lam[j]
            xj = jobs[j - 1]

            a0 = e0 + leg
            t0 = (xj + lam[j] * a0) / drain
            r0 = cost[j] * mu[j] * t0
            st0j, sr0j = st0 + t0, sr0 + r0
            e0j = a0 + t0
            psi0 = sr0j / e0j

            ae = ee + leg
            te = (xj + lam[j] * ae) / drain
            srej = sre + cost[j] * mu[j] * te
            eej = ae + te
            psie = srej / eej

            ay = ey + (0.0 if depth == 0 else leg)
            ty = (xj + lam[j] * ay) / drain
            styj, sryj = sty + ty, sry + cost[j] * mu[j] * ty
            eyj = ay + ty

            no_gain_waiting = psie - psi0 <= _TOL

            if nonempty_home:
                if prefix_ok:
                    if v in used or j == v:
                        hurdle = 0.0
                    else:
                        density = sr0j / st0j if st0j > 0.0 else 0.0
                        hurdle = density * rho + home_rate
                    returning = sr0j / (e0j + dist[j][v] / tau)
                    step_ok = returning >= hurdle - _TOL
                else:
                    step_ok = False
                if step_ok and no_gain_waiting:
                    n_elig += 1
                    if psi0 > best_psi + _TOL:
                        best_psi, best_seq = psi0, tuple(seq) + (j,)
            else:
                step_ok = prefix_ok  # unused hurdle in this case
                if no_gain_waiting:
                    dens0 = sr0j / st0j if st0j > 0.0 else 0.0
                    promoted = psi0 >= dens0 * rho - _TOL
                    if promoted and depth > 0:
                        psiy = sryj / eyj
                        densy = sryj / styj if styj > 0.0 else 0.0
                        promoted = psiy >= densy * rho - _TOL
                    if promoted:
                        n_sigma1 += 1
                        if psi0 > best_psi + _TOL:
                            best_psi, best_seq = psi0, tuple(seq) + (j,)
                    else:
                        n_sigma2 += 1
                        if psi0 > best2_psi + _TOL:
                            best2_psi, best2_seq = psi0, tuple(seq) + (j,)

            if depth + 1 < K:
                used.add(j)
                seq.append(j)
                extend(j, e0j, st0j, sr0j, eej, srej, eyj, styj, sryj, step_ok)
                seq.pop()
                used.discard(j)

    extend(v, 0.0, 0.0, 0.0, probe, 0.0, 0.0, 0.0, 0.0, True)

    chosen = best_seq if best_seq is not None else best2_seq
    if nonempty_home:
        trace = {"candidates": n_seen, "sigma": n_elig}
    else:
        trace = {"candidates": n_seen, "sigma1": n_sigma1, "sigma2": n_sigma2}
    if chosen is None:
        return PolicyDecision(action=v, chosen_sequence=None, trace=trace)
    action = next_step_on_shortest_path(net, v, chosen[0])
    return PolicyDecision(action=action, chosen_sequence=chosen, trace=trace)


def kstop_decide(net: NetworkSpec, state: SystemState, K: int) -> PolicyDecision:
    """Route-index decision over all routes of up to K distinct stops."""
    if K < 1:
        raise ValueError("route length bound K must be >= 1")
    return _route_search(net, state, K, range(1, net.demand_count + 1))


def _singleton_index(net: NetworkSpec, state: SystemState, j: int) -> float:
    """Index of the one-stop route (j); the server's own node scores its
    instantaneous reward rate instead."""
    v, jobs = state
    if j == v:
        return net.cost[v] * net.mu[v] if jobs[v - 1] > 0 else 0.0
    span = net.dist[v][j] / net.tau
    xj = jobs[j - 1]
    return net.cost[j] * net.mu[j] * (xj + net.lam[j] * span) / (xj + net.mu[j] * span)


def _rank(indexed: list[tuple[float, int]]) -> list[int]:
    return [j for _, j in sorted(indexed, key=lambda pair: (-pair[0], pair[1]))]


def _shortlist(net, state, L, method, clusters) -> list[int]:
    v, jobs = state
    d = net.demand_count
    index = {j: _singleton_index(net, state, j) for j in range(1, d + 1)}
    at_nonempty = v <= d and jobs[v - 1] > 0
    rho = net.traffic_intensity

    def prefer_split(members):
        # When the server has nothing to serve, stops whose index clears the
        # workload-weighted density come first, mirroring the promotion rule.
        first, second = [], []
        for j in members:
            if j == v:
                hurdle = 0.0  # empty home route drains nothing
            else:
                hurdle = net.cost[j] * net.mu[j] * rho
                span = net.dist[v][j] / net.tau
                if jobs[j - 1] + net.lam[j] * span <= 0.0:
                    hurdle = 0.0
            (first if index[j] >= hurdle - _TOL else second).append(j)
        return _rank([(index[j], j) for j in first]) + _rank([(index[j], j) for j in second])

    def ordered(members):
        if at_nonempty:
            return _rank([(index[j], j) for j in members])
        return prefer_split(members)

    if method == "impartial":
        return ordered(range(1, d + 1))[:L]

    if method != "stratified":
        raise ValueError(f"unknown shortlist method {method!r}")
    if not clusters:
        raise ValueError("stratified shortlists require cluster labels")
    groups = [list(g) for g in clusters]
    base, rem = divmod(L, len(groups))
    quotas = [base + (1 if c < rem else 0) for c in range(len(groups))]
    leftover = L - sum(min(q, len(g)) for q, g in zip(quotas, groups))
    quotas = [min(q, len(g)) for q, g in zip(quotas, groups)]
    while leftover > 0:
        progressed = False
        for c, g in enumerate(groups):
            if leftover > 0 and quotas[c] < len(g):
                quotas[c] += 1
                leftover -= 1
                progressed = True
        if not progressed:
            raise ValueError("cluster quotas cannot reach L")
    chosen: list[int] = []
    for quota, members in zip(quotas, groups):
        chosen.extend(ordered(members)[:quota])
    return chosen


def k_from_l_decide(
    net: NetworkSpec,
    state: SystemState,
    K: int,
    L: int,
    method: str = "impartial",
    clusters=None,
) -> PolicyDecision:
    """Two-stage decision: shortlist the L best one-stop routes, then run the
    route-index decision restricted to shortlisted stops.

    The shortlist may contain the server's own node (scored by its immediate
    reward rate) but a route can never start there.
    """
    if K < 1:
        raise ValueError("route length bound K must be >= 1")
    if L > net.demand_count:
        raise ValueError("shortlist size L cannot exceed the demand count")
    if L < 1:
        raise ValueError("shortlist size L must be >= 1")
    pool = _shortlist(net, state, L, method, clusters if clusters is not None else net.clusters)
    return _route_search(net, state, K, pool)


def serve_longest_queue_decide(net: NetworkSpec, state: SystemState) -> int:
    """Stay while serving; otherwise head for the fullest other queue
    (lowest id on ties).  Only defined on complete graphs."""
    if net.demand_count != net.node_count or any(
        len(net.adjacency[u]) != net.node_count - 1 for u in range(1, net.node_count + 1)
    ):
        raise ValueError("serve-longest-queue requires a complete graph of demand points")
    v, jobs = state
    if jobs[v - 1] > 0 or net.demand_count == 1:
        return v
    target = max(
        (j for j in range(1, net.demand_count + 1) if j != v),
        key=lambda j: (jobs[j - 1], -j),
    )
    return target


def polling_decide(net: NetworkSpec, state: SystemState, last_emptied: int) -> tuple[int, int]:
    """Exhaustive cyclic polling step.

    `last_emptied` is the most recent demand point at which the server stood
    with no jobs present; it is re-witnessed here before acting.  The target
    is always the next demand point in cyclic order after it.
    """
    d = net.demand_count
    if not 1 <= last_emptied <= d:
        raise ValueError("last_emptied must be a demand point")
    v, jobs = state
    if v <= d and jobs[v - 1] == 0:
        last_emptied = v
    target = last_emptied % d + 1
    if v == target:
        return v, last_emptied
    return next_step_on_shortest_path(net, v, target), last_emptied


@dataclass(frozen=True)
class DvoCommitment:
    """Carry-over activity between benchmark-policy decision epochs."""

    mode: str  # "processing" | "switching" | "idle"
    target: int | None = None
    path: tuple[int, ...] = ()


DVO_IDLE = DvoCommitment("idle")

_DVO_EPOCHS = ("job_finished", "arrived_at_point", "idle_arrival")


def _dvo_serve_or_switch(net, state):
    """Rule used when the server has just cleared a job but work remains:
    switch only to a stop with a higher c*mu whose round-trip reward rate
    clears the blended hurdle, otherwise keep serving."""
    i, jobs = state
    lam, mu, cost, dist, tau = net.lam, net.mu, net.cost, net.dist, net.tau
    rho = net.traffic_intensity
    own = cost[i] * mu[i]
    best, best_rate = None, float("-inf")
    for j in range(1, net.demand_count + 1):
        if j == i or cost[j] * mu[j] < own - _TOL:
            continue
        go, back = dist[i][j] / tau, dist[j][i] / tau
        xj = jobs[j - 1]
        rate = cost[j] * mu[j] * (xj + lam[j] * go) / (xj + mu[j] * go + (mu[j] - lam[j]) * back)
        if rate >= cost[j] * mu[j] * rho + own * (1.0 - rho) - _TOL and rate > best_rate + _TOL:
            best, best_rate = j, rate
    return best


def _dvo_idle_or_switch(net, state):
    """Rule used at an empty demand point: pick the best one-way reward rate,
    preferring stops that beat their own congestion-weighted rate, but only
    travel if the target queue beats the arrivals expected en route."""
    i, jobs = state
    lam, mu, cost, dist, tau = net.lam, net.mu, net.cost, net.dist, net.tau
    rho = net.traffic_intensity
    high, low = [], []
    for j in range(1, net.demand_count + 1):
        if j == i:
            continue
        go = dist[i][j] / tau
        xj = jobs[j - 1]
        rate = cost[j] * mu[j] * (xj + lam[j] * go) / (xj + mu[j] * go)
        (high if rate > cost[j] * mu[j] * rho else low).append((rate, j))
    pool = high if high else low
    if not pool:
        return None
    best_rate, best = max(pool, key=lambda pair: (pair[0], -pair[1]))
    if jobs[best - 1] > lam[best] * dist[best][i] / tau:
        return best
    return None


def dvo_decide(
    net: NetworkSpec,
    state: SystemState,
    epoch_kind: str,
    commitment: DvoCommitment,
) -> tuple[PolicyDecision, DvoCommitment]:
    """Benchmark-policy decision at one of its three epoch kinds.

    Services and switches are uninterruptible, so this must only be called
    when the previous commitment has fully resolved; the fresh commitment
    describes the next uninterruptible activity.
    """
    if epoch_kind not in _DVO_EPOCHS:
        raise ValueError(f"unknown epoch kind {epoch_kind!r}")
    if commitment.mode == "switching" and commitment.path:
        raise ValueError("decision requested mid-switch")
    v, jobs = state
    if v > net.demand_count:
        raise ValueError("benchmark policy epochs only occur at demand points")
    if epoch_kind == "job_finished" and commitment.mode != "processing":
        raise ValueError("job_finished epoch without a processing commitment")
    if epoch_kind == "arrived_at_point" and (
        commitment.mode != "switching" or commitment.target != v
    ):
        raise ValueError("arrived_at_point epoch without a completed switch")
    if epoch_kind == "idle_arrival" and commitment.mode != "idle":
        raise ValueError("idle_arrival epoch without an idle commitment")

    must_serve = epoch_kind in ("arrived_at_point", "idle_arrival") and jobs[v - 1] >= 1
    if must_serve:
        return PolicyDecision(action=v), DvoCommitment("processing")

    if epoch_kind == "job_finished" and jobs[v - 1] > 0:
        target = _dvo_serve_or_switch(net, state)
        if target is None:
            return PolicyDecision(action=v), DvoCommitment("processing")
    else:
        target = _dvo_idle_or_switch(net, state)
        if target is None:
            return PolicyDecision(action=v), DVO_IDLE
    path = tuple(shortest_path(net, v, target))
    return (
        PolicyDecision(action=path[0], chosen_sequence=(target,)),
        DvoCommitment("switching", target=target, path=path),
    )


class Policy:
    """Stationary decision interface used by the discrete simulator."""

    name = "policy"

    def reset(self) -> None:  # pragma: no cover - default is stateless
        pass

    def decide(self, state: SystemState) -> int:
        raise NotImplementedError


class StayPolicy(Policy):
    """Never moves; serves whenever its node has work (unit-test reference)."""

    name = "stay"

    def __init__(self, net: NetworkSpec):
        self.net = net

    def decide(self, state: SystemState) -> int:
        return state.node


class KStopPolicy(Policy):
    def __init__(self, net: NetworkSpec, K: int):
        self.net = net
        self.K = K
        self.name = f"kstop:{K}"
        self._memo: dict[SystemState, int] = {}

    def reset(self) -> None:
        # decisions are stationary, so the memo survives resets
        pass

    def decide(self, state: SystemState) -> int:
        action = self._memo.get(state)
        if action is None:
            action = kstop_decide(self.net, state, self.K).action
            self._memo[state] = action
        return action


class KFromLPolicy(Policy):
    """Shortlist policy wrapper.  L is clamped to the demand count so one
    policy string can sweep instances of any size; at L >= d the shortlist
    covers every demand point and the policy coincides with plain kstop."""

    def __init__(self, net: NetworkSpec, K: int, L: int, method: str = "impartial",
                 clusters=None):
        self.net = net
        self.K = K
        self.L = min(L, net.demand_count)
        self.method = method
        self.clusters = clusters if clusters is not None else net.clusters
        self.name = f"kfroml:{K}:{L}:{method}"
        self._memo: dict[SystemState, int] = {}

    def decide(self, state: SystemState) -> int:
        action = self._memo.get(state)
        if action is None:
            action = k_from_l_decide(
                self.net, state, self.K, self.L, self.method, self.clusters
            ).action
            self._memo[state] = action
        return action


class PollingPolicy(Policy):
    """Exhaustive cyclic polling; carries the last-emptied marker between
    steps, so use one instance per simulation run."""

    name = "polling"

    def __init__(self, net: NetworkSpec):
        self.net = net
        self.last_emptied = net.demand_count
        self._initial = net.demand_count

    def reset(self) -> None:
        self.last_emptied = self._initial

    def decide(self, state: SystemState) -> int:
        action, self.last_emptied = polling_decide(self.net, state, self.last_emptied)
        return action


class ServeLongestQueuePolicy(Policy):
    name = "slq"

    def __init__(self, net: NetworkSpec):
        serve_longest_queue_decide(net, SystemState(1, (0,) * net.demand_count))
        self.net = net

    def decide(self, state: SystemState) -> int:
        return serve_longest_queue_decide(self.net, state)


def make_policy(spec: str, net: NetworkSpec, clusters=None) -> Policy:
    """Build a policy from its selection string.

    Recognized forms: ``stay``, ``polling``, ``slq``, ``kstop:K`` and
    ``kfroml:K:L:impartial|stratified``.  The benchmark policy string ``dvo``
    is rejected here because it runs on the continuous-time simulator.
    """
    parts = spec.split(":")
    kind = parts[0]
    if kind == "stay":
        return StayPolicy(net)
    if kind == "polling":
        return PollingPolicy(net)
    if kind == "slq":
        return ServeLongestQueuePolicy(net)
    if kind == "kstop":
        return KStopPolicy(net, int(parts[1]))
    if kind == "kfroml":
        method = parts[3] if len(parts) > 3 else "impartial"
        return KFromLPolicy(net, int(parts[1]), int(parts[2]), method, clusters)
    if kind == "dvo":
        raise ValueError("the dvo policy runs on the continuous simulator; see sim.simulate_dvo")
    raise ValueError(f"unknown policy string {spec!r}")
