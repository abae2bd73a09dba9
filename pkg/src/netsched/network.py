"""Network layer: validated graphs, shortest-path machinery, and the two
experiment layouts (clustered demand points and pruned random lattices)."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field


class NetworkError(ValueError):
    """A graph or its rate vectors failed a structural validity check."""


def _bfs_distances(adjacency, source: int, node_count: int) -> list[int]:
    dist = [-1] * (node_count + 1)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adjacency[u]:
            if dist[w] < 0:
                dist[w] = du
                queue.append(w)
    return dist


def _all_pairs(adjacency, node_count: int) -> tuple[tuple[int, ...], ...]:
    rows = [tuple([-1] * (node_count + 1))]
    for v in range(1, node_count + 1):
        dv = _bfs_distances(adjacency, v, node_count)
        if any(dv[u] < 0 for u in range(1, node_count + 1)):
            raise NetworkError("graph is not connected")
        rows.append(tuple(dv))
    return tuple(rows)


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable scheduling network.

    Node ids are 1-based: demand points are 1..d, intermediate stages are
    d+1..d+n.  Rate and cost vectors are stored padded with a zero at index 0
    so that ``lam[i]`` is the arrival rate at demand point i.  ``dist[i][j]``
    is the shortest-path length between nodes i and j in edge counts.

    Safe to share across threads and simulation workers once constructed.
    """

    node_count: int
    demand_count: int
    edges: tuple[tuple[int, int], ...]
    lam: tuple[float, ...]
    mu: tuple[float, ...]
    cost: tuple[float, ...]
    tau: float
    clusters: tuple[tuple[int, ...], ...] | None = None
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    dist: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n, d = self.node_count, self.demand_count
        if n < 1 or d < 1 or d > n:
            raise NetworkError(f"invalid node/demand counts ({n}, {d})")

        seen = set()
        for (a, b) in self.edges:
            if not (1 <= a <= n and 1 <= b <= n):
                raise NetworkError(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise NetworkError(f"self-loop at node {a}")
            seen.add((min(a, b), max(a, b)))
        edges = tuple(sorted(seen))
        neighbors = [set() for _ in range(n + 1)]
        for (a, b) in edges:
            neighbors[a].add(b)
            neighbors[b].add(a)
        adjacency = tuple(tuple(sorted(s)) for s in neighbors)

        if len(self.lam) == d:  # accept unpadded vectors, store padded
            object.__setattr__(self, "lam", (0.0,) + tuple(float(x) for x in self.lam))
            object.__setattr__(self, "mu", (0.0,) + tuple(float(x) for x in self.mu))
            object.__setattr__(self, "cost", (0.0,) + tuple(float(x) for x in self.cost))
        if len(self.lam) != d + 1 or len(self.mu) != d + 1 or len(self.cost) != d + 1:
            raise NetworkError("rate vectors must have one entry per demand point")

        for i in range(1, d + 1):
            if self.lam[i] < 0:
                raise NetworkError(f"lambda_{i} must be nonnegative")
            if self.mu[i] <= 0 or self.cost[i] <= 0:
                raise NetworkError(f"mu_{i} and cost_{i} must be positive")
            if self.lam[i] >= self.mu[i]:
                raise NetworkError(f"lambda_{i} must be below mu_{i}")
        if self.tau <= 0:
            raise NetworkError("tau must be positive")

        budget = sum(self.lam) + max(max(self.mu[1:]), self.tau)
        if budget > 1.0 + 1e-12:
            raise NetworkError(f"rate budget {budget:.6f} exceeds the unit step")

        if self.clusters is not None:
            members = [i for group in self.clusters for i in group]
            if sorted(members) != list(range(1, d + 1)):
                raise NetworkError("clusters must partition the demand points")
            object.__setattr__(self, "clusters", tuple(tuple(g) for g in self.clusters))

        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "dist", _all_pairs(adjacency, n))

    @property
    def stage_count(self) -> int:
        return self.node_count - self.demand_count

    @property
    def total_arrival_rate(self) -> float:
        """Lambda, the aggregate arrival rate."""
        return sum(self.lam)

    @property
    def traffic_intensity(self) -> float:
        """rho = sum_i lambda_i / mu_i."""
        return sum(self.lam[i] / self.mu[i] for i in range(1, self.demand_count + 1))

    @property
    def relative_switching_rate(self) -> float:
        """eta = tau / Lambda (infinite when there are no arrivals)."""
        total = self.total_arrival_rate
        return self.tau / total if total > 0 else float("inf")

    @property
    def uniformization_step(self) -> float:
        """Step length that maps the rate budget onto the unit interval."""
        return 1.0 / (sum(self.lam) + max(max(self.mu[1:]), self.tau))

    @property
    def max_stage_distance(self) -> int:
        """Largest distance from an intermediate stage to a demand point."""
        d, n = self.demand_count, self.node_count
        if n == d:
            return 0
        return max(self.dist[v][j] for v in range(d + 1, n + 1) for j in range(1, d + 1))


def all_pairs_distance(net: NetworkSpec) -> tuple[tuple[int, ...], ...]:
    """Recompute the all-pairs shortest-distance matrix by repeated BFS."""
    return _all_pairs(net.adjacency, net.node_count)


def next_step_on_shortest_path(net: NetworkSpec, origin: int, target: int) -> int:
    """First node after `origin` on a shortest path to `target`.

    Among tied neighbors the lowest-numbered node is returned, so routing is
    deterministic everywhere.
    """
    if origin == target:
        raise ValueError("origin equals target; no step to take")
    goal = net.dist[origin][target] - 1
    row = net.dist
    for u in net.adjacency[origin]:  # neighbors are sorted ascending
        if row[u][target] == goal:
            return u
    raise NetworkError("no shortest-path step found (corrupt distance matrix)")


def shortest_path(net: NetworkSpec, origin: int, target: int) -> list[int]:
    """Nodes visited after leaving `origin`, ending at `target`."""
    path = []
    v = origin
    while v != target:
        v = next_step_on_shortest_path(net, v, target)
        path.append(v)
    return path


@dataclass(frozen=True)
class Layout:
    """Pure topology produced by a layout builder, before rates are attached."""

    node_count: int
    demand_count: int
    edges: tuple[tuple[int, int], ...]
    clusters: tuple[tuple[int, ...], ...] | None = None
    coords: tuple[tuple[int, int], ...] | None = None  # lattice positions, demand first


def build_network(layout: Layout, lam, mu, cost, tau: float) -> NetworkSpec:
    """Attach rate vectors to a layout."""
    return NetworkSpec(
        node_count=layout.node_count,
        demand_count=layout.demand_count,
        edges=layout.edges,
        lam=tuple(lam),
        mu=tuple(mu),
        cost=tuple(cost),
        tau=tau,
        clusters=layout.clusters,
    )


def build_two_cluster(d1: int, d2: int, n: int) -> Layout:
    """Two clusters of demand points joined by a chain of n stages.

    Demand points 1..d1 all attach to the leftmost chain stage, demand points
    d1+1..d1+d2 to the rightmost, so any trip between same-cluster points
    passes through exactly one stage and any cross-cluster trip traverses the
    whole chain.
    """
    if d1 < 1 or d2 < 1 or n < 1:
        raise ValueError("cluster sizes and chain length must be positive")
    d = d1 + d2
    first_stage, last_stage = d + 1, d + n
    edges = [(i, first_stage) for i in range(1, d1 + 1)]
    edges += [(i, last_stage) for i in range(d1 + 1, d + 1)]
    edges += [(s, s + 1) for s in range(first_stage, last_stage)]
    clusters = (tuple(range(1, d1 + 1)), tuple(range(d1 + 1, d + 1)))
    return Layout(node_count=d + n, demand_count=d, edges=tuple(edges), clusters=clusters)


_LATTICE_SIDE = 5


def _lattice_coord(idx: int) -> tuple[int, int]:
    return ((idx - 1) // _LATTICE_SIDE + 1, (idx - 1) % _LATTICE_SIDE + 1)


def build_random_lattice(rng, d: int) -> Layout:
    """Random 5x5 lattice layout with redundant stages removed.

    `d` distinct lattice nodes are drawn uniformly as demand points; a stage
    survives only if it lies on at least one shortest path between some pair
    of demand points (policies here never leave shortest paths, so pruned
    stages would never be visited).  Nodes are renumbered demand-points-first,
    preserving lattice order within each group.
    """
    total = _LATTICE_SIDE * _LATTICE_SIDE
    if not 2 <= d <= total:
        raise ValueError(f"demand count must be in [2, {total}]")
    demand_ids = sorted(int(i) + 1 for i in rng.choice(total, size=d, replace=False))

    def manhattan(a: int, b: int) -> int:
        (ra, ca), (rb, cb) = _lattice_coord(a), _lattice_coord(b)
        return abs(ra - rb) + abs(ca - cb)

    demand_set = set(demand_ids)
    keep = list(demand_ids)
    for u in range(1, total + 1):
        if u in demand_set:
            continue
        for i in demand_ids:
            if any(manhattan(i, u) + manhattan(u, j) == manhattan(i, j)
                   for j in demand_ids if j > i):
                keep.append(u)
                break
    stages = sorted(u for u in keep if u not in demand_set)
    renumber = {old: new for new, old in enumerate(demand_ids + stages, start=1)}

    edges = []
    for old in demand_ids + stages:
        r, c = _lattice_coord(old)
        for nb in (old + 1 if c < _LATTICE_SIDE else None,
                   old + _LATTICE_SIDE if r < _LATTICE_SIDE else None):
            if nb is not None and nb in renumber:
                edges.append((renumber[old], renumber[nb]))
    coords = tuple(_lattice_coord(old) for old in demand_ids + stages)
    return Layout(
        node_count=len(renumber),
        demand_count=d,
        edges=tuple(sorted((min(a, b), max(a, b)) for a, b in edges)),
        coords=coords,
    )


def network_to_json(net: NetworkSpec, indent: int | None = 2) -> str:
    """Serialize to the interchange schema
    {nodes, edges, demand:[{id, lambda, mu, cost}], tau, clusters?}."""
    payload = {
        "nodes": net.node_count,
        "edges": [list(e) for e in net.edges],
        "demand": [
            {"id": i, "lambda": net.lam[i], "mu": net.mu[i], "cost": net.cost[i]}
            for i in range(1, net.demand_count + 1)
        ],
        "tau": net.tau,
    }
    if net.clusters is not None:
        payload["clusters"] = [list(g) for g in net.clusters]
    return json.dumps(payload, sort_keys=True, indent=indent)


def network_from_json(source: str | dict) -> NetworkSpec:
    data = json.loads(source) if isinstance(source, str) else source
    demand = sorted(data["demand"], key=lambda rec: rec["id"])
    if [rec["id"] for rec in demand] != list(range(1, len(demand) + 1)):
        raise NetworkError("demand ids must be 1..d")
    clusters = data.get("clusters")
    return NetworkSpec(
        node_count=int(data["nodes"]),
        demand_count=len(demand),
        edges=tuple((int(a), int(b)) for a, b in data["edges"]),
        lam=tuple(rec["lambda"] for rec in demand),
        mu=tuple(rec["mu"] for rec in demand),
        cost=tuple(rec["cost"] for rec in demand),
        tau=float(data["tau"]),
        clusters=tuple(tuple(g) for g in clusters) if clusters else None,
    )
