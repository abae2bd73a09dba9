"""Build the two experiment layouts and inspect their geometry.

Demand points are numbered first (1..d), intermediate stages after; every
policy in this package routes along shortest paths, so the distance matrix is
the backbone of everything else.
"""

import numpy as np

from netsched import (
    build_network,
    build_random_lattice,
    build_two_cluster,
    network_to_json,
    next_step_on_shortest_path,
    shortest_path,
)

# Two clusters of demand points joined by a chain of stages: points 1 and 2 on
# the left, point 3 on the right, stages 4-5-6 between them.
layout = build_two_cluster(2, 1, 3)
net = build_network(layout, lam=(0.1, 0.1, 0.1), mu=(0.5, 0.5, 0.5),
                    cost=(1.0, 1.0, 1.0), tau=0.3)
print("two_cluster(2, 1, 3)")
print("  edges:", net.edges)
print("  distance 1 -> 3:", net.dist[1][3], "(walks the whole chain)")
print("  distance 1 -> 2:", net.dist[1][2], "(one shared stage)")
print("  shortest path 1 -> 3:", shortest_path(net, 1, 3))
print("  first step from 1 toward 3:", next_step_on_shortest_path(net, 1, 3))

# Random pruned lattice: stages survive only when they sit on a shortest path
# between some pair of demand points.
rng = np.random.default_rng(7)
lattice = build_random_lattice(rng, d=5)
lat_net = build_network(lattice, lam=(0.02,) * 5, mu=(0.4,) * 5,
                        cost=(1.0,) * 5, tau=0.3)
print("\nrandom 5x5 lattice with d=5")
print("  kept nodes:", lat_net.node_count, "of 25")
print("  demand coordinates:", lattice.coords[:5])
for i in range(1, 5):
    print(f"  distance {i} -> {i + 1}:", lat_net.dist[i][i + 1])

print("\ninterchange JSON for the first network:")
print(network_to_json(net))
