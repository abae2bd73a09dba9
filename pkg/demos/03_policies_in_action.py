"""Watch the policies decide, then race them on one instance under shared
randomness."""

from netsched import (
    SystemState,
    k_from_l_decide,
    kstop_decide,
    make_policy,
    simulate_discrete,
    simulate_dvo,
)
from netsched.instgen import generate_two_cluster

instance = generate_two_cluster(2024)
net = instance.network
print("instance:", instance.layout, f"rho={instance.rho:.2f} eta={instance.eta:.2f}")

# a single decision, dissected
state = SystemState(net.demand_count + 1, tuple([3] + [0] * (net.demand_count - 1)))
decision = kstop_decide(net, state, K=2)
print(f"\nkstop:2 at {state}:")
print("  chosen route:", decision.chosen_sequence)
print("  action (next node):", decision.action)
print("  search trace:", decision.trace)

shortlisted = k_from_l_decide(net, state, K=2, L=min(4, net.demand_count))
print(f"kfroml:2:{min(4, net.demand_count)} same state -> action {shortlisted.action},"
      f" route {shortlisted.chosen_sequence}, trace {shortlisted.trace}")

# the race: same seed -> same arrival stream for every stationary policy
print("\naverage cost over a short horizon (shared arrivals):")
for spec in ("kstop:1", "kstop:2", "polling"):
    report = simulate_discrete(net, make_policy(spec, net), seed=11,
                               warmup=2_000, horizon=60_000)
    print(f"  {spec:10s} {report.average_cost:8.3f}  (+-{report.ci_half_width:.3f})")
benchmark = simulate_dvo(net, seed=11, warmup=2_000.0, horizon=60_000.0)
print(f"  {'dvo':10s} {benchmark.average_cost:8.3f}  (+-{benchmark.ci_half_width:.3f})"
      "   <- uninterruptible benchmark")
