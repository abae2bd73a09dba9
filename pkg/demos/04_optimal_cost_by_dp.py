"""Optimal average cost by relative value iteration, and how close the
policies get to it.

The state space is truncated at m jobs per queue; the feasibility loop grows
m until the answer stops moving, which is the certificate that the truncation
is no longer binding.
"""

from netsched import (
    FeasibilityLimits,
    GreedyTablePolicy,
    build_network,
    build_truncated,
    build_two_cluster,
    feasibility_escalation,
    make_policy,
    relative_value_iteration,
    simulate_discrete,
    simulate_dvo,
)

net = build_network(build_two_cluster(1, 1, 2), lam=(0.08, 0.12),
                    mu=(0.45, 0.5), cost=(1.0, 0.7), tau=0.35)
print("network: 2 demand points, 2 stages, rho =", round(net.traffic_intensity, 3))

for m in (5, 10, 20, 40):
    result = relative_value_iteration(build_truncated(net, m), tolerance=1e-7)
    print(f"  m={m:3d}: g* = {result.g_star:.6f}  ({result.iterations} sweeps)")

outcome = feasibility_escalation(
    net, FeasibilityLimits(state_limit=50_000, time_limit=1.0, tolerance=1e-7)
)
print("escalation verdict:", "feasible" if outcome.feasible else "infeasible",
      "g* =", round(outcome.g_star, 6))

print("\npolicies against the optimum:")
g_star = outcome.g_star
mdp = build_truncated(net, outcome.history[-1]["m"])
solved = relative_value_iteration(mdp, 1e-7, keep_bias=True)
policies = [make_policy(s, net) for s in ("kstop:1", "kstop:2", "polling")]
policies.append(GreedyTablePolicy(mdp, solved.bias))
for policy in policies:
    report = simulate_discrete(net, policy, seed=5, warmup=10_000, horizon=300_000)
    gap = 100 * (report.average_cost - g_star) / g_star
    print(f"  {policy.name:10s} cost {report.average_cost:.4f}  (+{gap:.2f}% vs g*)")
benchmark = simulate_dvo(net, seed=5, warmup=10_000.0, horizon=300_000.0)
gap = 100 * (benchmark.average_cost - g_star) / g_star
print(f"  {'dvo':10s} cost {benchmark.average_cost:.4f}  (+{gap:.2f}% vs g*)")
