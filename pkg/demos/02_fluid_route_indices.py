"""Anatomy of the fluid route indices that drive the kstop policies.

A candidate route is scored by pretending the system is a fluid: queues fill
at rate lambda, drain at rate mu while served, and each edge costs 1/tau time
units.  The index psi is reward per unit time along the route; the hurdle
quantities decide whether following the route now beats staying put.
"""

from netsched import (
    SystemState,
    beta,
    build_network,
    build_two_cluster,
    exhaust_times,
    gamma,
    phi,
    psi,
    psi_derivative_sign,
    xi,
)

net = build_network(build_two_cluster(1, 1, 1), lam=(0.05, 0.1),
                    mu=(0.5, 0.5), cost=(0.8, 1.0), tau=0.5)
state = SystemState(1, (2, 3))  # serving point 1, backlog waiting at point 2
route = (2,)

print("state:", state, " candidate route:", route)
print("  drain times T:", exhaust_times(net, state, route))
print("  index psi(t=0):", psi(net, state, route, 0.0))
print("  index psi(t=2):", psi(net, state, route, 2.0))
print("  derivative sign:", psi_derivative_sign(net, state, route),
      "(<= 0 means no reason to idle first)")
print("  round-trip index phi:", phi(net, state, route))
print("  hurdle beta:", beta(net, state, route))
print("  workload-weighted density gamma:", gamma(net, state, route))
print("  processing share xi:", xi(net, state, route),
      "vs traffic intensity", net.traffic_intensity)

print("\nhow the index reacts to backlog at the target:")
for jobs in range(0, 9, 2):
    s = SystemState(1, (2, jobs))
    print(f"  x_2={jobs}: psi={psi(net, s, route):.4f} "
          f"phi={phi(net, s, route)[0]:.4f} beta={beta(net, s, route)[0]:.4f} "
          f"-> {'go' if phi(net, s, route)[0] >= beta(net, s, route)[0] else 'stay'}")
