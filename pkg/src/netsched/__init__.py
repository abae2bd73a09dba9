"""netsched: stochastic dynamic job scheduling on networks.

A single server travels a graph serving queues that fill at demand points.
This package builds the unit-step (uniformized) MDP for that system, runs the
route-index and benchmark policies under common random numbers, and computes
optimal average costs on truncated state spaces by relative value iteration.
"""

from .dp import (
    DpResult,
    FeasibilityLimits,
    FeasibilityResult,
    GreedyTablePolicy,
    TruncatedMdp,
    build_truncated,
    feasibility_escalation,
    relative_value_iteration,
)
from .experiments import (
    AggregateRow,
    ExperimentCampaign,
    aggregate,
    run_campaign,
)
from .fluid import (
    DemandSequence,
    FluidEvaluation,
    beta,
    evaluate,
    exhaust_times,
    gamma,
    phi,
    psi,
    psi_derivative_sign,
    xi,
)
from .heuristics import (
    DvoCommitment,
    KFromLPolicy,
    KStopPolicy,
    Policy,
    PolicyDecision,
    PollingPolicy,
    ServeLongestQueuePolicy,
    StayPolicy,
    dvo_decide,
    k_from_l_decide,
    kstop_decide,
    make_policy,
    polling_decide,
    serve_longest_queue_decide,
)
from .instgen import (
    InstanceSpec,
    generate_lattice,
    generate_two_cluster,
    instance_from_json,
    instance_to_json,
)
from .model import (
    SystemState,
    TransitionEntry,
    action_set,
    initial_state,
    reward_rate,
    step_cost,
    transition_distribution,
)
from .network import (
    Layout,
    NetworkError,
    NetworkSpec,
    all_pairs_distance,
    build_network,
    build_random_lattice,
    build_two_cluster,
    network_from_json,
    network_to_json,
    next_step_on_shortest_path,
    shortest_path,
)
from .sim import (
    RandomStream,
    SimReport,
    SwitchTimeEstimate,
    estimate_switch_time_bound,
    simulate_discrete,
    simulate_dvo,
    switch_time_bound,
)

__version__ = "0.1.0"
