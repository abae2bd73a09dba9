"""Serve-longest-queue, polling, and the uninterruptible benchmark policy."""

from __future__ import annotations

import pytest

from conftest import homogeneous_complete
from netsched import (
    DvoCommitment,
    NetworkSpec,
    SystemState,
    build_network,
    build_two_cluster,
    dvo_decide,
    make_policy,
    polling_decide,
    serve_longest_queue_decide,
)
from netsched.heuristics import DVO_IDLE


class TestServeLongestQueue:
    def test_remains_while_serving(self):
        net = homogeneous_complete(3)
        assert serve_longest_queue_decide(net, SystemState(2, (0, 1, 5))) == 2

    def test_moves_to_largest_queue(self):
        net = homogeneous_complete(3)
        assert serve_longest_queue_decide(net, SystemState(1, (0, 2, 5))) == 3

    def test_tie_breaks_ascending(self):
        net = homogeneous_complete(4)
        assert serve_longest_queue_decide(net, SystemState(1, (0, 3, 3, 1))) == 2

    def test_all_empty_moves_to_lowest_other_point(self):
        # keeps the policy aligned with the route-index policy, which always
        # has an eligible one-stop route and therefore never idles here
        net = homogeneous_complete(4)
        assert serve_longest_queue_decide(net, SystemState(1, (0, 0, 0, 0))) == 2
        assert serve_longest_queue_decide(net, SystemState(3, (0, 0, 0, 0))) == 1

    def test_requires_complete_graph(self, fig2_net):
        with pytest.raises(ValueError):
            serve_longest_queue_decide(fig2_net, SystemState(1, (0, 0)))


class TestPolling:
    def test_serves_target_until_empty(self, fig2_net):
        action, last = polling_decide(fig2_net, SystemState(1, (3, 0)), last_emptied=2)
        assert action == 1 and last == 2

    def test_advances_cyclically_after_witnessing_empty(self, fig1_net):
        action, last = polling_decide(fig1_net, SystemState(1, (0, 2, 2)), last_emptied=1)
        assert last == 1
        assert action == 4  # first step of 1 -> 2 via the shared stage

    def test_ignores_arrival_while_departing(self, fig2_net):
        # the server witnessed node 1 empty, then a job arrived; it keeps going
        action, last = polling_decide(fig2_net, SystemState(1, (1, 0)), last_emptied=1)
        assert action == 3 and last == 1

    def test_wraps_around(self, fig2_net):
        action, last = polling_decide(fig2_net, SystemState(2, (4, 0)), last_emptied=2)
        assert last == 2
        assert action == 3  # heading back toward point 1


def dvo_example_net() -> NetworkSpec:
    # c1*mu1 = 0.4, c2*mu2 = 0.5, rho = 0.05/0.5 + 0.1/0.5 = 0.3, legs = 2
    return build_network(build_two_cluster(1, 1, 1), (0.05, 0.1), (0.5, 0.5),
                         (0.8, 1.0), 0.5)


class TestBenchmarkPolicy:
    def test_keeps_processing_when_round_trip_rate_too_low(self):
        net = dvo_example_net()
        state = SystemState(1, (2, 3))
        decision, commitment = dvo_decide(net, state, "job_finished",
                                          DvoCommitment("processing"))
        # candidate rate 1.7/6.6 ~ 0.2576 misses the 0.43 hurdle
        assert decision.action == 1
        assert commitment.mode == "processing"

    def test_switches_when_rate_clears_hurdle(self):
        net = build_network(build_two_cluster(1, 1, 1), (0.05, 0.1), (0.5, 0.5),
                            (0.2, 1.0), 0.5)
        state = SystemState(1, (2, 9))
        decision, commitment = dvo_decide(net, state, "job_finished",
                                          DvoCommitment("processing"))
        assert commitment.mode == "switching" and commitment.target == 2
        assert commitment.path == (3, 2)
        assert decision.action == 3

    def test_idles_when_everything_else_is_empty(self):
        net = dvo_example_net()
        state = SystemState(1, (0, 0))
        decision, commitment = dvo_decide(net, state, "job_finished",
                                          DvoCommitment("processing"))
        assert decision.action == 1 and commitment.mode == "idle"

    def test_must_serve_on_arrival(self):
        net = dvo_example_net()
        state = SystemState(2, (9, 1))
        _, commitment = dvo_decide(net, state, "arrived_at_point",
                                   DvoCommitment("switching", target=2))
        assert commitment.mode == "processing"

    def test_idle_arrival_at_own_point_starts_service(self):
        net = dvo_example_net()
        state = SystemState(1, (1, 0))
        _, commitment = dvo_decide(net, state, "idle_arrival", DVO_IDLE)
        assert commitment.mode == "processing"

    def test_idle_arrival_elsewhere_waits_until_queue_justifies_trip(self):
        net = dvo_example_net()
        # a single job at the far point does not beat the refill en route
        state = SystemState(1, (0, 1))
        lam2, tau = net.lam[2], net.tau
        trip = net.dist[2][1] / tau
        _, commitment = dvo_decide(net, state, "idle_arrival", DVO_IDLE)
        if 1 > lam2 * trip:
            assert commitment.mode == "switching"
        else:
            assert commitment.mode == "idle"

    def test_rejects_mid_switch_calls(self):
        net = dvo_example_net()
        with pytest.raises(ValueError):
            dvo_decide(net, SystemState(2, (0, 0)), "arrived_at_point",
                       DvoCommitment("switching", target=2, path=(2,)))
        with pytest.raises(ValueError):
            dvo_decide(net, SystemState(1, (0, 0)), "job_finished", DVO_IDLE)
        with pytest.raises(ValueError):
            dvo_decide(net, SystemState(1, (0, 0)), "idle", DVO_IDLE)


def test_policy_string_parser(fig2_net):
    assert make_policy("kstop:3", fig2_net).name == "kstop:3"
    assert make_policy("kfroml:2:2:impartial", fig2_net).name == "kfroml:2:2:impartial"
    assert make_policy("polling", fig2_net).name == "polling"
    assert make_policy("stay", fig2_net).name == "stay"
    with pytest.raises(ValueError):
        make_policy("dvo", fig2_net)
    with pytest.raises(ValueError):
        make_policy("mystery", fig2_net)
