"""Random problem-instance generation.

Rates follow the uniform-sampling protocol: a target traffic intensity is
drawn, per-point workloads are rescaled to hit it exactly, the switching rate
is tied to the aggregate arrival rate through a bimodal relative speed, and
everything is normalized onto the unit step budget and rounded to two
significant figures.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .network import (
    Layout,
    NetworkSpec,
    build_network,
    build_random_lattice,
    build_two_cluster,
    network_from_json,
    network_to_json,
)

log = logging.getLogger(__name__)

GENERATOR_VERSION = "netsched-instgen-1"


@dataclass(frozen=True)
class InstanceSpec:
    """A generated experiment unit: network plus its sampling targets."""

    network: NetworkSpec
    rho: float  # target traffic intensity used during sampling
    eta: float  # target relative switching rate tau / Lambda
    layout: dict
    provenance: dict

    @property
    def achieved_rho(self) -> float:
        return self.network.traffic_intensity

    @property
    def total_arrival_rate(self) -> float:
        return self.network.total_arrival_rate

    @property
    def uniformization_step(self) -> float:
        return self.network.uniformization_step


def round_to_sig_figs(x: float, figures: int = 2) -> float:
    if x == 0.0:
        return 0.0
    return round(x, -int(math.floor(math.log10(abs(x)))) + (figures - 1))


def _coerce_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), int(rng)
    return rng, None


def _draw_rates(rng: np.random.Generator, d: int):
    """One pass of the rate protocol; returns (lam, mu, cost, tau, rho, eta)."""
    rho = rng.uniform(0.1, 0.9)
    mu = [rng.uniform(0.1, 0.9) for _ in range(d)]
    lam_init = [rng.uniform(0.1 * m, m) for m in mu]
    weights = [l / m for l, m in zip(lam_init, mu)]
    scale = rho / sum(weights)
    lam = [w * scale * m for w, m in zip(weights, mu)]
    cost = [rng.uniform(0.1, 0.9) for _ in range(d)]
    p = rng.uniform(0.0, 1.0)
    eta = rng.uniform(0.1, 1.0) if p < 0.5 else rng.uniform(1.0, 10.0)
    tau = eta * sum(lam)
    return lam, mu, cost, tau, rho, eta


def _normalize_and_round(lam, mu, cost, tau):
    """Map onto the unit step budget, round to 2 significant figures, and
    re-normalize if rounding pushed the budget above one step."""
    budget = sum(lam) + max(max(mu), tau)
    lam = [x / budget for x in lam]
    mu = [x / budget for x in mu]
    tau = tau / budget

    lam = [round_to_sig_figs(x) for x in lam]
    mu = [round_to_sig_figs(x) for x in mu]
    tau = round_to_sig_figs(tau)

    rounded_budget = sum(lam) + max(max(mu), tau)
    rescaled = rounded_budget > 1.0
    if rescaled:
        lam = [x / rounded_budget for x in lam]
        mu = [x / rounded_budget for x in mu]
        tau = tau / rounded_budget
    return lam, mu, tau, rescaled


def _generate(rng, layout_maker, max_attempts: int = 100) -> InstanceSpec:
    rng, seed = _coerce_rng(rng)
    for attempt in range(max_attempts):
        layout, layout_tag = layout_maker(rng)
        lam, mu, cost, tau, rho, eta = _draw_rates(rng, layout.demand_count)
        lam, mu, tau, rescaled = _normalize_and_round(lam, mu, cost, tau)
        if any(l >= m for l, m in zip(lam, mu)):
            log.info("rejected instance draw %d: rounding collapsed a service margin", attempt)
            continue
        cost = [round_to_sig_figs(c) for c in cost]
        net = build_network(layout, lam, mu, cost, tau)
        provenance = {
            "seed": seed,
            "generator": GENERATOR_VERSION,
            "rejections": attempt,
            "rescaled_after_rounding": rescaled,
        }
        return InstanceSpec(network=net, rho=rho, eta=eta, layout=layout_tag,
                            provenance=provenance)
    raise RuntimeError(f"no valid instance after {max_attempts} draws")


def generate_two_cluster(rng) -> InstanceSpec:
    """Random two-cluster instance: cluster sizes in 1..4, chain length 1..6."""

    def maker(gen: np.random.Generator) -> tuple[Layout, dict]:
        d1 = int(gen.integers(1, 5))
        d2 = int(gen.integers(1, 5))
        n = int(gen.integers(1, 7))
        layout = build_two_cluster(d1, d2, n)
        return layout, {"kind": "two_cluster", "d1": d1, "d2": d2, "n": n}

    return _generate(rng, maker)


def generate_lattice(rng) -> InstanceSpec:
    """Random pruned-lattice instance with 2..8 demand points."""

    def maker(gen: np.random.Generator) -> tuple[Layout, dict]:
        d = int(gen.integers(2, 9))
        layout = build_random_lattice(gen, d)
        return layout, {"kind": "lattice", "d": d}

    return _generate(rng, maker)


def generate(layout_kind: str, rng) -> InstanceSpec:
    if layout_kind in ("two_cluster", "two-cluster"):
        return generate_two_cluster(rng)
    if layout_kind == "lattice":
        return generate_lattice(rng)
    raise ValueError(f"unknown layout kind {layout_kind!r}")


def instance_to_json(instance: InstanceSpec, indent: int | None = 2) -> str:
    payload = {
        "format": "netsched-instance-v1",
        "layout": instance.layout,
        "rho": instance.rho,
        "eta": instance.eta,
        "provenance": instance.provenance,
        "network": json.loads(network_to_json(instance.network, indent=None)),
    }
    return json.dumps(payload, sort_keys=True, indent=indent)


def instance_from_json(source: str | dict) -> InstanceSpec:
    data = json.loads(source) if isinstance(source, str) else source
    if "network" not in data:  # bare network files are accepted as instances
        net = network_from_json(data)
        return InstanceSpec(
            network=net,
            rho=net.traffic_intensity,
            eta=net.relative_switching_rate,
            layout={"kind": "custom"},
            provenance={"seed": None, "generator": "external"},
        )
    net = network_from_json(data["network"])
    return InstanceSpec(
        network=net,
        rho=float(data["rho"]),
        eta=float(data["eta"]),
        layout=dict(data["layout"]),
        provenance=dict(data.get("provenance", {})),
    )
