"""Batch experiment orchestration: instance sweeps under common random
numbers, optional DP reference values, and table aggregation with confidence
intervals and nearest-rank percentiles."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dp import FeasibilityLimits, feasibility_escalation
from .heuristics import make_policy
from .instgen import generate
from .sim import simulate_discrete, simulate_dvo

log = logging.getLogger(__name__)

RESULTS_HEADER_COMMENT = "# netsched results v1"
WORKERS_ENV_VAR = "NETSCHED_WORKERS"

RHO_BANDS = ((0.1, 0.3), (0.3, 0.5), (0.5, 0.7), (0.7, 0.9))
ETA_BANDS = ((0.1, 0.4), (0.4, 0.7), (0.7, 1.0), (1.0, 4.0), (4.0, 7.0), (7.0, 10.0))


@dataclass(frozen=True)
class ExperimentCampaign:
    """One sweep: generated instances x policies, all on shared streams."""

    layout: str = "two_cluster"
    instance_count: int = 10
    policies: tuple[str, ...] = ("dvo", "kstop:1", "kstop:2")
    base_seed: int = 0
    warmup: int = 10_000
    horizon: int = 1_000_000
    dvo_warmup: float = 10_000.0
    dvo_horizon: float = 1_000_000.0
    with_dp: bool = False
    dp_limits: FeasibilityLimits = field(default_factory=FeasibilityLimits)


def policy_column(policy: str) -> str:
    return "cost_" + policy.replace(":", "_")


def run_instance(campaign: ExperimentCampaign, index: int) -> dict:
    """Generate instance `index` of the campaign and evaluate every policy.

    All stationary policies share one uniform stream per instance, so their
    arrival realizations coincide; the benchmark policy gets the same seed on
    its own continuous clock.
    """
    instance = generate(campaign.layout, np.random.default_rng([campaign.base_seed, index, 0]))
    net = instance.network
    sim_seed = [campaign.base_seed, index, 1]

    row: dict = {
        "instance_id": index,
        "layout": instance.layout["kind"],
        "d": net.demand_count,
        "d1": instance.layout.get("d1", ""),
        "d2": instance.layout.get("d2", ""),
        "n_stages": net.stage_count,
        "rho": instance.rho,
        "eta": instance.eta,
    }
    for policy_str in campaign.policies:
        if policy_str == "dvo":
            report = simulate_dvo(net, sim_seed, campaign.dvo_warmup, campaign.dvo_horizon)
        else:
            policy = make_policy(policy_str, net)
            report = simulate_discrete(net, policy, sim_seed, campaign.warmup, campaign.horizon)
        row[policy_column(policy_str)] = report.average_cost

    if campaign.with_dp:
        outcome = feasibility_escalation(net, campaign.dp_limits)
        row["feasible"] = int(outcome.feasible)
        row["g_star"] = outcome.g_star if outcome.feasible else ""
    else:
        row["feasible"] = ""
        row["g_star"] = ""
    return row


def _columns(campaign: ExperimentCampaign) -> list[str]:
    fixed = ["instance_id", "layout", "d", "d1", "d2", "n_stages", "rho", "eta",
             "feasible", "g_star"]
    return fixed + [policy_column(p) for p in campaign.policies]


def load_results(path) -> list[dict]:
    """Read a results CSV back into typed rows."""
    rows = []
    with open(path, newline="") as handle:
        content = [line for line in handle if not line.startswith("#")]
    for record in csv.DictReader(io.StringIO("".join(content))):
        row = dict(record)
        for key, value in row.items():
            if value == "":
                row[key] = None
            elif key in ("instance_id", "d", "n_stages", "d1", "d2", "feasible"):
                row[key] = int(value)
            elif key not in ("layout",):
                row[key] = float(value)
        rows.append(row)
    return rows


def _write_results(path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(RESULTS_HEADER_COMMENT + "\n")
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row.get(key, "") for key in columns})


def run_campaign(
    campaign: ExperimentCampaign,
    out_csv=None,
    workers: int | None = None,
) -> list[dict]:
    """Run (or resume) a campaign; returns all rows sorted by instance id.

    If `out_csv` already holds rows for some instance ids, only the missing
    ids are computed.  Failures are logged per instance without aborting the
    sweep.  Worker count comes from the argument, else the NETSCHED_WORKERS
    environment variable, else 1.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    existing: dict[int, dict] = {}
    if out_csv is not None and Path(out_csv).exists():
        for row in load_results(out_csv):
            existing[int(row["instance_id"])] = row
    todo = [i for i in range(campaign.instance_count) if i not in existing]

    new_rows: dict[int, dict] = {}
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(run_instance, campaign, i) for i in todo}
            for i, future in futures.items():
                try:
                    new_rows[i] = future.result()
                except Exception:
                    log.exception("instance %d failed", i)
    else:
        for i in todo:
            try:
                new_rows[i] = run_instance(campaign, i)
            except Exception:
                log.exception("instance %d failed", i)

    merged = {**existing, **new_rows}
    rows = [merged[i] for i in sorted(merged)]
    if out_csv is not None:
        _write_results(out_csv, _columns(campaign), rows)
    return rows


def nearest_rank_percentile(values: list[float], p: float) -> float:
    """Nearest-rank percentile on the sorted sample (1-indexed rank ceil(pn))."""
    if not values:
        raise ValueError("empty sample")
    ordered = sorted(values)
    rank = max(1, int(np.ceil(p / 100.0 * len(ordered))))
    return ordered[rank - 1]


PERCENTILE_POINTS = (10, 25, 50, 75, 90)


@dataclass(frozen=True)
class AggregateRow:
    label: str
    bucket: str
    count: int
    mean: float
    half_width: float
    percentiles: dict[int, float]


def _bucket_key(row: dict, bucket_by: str) -> str | None:
    if bucket_by == "none":
        return "all"
    if bucket_by == "n":
        return f"n={row['n_stages']}"
    if bucket_by == "rho_band":
        bands, value = RHO_BANDS, row["rho"]
    elif bucket_by == "eta_band":
        bands, value = ETA_BANDS, row["eta"]
    else:
        raise ValueError(f"unknown bucketing {bucket_by!r}")
    for lo, hi in bands:
        if lo <= value < hi:
            return f"{lo}<={bucket_by[:3]}<{hi}"
    return None


def aggregate(
    results,
    kind: str = "improvement",
    baseline: str = "dvo",
    policies: list[str] | None = None,
    bucket_by: str = "none",
) -> list[AggregateRow]:
    """Summarize per-instance costs into comparison tables.

    kind="improvement": 100 * (g_baseline - g_policy) / g_baseline per row.
    kind="suboptimality": 100 * (g_policy - g_star) / g_star on rows where the
    DP reference is present.  Empty buckets are omitted.
    """
    rows = load_results(results) if isinstance(results, (str, Path)) else list(results)
    if not rows:
        raise ValueError("no result rows to aggregate")
    if policies is None:
        policies = sorted(
            {key[len("cost_"):].replace("_", ":") for key in rows[0] if key.startswith("cost_")}
        )
    out: list[AggregateRow] = []
    for policy_str in policies:
        column = policy_column(policy_str)
        buckets: dict[str, list[float]] = {}
        for row in rows:
            key = _bucket_key(row, bucket_by)
            if key is None or row.get(column) is None:
                continue
            if kind == "improvement":
                base = row.get(policy_column(baseline))
                if base is None or base == 0:
                    continue
                value = 100.0 * (base - row[column]) / base
            elif kind == "suboptimality":
                g_star = row.get("g_star")
                if g_star in (None, "") or not row.get("feasible"):
                    continue
                value = 100.0 * (row[column] - g_star) / g_star
            else:
                raise ValueError(f"unknown aggregation kind {kind!r}")
            buckets.setdefault(key, []).append(value)
        label = (
            f"{policy_str} vs {baseline}" if kind == "improvement"
            else f"{policy_str} suboptimality"
        )
        for key in sorted(buckets):
            values = buckets[key]
            arr = np.asarray(values)
            half = (
                1.96 * arr.std(ddof=1) / np.sqrt(len(arr)) if len(arr) > 1 else 0.0
            )
            out.append(
                AggregateRow(
                    label=label,
                    bucket=key,
                    count=len(values),
                    mean=float(arr.mean()),
                    half_width=float(half),
                    percentiles={p: nearest_rank_percentile(values, p)
                                 for p in PERCENTILE_POINTS},
                )
            )
    return out
