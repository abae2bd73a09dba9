"""A miniature sweep: generate instances, race the policies, aggregate.

The same machinery backs the `netsched campaign` and `netsched aggregate`
commands; here it runs in-process at a desk-friendly scale.
"""

import tempfile
from pathlib import Path

from netsched import ExperimentCampaign, aggregate, run_campaign

campaign = ExperimentCampaign(
    layout="two_cluster",
    instance_count=12,
    policies=("dvo", "kstop:1", "kstop:2", "kfroml:2:4:impartial"),
    base_seed=303,
    warmup=2_000,
    horizon=30_000,
    dvo_warmup=2_000.0,
    dvo_horizon=30_000.0,
)

out = Path(tempfile.mkdtemp()) / "sweep.csv"
rows = run_campaign(campaign, out_csv=out)
print(f"wrote {len(rows)} rows to {out}\n")

print("mean percentage improvement over the benchmark policy:")
for row in aggregate(rows, kind="improvement", baseline="dvo",
                     policies=["kstop:1", "kstop:2", "kfroml:2:4:impartial"]):
    print(f"  {row.label:28s} {row.mean:6.2f}% +-{row.half_width:.2f} "
          f"(median {row.percentiles[50]:.2f}%)")

print("\nsame comparison bucketed by traffic intensity:")
for row in aggregate(rows, kind="improvement", baseline="dvo",
                     policies=["kstop:2"], bucket_by="rho_band"):
    print(f"  {row.bucket:18s} n={row.count:2d} mean {row.mean:6.2f}%")
