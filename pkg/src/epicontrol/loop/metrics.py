"""Cross-replicate summary metrics."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..rewards import RewardConfig
from .decision import DecisionTrace

METRIC_COLUMNS = [
    "planner", "n_replicates", "total_reward_mean", "total_reward_sd",
    "cumulative_icu_days_mean", "peak_icu_mean", "crash_days_mean",
    "occupancy_a1", "occupancy_a2", "occupancy_a3", "occupancy_a4",
]


def summarize(traces: list[DecisionTrace], reward_cfg: RewardConfig) -> list[dict]:
    """Per-planner metrics across replicates, sorted by planner name."""
    if not traces:
        raise ValueError("need at least one trace")
    by_planner: dict[str, list[DecisionTrace]] = {}
    for tr in traces:
        by_planner.setdefault(tr.planner, []).append(tr)
    rows = []
    for planner in sorted(by_planner):
        group = by_planner[planner]
        totals = np.array([t.total_reward for t in group])
        rows.append({
            "planner": planner,
            "n_replicates": len(group),
            "total_reward_mean": float(totals.mean()),
            "total_reward_sd": float(totals.std(ddof=1)) if len(group) > 1 else 0.0,
            "cumulative_icu_days_mean": float(np.mean([t.y.sum() for t in group])),
            "peak_icu_mean": float(np.mean([t.y.max() for t in group])),
            "crash_days_mean": float(np.mean([t.crash_count(reward_cfg) for t in group])),
            **{f"occupancy_a{a}": float(np.mean([t.action_occupancy()[a] for t in group]))
               for a in (1, 2, 3, 4)},
        })
    return rows


def write_metrics(rows: list[dict], out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    json_path = out_dir / "metrics.json"
    json_path.write_text(json.dumps(rows, indent=2))
    return {"csv": csv_path, "json": json_path}


def reward_ledger(traces: list[DecisionTrace]) -> dict:
    """Plot-ready cumulative reward series per replicate plus the mean."""
    series = [np.cumsum(t.rewards).tolist() for t in traces]
    mean = np.mean([np.cumsum(t.rewards) for t in traces], axis=0).tolist()
    return {"replicates": series, "mean": mean}
