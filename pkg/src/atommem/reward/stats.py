"""Memory-operation frequency analytics: mean calls per episode, per action kind."""
import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from atommem.environment.trajectory import TrajectoryRecord
from atommem.fsutil import write_bytes_atomic
from atommem.protocol.actions import ActionKind

KINDS: tuple[str, ...] = tuple(k.value for k in ActionKind)


@dataclass
class ActionStats:
    episodes: int
    overall: dict[str, float]
    # train_step -> (episode count, per-kind means); empty when no record is tagged
    per_train_step: dict[int, tuple[int, dict[str, float]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "overall": self.overall,
            "per_train_step": {
                str(step): {"episodes": n, "means": means}
                for step, (n, means) in sorted(self.per_train_step.items())
            },
        }


def _means(records: Sequence[TrajectoryRecord]) -> dict[str, float]:
    if not records:
        return {kind: 0.0 for kind in KINDS}
    counts = np.array([[r.action_counts[k] for k in KINDS] for r in records], dtype=np.float64)
    return {kind: float(v) for kind, v in zip(KINDS, counts.mean(axis=0))}


def action_stats(trajectories: Sequence[TrajectoryRecord]) -> ActionStats:
    by_step: dict[int, list[TrajectoryRecord]] = defaultdict(list)
    for record in trajectories:
        if record.train_step is not None:
            by_step[record.train_step].append(record)
    return ActionStats(
        episodes=len(trajectories),
        overall=_means(trajectories),
        per_train_step={step: (len(rs), _means(rs)) for step, rs in by_step.items()},
    )


def action_stats_csv(stats: ActionStats) -> str:
    """Plot-ready series: one row per training step, or a single ``all`` row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["train_step", "episodes", *KINDS])
    if stats.per_train_step:
        for step, (n, means) in sorted(stats.per_train_step.items()):
            writer.writerow([step, n, *(f"{means[k]:.6f}" for k in KINDS)])
    else:
        writer.writerow(["all", stats.episodes, *(f"{stats.overall[k]:.6f}" for k in KINDS)])
    return buf.getvalue()


def write_action_stats_csv(path: Path, stats: ActionStats) -> Path:
    return write_bytes_atomic(path, action_stats_csv(stats).encode("utf-8"), suffix=".csv.tmp")
