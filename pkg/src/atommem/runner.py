"""Run directories: executing task files with a policy, then scoring them.

Layout::

    <out>/<run-id>/
        manifest.json           RunManifest, sorted keys
        transcripts/<task>.jsonl
        snapshots/<task>.memory.msgpack   (only with snapshots enabled)
        scores.json
        action_stats.csv

The run id is the first 12 hex digits of the SHA-1 of the manifest content
(excluding the output directory), so identical inputs map to the same
directory. Transcripts are written to ``<task>.jsonl.partial`` and renamed
when the episode completes; scoring only reads finished ``.jsonl`` files.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from atommem.config import AtomMemConfig
from atommem.environment.chunking import WhitespaceTokenCounter
from atommem.environment.trajectory import TrajectoryRecord, load_transcript, run_episode
from atommem.errors import AtomMemError, MissingTranscripts, TaskFileError
from atommem.fsutil import dumps_stable, write_json_atomic
from atommem.policy.base import Policy
from atommem.retrieval.embedding import EmbeddingProvider
from atommem.reward.scoring import f1_score, per_question_em
from atommem.reward.stats import action_stats, write_action_stats_csv
from atommem.tasks.schema import TaskInstance, load_tasks

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SCORES_NAME = "scores.json"
STATS_CSV_NAME = "action_stats.csv"
TRANSCRIPTS_DIR = "transcripts"
SNAPSHOTS_DIR = "snapshots"

PolicyKind = Literal["replay", "heuristic", "remote"]


class RunManifest(BaseModel):
    run_id: str = ""
    task_file: str
    task_file_sha1: str
    policy: PolicyKind
    script_file: Optional[str] = None
    seed: int = 0
    config: dict[str, Any]
    output_dir: str = ""

    def identity(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"run_id", "output_dir"})


def file_sha1(path: Path) -> str:
    return hashlib.sha1(path.read_bytes()).hexdigest()


def public_config(config: AtomMemConfig) -> dict[str, Any]:
    """Config snapshot for the manifest, with API keys removed."""
    data = config.model_dump(mode="json", by_alias=True)
    data["policy"].pop("api_key", None)
    data["embedding"].pop("api_key", None)
    return data


def make_manifest(
    task_file: Path,
    policy: PolicyKind,
    config: AtomMemConfig,
    out_dir: Path,
    seed: int = 0,
    script_file: Optional[Path] = None,
) -> RunManifest:
    manifest = RunManifest(
        task_file=str(task_file),
        task_file_sha1=file_sha1(task_file),
        policy=policy,
        script_file=str(script_file) if script_file else None,
        seed=seed,
        config=public_config(config),
    )
    digest = hashlib.sha1(dumps_stable(manifest.identity()).encode("utf-8")).hexdigest()
    run_id = digest[:12]
    return manifest.model_copy(update={"run_id": run_id, "output_dir": str(out_dir / run_id)})


def load_manifest(run_dir: Path) -> RunManifest:
    path = run_dir / MANIFEST_NAME
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        field_errors = "; ".join(
            f"{' -> '.join(str(x) for x in err['loc'])}: {err['msg']}"
            for err in e.errors()
        )
        raise TaskFileError(path, f"Schema validation failed: {field_errors}") from e
    except (OSError, UnicodeDecodeError) as e:
        raise MissingTranscripts(run_dir) from e


@dataclass
class RunResult:
    run_dir: Path
    completed: list[str] = field(default_factory=list)
    failed: dict[str, str] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.completed) + len(self.failed)


def execute_run(
    tasks: Sequence[TaskInstance],
    policy_for: Callable[[TaskInstance], Policy],
    config: AtomMemConfig,
    manifest: RunManifest,
    provider: EmbeddingProvider,
    parallel: int = 1,
    snapshots: bool = False,
    on_done: Optional[Callable[[str, bool], None]] = None,
) -> RunResult:
    """Run every task; per-task failures are logged and recorded, never raised."""
    run_dir = Path(manifest.output_dir)
    transcripts = run_dir / TRANSCRIPTS_DIR
    transcripts.mkdir(parents=True, exist_ok=True)
    write_json_atomic(run_dir / MANIFEST_NAME, manifest.model_dump(mode="json"))
    snapshot_dir = run_dir / SNAPSHOTS_DIR if snapshots else None

    def _one(task: TaskInstance) -> str:
        partial = transcripts / f"{task.task_id}.jsonl.partial"
        final = transcripts / f"{task.task_id}.jsonl"
        run_episode(
            task,
            config.episode,
            policy_for(task),
            provider=provider,
            counter=WhitespaceTokenCounter(config.episode.tokens_per_word),
            transcript_path=partial,
            snapshot_dir=snapshot_dir,
        )
        os.replace(partial, final)
        return task.task_id

    result = RunResult(run_dir=run_dir)
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        futures = {pool.submit(_one, task): task.task_id for task in tasks}
        for future in as_completed(futures):
            task_id = futures[future]
            try:
                future.result()
                result.completed.append(task_id)
                ok = True
            except AtomMemError as e:
                summary = str(e).splitlines()[0]
                logger.warning("Task %s failed: %s", task_id, summary)
                result.failed[task_id] = summary
                ok = False
            except Exception as e:
                # Policy and provider bugs fail one episode, not the run.
                logger.exception("Task %s crashed", task_id)
                result.failed[task_id] = f"{type(e).__name__}: {e}"
                ok = False
            if on_done is not None:
                on_done(task_id, ok)
    result.completed.sort()
    return result


def load_run_records(run_dir: Path) -> list[TrajectoryRecord]:
    paths = sorted((run_dir / TRANSCRIPTS_DIR).glob("*.jsonl"))
    if not paths:
        raise MissingTranscripts(run_dir)
    return [load_transcript(p) for p in paths]


def score_run(run_dir: Path, tasks_path: Optional[Path] = None) -> dict[str, Any]:
    """Score a finished run directory and write scores.json and action_stats.csv.

    Raises MissingTranscripts when the directory holds no finished transcript.
    """
    if not (run_dir / TRANSCRIPTS_DIR).is_dir():
        raise MissingTranscripts(run_dir)
    records = load_run_records(run_dir)
    manifest = load_manifest(run_dir)
    tasks = {t.task_id: t for t in load_tasks(tasks_path or Path(manifest.task_file))}

    instances: list[dict[str, Any]] = []
    per_question: list[dict[str, Any]] = []
    for record in records:
        task = tasks.get(record.task_id)
        if task is None:
            logger.warning("Transcript %s has no matching task; skipped", record.task_id)
            continue
        ems = per_question_em(record.answers, task.gold)
        f1s = [f1_score(p, g) for p, g in zip(record.answers, task.gold)]
        record.reward = float(np.mean(ems))
        instances.append({
            "task_id": record.task_id,
            "em": record.reward,
            "f1": float(np.mean(f1s)),
            "steps": record.num_steps,
            "action_counts": record.action_counts,
        })
        per_question.extend(
            {"task_id": record.task_id, "q": qi, "pred": pred, "gold": gold, "em": em, "f1": f1}
            for qi, (pred, gold, em, f1) in enumerate(zip(record.answers, task.gold, ems, f1s))
        )

    stats = action_stats(records)
    report = {
        "run_id": manifest.run_id,
        "em": float(np.mean([i["em"] for i in instances])) if instances else 0.0,
        "f1": float(np.mean([i["f1"] for i in instances])) if instances else 0.0,
        "instances": instances,
        "per_question": per_question,
        "action_stats": stats.to_dict(),
    }
    write_json_atomic(run_dir / SCORES_NAME, report)
    write_action_stats_csv(run_dir / STATS_CSV_NAME, stats)
    return report


def score_runs(run_dirs: Sequence[Path], tasks_path: Optional[Path] = None) -> dict[str, Any]:
    """Score repeated runs and report per-run and mean EM."""
    reports = [score_run(d, tasks_path) for d in run_dirs]
    ems = [r["em"] for r in reports]
    return {
        "runs": [{"run_dir": str(d), "run_id": r["run_id"], "em": r["em"]} for d, r in zip(run_dirs, reports)],
        "mean_em": float(np.mean(ems)) if ems else 0.0,
    }


def read_rewards(path: Path) -> list[float]:
    """Rewards as a JSON list or one number per line."""
    text = path.read_text(encoding="utf-8").strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return [float(line) for line in text.splitlines() if line.strip()]
