"""Episode rollouts and their JSONL transcripts.

Transcript files hold one step per line::

    {"actions": [{"kind": "create", "content": "..."}], "diagnostics": [],
     "observation": {...}, "policy_text": "...", "step": 0}

Answer steps also carry ``"answer"``. Lines are appended and flushed as
steps complete, so an interrupted run leaves valid JSONL behind.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

from pydantic import BaseModel, ValidationError

from atommem.config import EpisodeConfig
from atommem.environment.chunking import TokenCounter
from atommem.environment.episode import Observation, Terminal, TranscriptStep, reset, step
from atommem.errors import TranscriptError
from atommem.memory.snapshot import save_snapshot
from atommem.protocol.actions import ActionKind, ActionSequence
from atommem.retrieval.embedding import EmbeddingProvider
from atommem.tasks.schema import TaskInstance

if TYPE_CHECKING:
    from atommem.policy.base import Policy

logger = logging.getLogger(__name__)


@dataclass
class TrajectoryRecord:
    """One rollout: answers, per-step actions, output-token spans and (once scored) reward."""

    task_id: str
    answers: list[str]
    per_step_actions: list[ActionSequence]
    token_spans: list[tuple[int, int]] = field(default_factory=list)   # (step, output tokens)
    transcript: list[TranscriptStep] = field(default_factory=list)
    reward: Optional[float] = None
    train_step: Optional[int] = None
    group_id: Optional[str] = None

    @property
    def action_counts(self) -> dict[str, int]:
        totals = {kind.value: 0 for kind in ActionKind}
        for seq in self.per_step_actions:
            for kind, n in seq.counts().items():
                totals[kind] += n
        return totals

    @property
    def num_steps(self) -> int:
        return len(self.per_step_actions)


class TranscriptLine(BaseModel):
    step: int
    observation: dict[str, Any]
    policy_text: str
    actions: list[dict[str, Any]]
    diagnostics: list[str]
    answer: Optional[str] = None


def transcript_line(entry: TranscriptStep) -> str:
    return json.dumps(entry.to_dict(), sort_keys=True, ensure_ascii=False)


def record_from_steps(
    task_id: str,
    steps: list[TranscriptStep],
    counter: Optional[TokenCounter] = None,
) -> TrajectoryRecord:
    spans = (
        [(s.observation.step, counter.count(s.policy_text)) for s in steps]
        if counter is not None else []
    )
    return TrajectoryRecord(
        task_id=task_id,
        answers=[s.answer for s in steps if s.answer is not None],
        per_step_actions=[s.actions for s in steps],
        token_spans=spans,
        transcript=list(steps),
    )


def load_transcript(path: Path) -> TrajectoryRecord:
    """Rebuild a TrajectoryRecord from a transcript file; task_id is the file stem."""
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise TranscriptError(path, str(e)) from e

    steps: list[TranscriptStep] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            parsed = TranscriptLine.model_validate_json(line)
            steps.append(TranscriptStep.from_dict(parsed.model_dump()))
        except ValidationError as e:
            field_errors = "; ".join(
                f"{' -> '.join(str(x) for x in err['loc'])}: {err['msg']}"
                for err in e.errors()
            )
            raise TranscriptError(path, f"line {lineno}: {field_errors}") from e
        except (KeyError, ValueError, TypeError) as e:
            raise TranscriptError(path, f"line {lineno}: {e!r}") from e
    return record_from_steps(path.name.removesuffix(".jsonl"), steps)


def run_episode(
    task: TaskInstance,
    config: EpisodeConfig,
    policy: "Policy",
    provider: Optional[EmbeddingProvider] = None,
    counter: Optional[TokenCounter] = None,
    transcript_path: Optional[Path] = None,
    snapshot_dir: Optional[Path] = None,
) -> TrajectoryRecord:
    """Drive reset/step to completion with *policy*.

    Policy transport errors propagate. With *transcript_path*, each step is
    appended to the file as soon as it completes.
    """
    # Lazy import: policy.prompts needs environment types only for annotations.
    from atommem.policy.prompts import render_prompt

    state, obs = reset(task, config, provider=provider, counter=counter)
    sink = None
    if transcript_path is not None:
        transcript_path.parent.mkdir(parents=True, exist_ok=True)
        sink = transcript_path.open("w", encoding="utf-8")
    try:
        current: Observation | Terminal = obs
        while isinstance(current, Observation):
            prompt = render_prompt(task, current, config)
            text = policy.respond(task, current, prompt)
            state, current = step(state, text)
            if sink is not None:
                sink.write(transcript_line(state.transcript[-1]) + "\n")
                sink.flush()
    finally:
        if sink is not None:
            sink.close()

    if snapshot_dir is not None:
        save_snapshot(state.memory, snapshot_dir, task.task_id)
    return record_from_steps(task.task_id, state.transcript, state.counter)
