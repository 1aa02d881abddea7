"""Scripted policy: returns fixed responses in order, ignoring observations."""
from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import TYPE_CHECKING, Literal, Sequence

from atommem.config import EpisodeConfig
from atommem.environment.chunking import WhitespaceTokenCounter, chunk_stream
from atommem.errors import PolicyError, ScriptExhausted
from atommem.fsutil import write_json_atomic
from atommem.policy.base import Policy
from atommem.protocol.actions import ActionSequence, Create, Read, Scratchpad
from atommem.protocol.parser import get_schema, render

if TYPE_CHECKING:
    from atommem.environment.episode import Observation
    from atommem.tasks.schema import TaskInstance


class ReplayPolicy(Policy):
    name = "replay"

    def __init__(self, script: Sequence[str]) -> None:
        self.script = list(script)
        self._turn = 0
        self._lock = threading.Lock()

    def respond(self, task: "TaskInstance", observation: "Observation", prompt: str) -> str:
        with self._lock:
            if self._turn >= len(self.script):
                raise ScriptExhausted(self._turn, len(self.script))
            text = self.script[self._turn]
            self._turn += 1
            return text

    @property
    def turns_used(self) -> int:
        return self._turn


def replay_policy(script: Sequence[str]) -> ReplayPolicy:
    return ReplayPolicy(script)


ScriptKind = Literal["gold", "wrong", "empty"]
WRONG_ANSWER = "no answer found"


def make_script(task: "TaskInstance", config: EpisodeConfig, kind: ScriptKind = "gold") -> list[str]:
    """One response per chunk plus one per question.

    ``gold`` notes each chunk in memory and the scratchpad, then answers with
    the first gold answer; ``wrong`` answers with a fixed non-answer;
    ``empty`` returns empty text on every turn.
    """
    counter = WhitespaceTokenCounter(config.tokens_per_word)
    n_chunks = len(chunk_stream(task.document_texts, config, counter))
    if kind == "empty":
        return [""] * (n_chunks + len(task.questions))

    schema = get_schema(config.schema_kind)
    query = " ".join(task.questions)
    script = [
        render(
            ActionSequence(actions=[
                Create(f"Read chunk {i} of task {task.task_id}"),
                Scratchpad(f"{i + 1} of {n_chunks} chunks read"),
                Read(query),
            ]),
            schema,
        )
        for i in range(n_chunks)
    ]
    for gold in task.gold:
        answer = gold[0] if kind == "gold" else WRONG_ANSWER
        script.append(render(ActionSequence(final_answer=answer), schema))
    return script


def write_scripts(path: Path, scripts: dict[str, list[str]]) -> Path:
    return write_json_atomic(path, scripts)


def load_scripts(path: Path) -> dict[str, list[str]]:
    """Read a replay script file: JSON object mapping task_id -> list of responses."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise PolicyError(f"Cannot load replay script '{path.name}'.\n  Cause: {e}") from e
    if not isinstance(data, dict) or not all(
        isinstance(v, list) and all(isinstance(s, str) for s in v) for v in data.values()
    ):
        raise PolicyError(
            f"Cannot load replay script '{path.name}'.\n"
            f"  Cause: expected a JSON object mapping task ids to lists of strings.\n"
            f"  Check: Generate one with `atommem make-script`."
        )
    return {str(k): list(v) for k, v in data.items()}
