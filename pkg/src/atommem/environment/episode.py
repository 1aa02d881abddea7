"""The streaming episode loop: reset() and step().

Step schedule for a task with c chunks and q questions:

  steps 0 .. c-1        streaming: observation carries chunk t
  steps c .. c+q-1      answering: observation carries question t-c, no chunk

Every step parses the policy text, applies non-Read actions in emission
order and evaluates the step's Read queries against the memory as it stands
at the end of that step. Those results are shown in the *next* observation
(Read latency). The scratchpad is shown in every observation.

Under the prompt schema, ``<update_query>`` sets a standing query that is
re-evaluated every step until replaced; under the table schema each
``<read_memory>`` is answered once.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union

from atommem.config import EpisodeConfig
from atommem.environment.chunking import TokenCounter, WhitespaceTokenCounter, chunk_stream
from atommem.errors import EpisodeDone
from atommem.memory.state import MemoryState, apply_sequence
from atommem.protocol.actions import ActionSequence, action_from_dict, action_to_dict
from atommem.protocol.parser import SchemaKind, SchemaVariant, get_schema, parse
from atommem.retrieval.embedding import EmbeddingProvider, HashEmbeddingProvider
from atommem.retrieval.index import retrieve_many
from atommem.tasks.schema import TaskInstance

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    STREAMING = "streaming"
    ANSWERING = "answering"
    DONE = "done"


@dataclass
class Observation:
    step: int
    scratchpad: str
    retrieved: list[tuple[int, str]] = field(default_factory=list)
    env_chunk: Optional[str] = None
    pending_question: Optional[str] = None
    query: str = ""
    diagnostics: list[str] = field(default_factory=list)

    @property
    def is_answer_turn(self) -> bool:
        return self.pending_question is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "env_chunk": self.env_chunk,
            "scratchpad": self.scratchpad,
            "query": self.query,
            "retrieved": [{"id": i, "content": c} for i, c in self.retrieved],
            "pending_question": self.pending_question,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Observation":
        return cls(
            step=int(data["step"]),
            scratchpad=str(data["scratchpad"]),
            retrieved=[(int(r["id"]), str(r["content"])) for r in data.get("retrieved", [])],
            env_chunk=data.get("env_chunk"),
            pending_question=data.get("pending_question"),
            query=str(data.get("query", "")),
            diagnostics=[str(d) for d in data.get("diagnostics", [])],
        )


@dataclass
class Terminal:
    """Returned by step() once the last question has been answered."""
    answers: list[str]
    steps: int


@dataclass
class TranscriptStep:
    observation: Observation
    policy_text: str
    actions: ActionSequence
    diagnostics: list[str]
    answer: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "step": self.observation.step,
            "observation": self.observation.to_dict(),
            "policy_text": self.policy_text,
            "actions": [action_to_dict(a) for a in self.actions.actions],
            "diagnostics": list(self.diagnostics),
        }
        if self.answer is not None:
            out["answer"] = self.answer
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TranscriptStep":
        answer = data.get("answer")
        return cls(
            observation=Observation.from_dict(data["observation"]),
            policy_text=str(data["policy_text"]),
            actions=ActionSequence(
                actions=[action_from_dict(a) for a in data.get("actions", [])],
                final_answer=answer,
            ),
            diagnostics=[str(d) for d in data.get("diagnostics", [])],
            answer=answer,
        )


@dataclass
class EpisodeState:
    task: TaskInstance
    config: EpisodeConfig
    provider: EmbeddingProvider
    counter: TokenCounter
    memory: MemoryState
    chunks: list[str]
    cursor: int = 0                # chunks consumed
    question_cursor: int = 0       # questions answered
    phase: Phase = Phase.STREAMING
    pending_read_queries: list[str] = field(default_factory=list)
    transcript: list[TranscriptStep] = field(default_factory=list)
    answers: list[str] = field(default_factory=list)
    current: Optional[Observation] = None

    @property
    def schema(self) -> SchemaVariant:
        return get_schema(self.config.schema_kind)

    @property
    def steps_taken(self) -> int:
        return len(self.transcript)

    @property
    def total_steps(self) -> int:
        return len(self.chunks) + len(self.task.questions)


def reset(
    task: TaskInstance,
    config: EpisodeConfig,
    provider: Optional[EmbeddingProvider] = None,
    counter: Optional[TokenCounter] = None,
) -> tuple[EpisodeState, Observation]:
    """Fresh memory, cursor at chunk 0, nothing retrieved yet."""
    counter = counter or WhitespaceTokenCounter(config.tokens_per_word)
    state = EpisodeState(
        task=task,
        config=config,
        provider=provider or HashEmbeddingProvider(),
        counter=counter,
        memory=MemoryState(),
        chunks=chunk_stream(task.document_texts, config, counter),
    )
    state.current = Observation(step=0, scratchpad="", env_chunk=state.chunks[0])
    return state, state.current


def _next_observation(state: EpisodeState, retrieved: list[tuple[int, str]], diagnostics: list[str]) -> Observation:
    obs = Observation(
        step=state.steps_taken,
        scratchpad=state.memory.scratchpad,
        retrieved=retrieved,
        query="\n".join(state.pending_read_queries),
        diagnostics=diagnostics[: state.config.max_parse_diagnostics_shown],
    )
    if state.phase is Phase.STREAMING:
        obs.env_chunk = state.chunks[state.cursor]
    else:
        obs.pending_question = state.task.questions[state.question_cursor]
    return obs


def step(state: EpisodeState, policy_text: str) -> tuple[EpisodeState, Union[Observation, Terminal]]:
    """Advance one step with the policy's raw text.

    Raises EpisodeDone if the episode already ended.
    """
    if state.phase is Phase.DONE or state.current is None:
        raise EpisodeDone(state.task.task_id)

    obs = state.current
    schema = state.schema
    seq = parse(policy_text, schema)
    state.memory.step = obs.step

    diagnostics = [str(d) for d in seq.diagnostics]
    disabled = state.config.disabled_actions
    if disabled:
        kept = []
        for action in seq.actions:
            if action.kind in disabled:
                diagnostics.append(f"Disabled: <{schema.tag(action.kind)}> is not available in this run")
            else:
                kept.append(action)
        seq = ActionSequence(kept, seq.final_answer, seq.diagnostics, seq.free_text)

    report = apply_sequence(state.memory, seq)
    diagnostics.extend(report.diagnostics)

    answer: Optional[str] = None
    if obs.is_answer_turn:
        answer = seq.final_answer if seq.final_answer is not None else seq.free_text
        state.answers.append(answer)
        state.question_cursor += 1
    else:
        state.cursor += 1

    state.transcript.append(TranscriptStep(obs, policy_text, seq, diagnostics, answer))

    if schema.kind is SchemaKind.PROMPT:
        if report.pending_reads:
            state.pending_read_queries = report.pending_reads
    else:
        state.pending_read_queries = report.pending_reads

    # Evaluated now, against end-of-step memory; shown one step later.
    hits = retrieve_many(state.memory, state.provider, state.pending_read_queries, state.config.retrieve_k)
    retrieved = [(entry_id, state.memory.entries[entry_id].content) for entry_id, _ in hits]

    if state.phase is Phase.STREAMING and state.cursor == len(state.chunks):
        state.phase = Phase.ANSWERING
    if state.phase is Phase.ANSWERING and state.question_cursor == len(state.task.questions):
        state.phase = Phase.DONE
        state.current = None
        logger.debug("Episode %s done after %d steps", state.task.task_id, state.steps_taken)
        return state, Terminal(answers=list(state.answers), steps=state.steps_taken)

    state.current = _next_observation(state, retrieved, diagnostics)
    return state, state.current
