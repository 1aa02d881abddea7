"""Rule-based baseline policy.

Streaming turns: one Create per sentence of the chunk that mentions any
question keyword, plus a Read with the question text.
Answer turns: take the top-ranked retrieved entry, pick its sentence sharing
the most keywords with the pending question and answer with that sentence's
longest run of words that are neither question words nor stopwords. Also
Read the next question so its entries arrive in time for the next answer
turn.
"""
from __future__ import annotations

import re
from typing import TYPE_CHECKING

from atommem.config import EpisodeConfig
from atommem.protocol.actions import ActionSequence, Create, MemoryAction, Read
from atommem.protocol.parser import SchemaVariant, get_schema, render
from atommem.policy.base import Policy

if TYPE_CHECKING:
    from atommem.environment.episode import Observation
    from atommem.tasks.schema import TaskInstance

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+|\n+")
_WORD_RE = re.compile(r"[\w'-]+")

STOPWORDS: frozenset[str] = frozenset({
    "a", "an", "the", "and", "or", "of", "in", "on", "at", "to", "for", "by", "with", "from",
    "is", "are", "was", "were", "be", "been", "being", "did", "does", "do", "has", "have", "had",
    "what", "which", "who", "whom", "whose", "when", "where", "why", "how",
    "that", "this", "these", "those", "it", "its", "as", "into", "than", "then",
    "there", "their", "they", "he", "she", "his", "her", "him", "i", "you", "we",
    "not", "no", "but", "if", "so", "such", "both", "same", "also", "can", "could",
    "would", "should", "will", "may", "might", "one", "many", "much", "more", "most",
})


def keywords(text: str) -> set[str]:
    return {w for w in (t.lower() for t in _WORD_RE.findall(text)) if w not in STOPWORDS}


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]


def best_span(sentence: str, question: str) -> str:
    """Longest run of consecutive words that are not in the question and not stopwords."""
    q_words = {t.lower() for t in _WORD_RE.findall(question)}
    best: list[str] = []
    run: list[str] = []
    for token in _WORD_RE.findall(sentence):
        low = token.lower()
        if low in q_words or low in STOPWORDS:
            run = []
            continue
        run.append(token)
        if len(run) > len(best):
            best = list(run)
    return " ".join(best)


class HeuristicPolicy(Policy):
    name = "heuristic"

    def __init__(self, schema: SchemaVariant) -> None:
        self.schema = schema

    def _streaming(self, task: "TaskInstance", observation: "Observation") -> ActionSequence:
        question_text = " ".join(task.questions)
        kw = keywords(question_text)
        actions: list[MemoryAction] = [
            Create(sentence)
            for sentence in split_sentences(observation.env_chunk or "")
            if keywords(sentence) & kw
        ]
        actions.append(Read(question_text))
        return ActionSequence(actions=actions)

    def _answering(self, task: "TaskInstance", observation: "Observation") -> ActionSequence:
        question = observation.pending_question or ""
        kw = keywords(question)
        answer = ""
        # Retrieved entries arrive ranked; answer from the most similar one.
        if observation.retrieved:
            _, best = observation.retrieved[0]
            scored = [(len(keywords(s) & kw), s) for s in split_sentences(best)]
            top = max(scored, key=lambda pair: pair[0])[1] if scored else best
            answer = best_span(top, question)

        actions: list[MemoryAction] = []
        if question in task.questions:
            nxt = task.questions.index(question) + 1
            if nxt < len(task.questions):
                actions.append(Read(task.questions[nxt]))
        return ActionSequence(actions=actions, final_answer=answer)

    def respond(self, task: "TaskInstance", observation: "Observation", prompt: str) -> str:
        if observation.is_answer_turn:
            seq = self._answering(task, observation)
        else:
            seq = self._streaming(task, observation)
        return render(seq, self.schema)


def heuristic_policy(config: EpisodeConfig) -> HeuristicPolicy:
    return HeuristicPolicy(get_schema(config.schema_kind))
