"""Shared builders for small, hand-checkable tasks."""
import pytest

from atommem.config import EpisodeConfig
from atommem.tasks.schema import TaskDocument, TaskInstance


def make_task(
    documents: list[str],
    questions: list[str],
    gold: list[list[str]],
    relevant: dict[int, int] | None = None,
    task_id: str = "toy-0000",
    seed: int = 0,
) -> TaskInstance:
    """Task with documents in the given order; *relevant* maps doc index -> question index."""
    relevant = relevant or {}
    docs = [
        TaskDocument(text=text, relevant=i in relevant, q=relevant.get(i))
        for i, text in enumerate(documents)
    ]
    return TaskInstance(
        task_id=task_id,
        mode="niah" if len(questions) == 1 else "multiq",
        questions=questions,
        gold=gold,
        documents=docs,
        seed=seed,
        total_docs=len(docs),
    )


@pytest.fixture
def word_config() -> EpisodeConfig:
    """One token per word, so chunk sizes are exact word counts."""
    return EpisodeConfig(chunk_size_tokens=12, tokens_per_word=1.0)


@pytest.fixture
def two_chunk_task() -> TaskInstance:
    # Each document is a two-word marker + 5 words; a 12-token budget gives 2 chunks.
    return make_task(
        documents=[
            "Alpha owns the red kite.",
            "Bravo keeps seven blue marbles.",
            "Charlie painted the barn green.",
        ],
        questions=["Who owns the red kite?", "What color is the barn?", "How many marbles?"],
        gold=[["Alpha"], ["green"], ["seven"]],
        relevant={0: 0, 2: 1, 1: 2},
    )
