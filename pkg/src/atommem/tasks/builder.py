"""Needle-in-a-haystack and multi-question task construction.

All randomness comes from ``numpy.random.default_rng`` seeded with named
sub-seeds of one integer seed, so (samples, seed, sizes) fully determine an
instance. No global RNG state is touched.
"""
import hashlib
import logging
from typing import Optional, Sequence

import numpy as np

from atommem.errors import InvalidQuestionCount, SplitLeak, TooFewDocs, TooFewSamples
from atommem.tasks.schema import SourceQA, TaskDocument, TaskInstance

logger = logging.getLogger(__name__)

MAX_QUESTIONS = 10


def sub_seed(seed: int, name: str, index: int = 0) -> int:
    """Stable 63-bit seed for the random stream *name* #index under *seed*."""
    digest = hashlib.sha256(f"{seed}:{name}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def _rng(seed: int, name: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(sub_seed(seed, name, index))


def build_distractor_pool(samples: Sequence[SourceQA]) -> list[str]:
    """Union of the non-gold paragraphs of *samples*, first occurrence order."""
    return list(dict.fromkeys(doc for s in samples for doc in s.distractor_docs))


def _draw_distractors(
    pool: Sequence[str],
    exclude: set[str],
    n: int,
    rng: np.random.Generator,
    total_docs: int,
) -> tuple[list[str], bool]:
    """n distractors not equal to any excluded text; the flag is True when drawn with replacement."""
    if n == 0:
        return [], False
    candidates = list(dict.fromkeys(d for d in pool if d not in exclude))
    if not candidates:
        raise TooFewDocs(total_docs, f"{n} distractors needed but the distractor pool is empty")
    if n <= len(candidates):
        idx = rng.choice(len(candidates), size=n, replace=False)
        return [candidates[i] for i in idx], False
    logger.warning(
        "Distractor pool has %d documents, %d needed; sampling with replacement",
        len(candidates), n,
    )
    idx = rng.choice(len(candidates), size=n, replace=True)
    return [candidates[i] for i in idx], True


def _assemble(
    chosen: list[SourceQA],
    pool: Sequence[str],
    total_docs: int,
    seed: int,
    mode: str,
    task_id: str,
) -> TaskInstance:
    relevant = [
        TaskDocument(text=text, relevant=True, q=qi)
        for qi, sample in enumerate(chosen)
        for text in sample.relevant_docs
    ]
    if total_docs < len(relevant):
        raise TooFewDocs(total_docs, f"the chosen questions have {len(relevant)} relevant documents")

    exclude = {d.text for d in relevant}
    texts, replaced = _draw_distractors(
        pool, exclude, total_docs - len(relevant), _rng(seed, "distractors"), total_docs
    )
    documents = relevant + [TaskDocument(text=t, relevant=False) for t in texts]
    # Joint shuffle, blind to which question a document belongs to.
    order = _rng(seed, "shuffle").permutation(len(documents))
    return TaskInstance(
        task_id=task_id,
        mode=mode,
        questions=[s.question for s in chosen],
        gold=[list(s.gold_answers) for s in chosen],
        documents=[documents[i] for i in order],
        seed=seed,
        total_docs=total_docs,
        source_ids=[s.source_id for s in chosen],
        sampled_with_replacement=replaced,
    )


def build_niah(
    sample: SourceQA,
    distractor_pool: Sequence[str],
    total_docs: int,
    seed: int,
    task_id: Optional[str] = None,
) -> TaskInstance:
    """One question's relevant documents hidden among distractors, shuffled."""
    return _assemble([sample], distractor_pool, total_docs, seed, "niah", task_id or f"niah-{seed}")


def build_multiq(
    samples: Sequence[SourceQA],
    num_questions: int,
    total_docs: int,
    seed: int,
    distractor_pool: Optional[Sequence[str]] = None,
    task_id: Optional[str] = None,
) -> TaskInstance:
    """num_questions samples, their relevant documents pooled with distractors and shuffled.

    Without an explicit pool, distractors come from the non-gold paragraphs of
    all *samples*.
    """
    if not 1 <= num_questions <= MAX_QUESTIONS:
        raise InvalidQuestionCount(num_questions)
    if len(samples) < num_questions:
        raise TooFewSamples(len(samples), num_questions)
    picks = _rng(seed, "samples").choice(len(samples), size=num_questions, replace=False)
    chosen = [samples[i] for i in picks]
    pool = distractor_pool if distractor_pool is not None else build_distractor_pool(samples)
    return _assemble(chosen, pool, total_docs, seed, "multiq", task_id or f"multiq-{seed}")


def sample_question_count(seed: int, index: int, max_questions: int = MAX_QUESTIONS) -> int:
    """Uniform draw from 1..max_questions."""
    if not 1 <= max_questions <= MAX_QUESTIONS:
        raise InvalidQuestionCount(max_questions)
    return int(_rng(seed, "num_questions", index).integers(1, max_questions + 1))


def build_tasks(
    samples: Sequence[SourceQA],
    mode: str,
    total_docs: int,
    n_instances: int,
    seed: int,
    max_questions: int = MAX_QUESTIONS,
) -> list[TaskInstance]:
    """n_instances tasks from one seed; instance i uses sub-seed ("instance", i)."""
    if not samples:
        raise TooFewSamples(0, 1)
    pool = build_distractor_pool(samples)
    tasks: list[TaskInstance] = []
    for i in range(n_instances):
        inst_seed = sub_seed(seed, "instance", i)
        task_id = f"{mode}-{i:04d}"
        if mode == "niah":
            pick = int(_rng(seed, "niah_sample", i).integers(len(samples)))
            tasks.append(build_niah(samples[pick], pool, total_docs, inst_seed, task_id=task_id))
        elif mode == "multiq":
            q = sample_question_count(seed, i, max_questions)
            tasks.append(build_multiq(samples, q, total_docs, inst_seed, distractor_pool=pool, task_id=task_id))
        else:
            raise ValueError(f"unknown task mode {mode!r} (expected 'niah' or 'multiq')")
    return tasks


def split_sources(
    samples: Sequence[SourceQA],
    eval_fraction: float,
    seed: int,
) -> tuple[list[SourceQA], list[SourceQA]]:
    """Partition samples into (train, eval) by source id so no id lands in both."""
    if not 0.0 <= eval_fraction <= 1.0:
        raise ValueError(f"eval_fraction must be within [0, 1] (got {eval_fraction})")
    ids = list(dict.fromkeys(s.source_id for s in samples))
    order = _rng(seed, "split").permutation(len(ids))
    n_eval = round(len(ids) * eval_fraction)
    eval_ids = {ids[i] for i in order[:n_eval]}
    train = [s for s in samples if s.source_id not in eval_ids]
    held = [s for s in samples if s.source_id in eval_ids]
    return train, held


def assert_disjoint(*splits: Sequence[SourceQA]) -> None:
    """Raise SplitLeak if any source id appears in more than one split."""
    owner: dict[str, int] = {}
    shared: set[str] = set()
    for i, split in enumerate(splits):
        for s in split:
            if owner.setdefault(s.source_id, i) != i:
                shared.add(s.source_id)
    if shared:
        raise SplitLeak(sorted(shared))
