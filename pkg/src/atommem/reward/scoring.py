"""Exact-match reward with the standard extractive-QA answer normalization."""
import re
import string
from collections import Counter
from typing import Sequence

import numpy as np

from atommem.errors import LengthMismatch

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT = frozenset(string.punctuation)


def normalize_answer(text: str) -> str:
    """Lower-case, drop punctuation and the articles a/an/the, collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def em_reward(pred: str, golds: Sequence[str]) -> int:
    """1 iff the normalized prediction equals some normalized gold answer."""
    if not golds:
        raise ValueError("em_reward needs at least one gold answer")
    p = normalize_answer(pred)
    return int(any(p == normalize_answer(g) for g in golds))


def f1_score(pred: str, golds: Sequence[str]) -> float:
    """Best token-overlap F1 against any gold answer. Reported only, never a reward."""
    if not golds:
        raise ValueError("f1_score needs at least one gold answer")
    pred_tokens = normalize_answer(pred).split()
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold).split()
        common = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
        if common == 0:
            continue
        precision = common / len(pred_tokens)
        recall = common / len(gold_tokens)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def per_question_em(preds: Sequence[str], golds_per_question: Sequence[Sequence[str]]) -> list[int]:
    if len(preds) != len(golds_per_question):
        raise LengthMismatch("answers vs questions", len(preds), len(golds_per_question))
    return [em_reward(p, g) for p, g in zip(preds, golds_per_question)]


def task_reward(preds: Sequence[str], golds_per_question: Sequence[Sequence[str]]) -> float:
    """Mean per-question EM over all questions of a task, in [0, 1]."""
    scores = per_question_em(preds, golds_per_question)
    if not scores:
        return 0.0
    return float(np.mean(scores))
