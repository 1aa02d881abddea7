"""Document stream -> token-budgeted chunks, with optional overlap.

The stream is a list of *units*: indivisible pieces whose concatenation is
exactly the stream text. A TokenCounter gives each unit an integer size and
maps a summed size onto tokens, so ``count`` of any chunk equals the tokens of
the units it was built from. Each document is introduced by a
``Document {i}:`` marker line that is a single unit, so no window can cut a
marker in half.

Windows are packed greedily up to ``chunk_size_tokens``; the next window
starts once ``chunk_size_tokens - chunk_overlap_tokens`` tokens have been
consumed. With one-token units, C=4 and overlap 1, ten units give windows
starting at 0, 3, 6, 9. A single unit larger than the budget gets a window of
its own.
"""
from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import accumulate

from atommem.config import EpisodeConfig
from atommem.errors import EmptyCorpus

_WORD_UNIT_RE = re.compile(r"\S+\s*")
_LEADING_WS_RE = re.compile(r"^\s+")


class TokenCounter(ABC):
    """Maps text onto sized units and summed sizes onto token counts."""

    @abstractmethod
    def split(self, text: str) -> list[str]:
        """Units whose concatenation equals *text*."""

    @abstractmethod
    def size(self, unit: str) -> int:
        """Additive size of one unit."""

    @abstractmethod
    def tokens(self, size: int) -> int:
        """Token count of a run of units with total *size*; non-decreasing."""

    def count(self, text: str) -> int:
        return self.tokens(sum(self.size(u) for u in self.split(text)))


class WhitespaceTokenCounter(TokenCounter):
    """Whitespace-delimited words scaled by a tokens-per-word ratio (default 1.3)."""

    def __init__(self, tokens_per_word: float = 1.3) -> None:
        if tokens_per_word <= 0:
            raise ValueError(f"tokens_per_word must be > 0 (got {tokens_per_word})")
        self.tokens_per_word = tokens_per_word

    def split(self, text: str) -> list[str]:
        units = _WORD_UNIT_RE.findall(text)
        lead = _LEADING_WS_RE.match(text)
        if lead:
            if units:
                units[0] = lead.group(0) + units[0]
            else:
                units = [lead.group(0)]
        return units

    def size(self, unit: str) -> int:
        return len(unit.split())

    def tokens(self, size: int) -> int:
        return math.ceil(size * self.tokens_per_word)

    def count(self, text: str) -> int:
        return self.tokens(len(text.split()))


def document_marker(ordinal: int) -> str:
    return f"Document {ordinal}:\n"


def stream_units(documents: list[str], counter: TokenCounter) -> list[str]:
    """Marker + body units for every non-blank document, numbered by position (1-based)."""
    units: list[str] = []
    for i, doc in enumerate(documents, start=1):
        body = doc.strip()
        if not body:
            continue
        units.append(document_marker(i))
        units.extend(counter.split(body + "\n\n"))
    if not units:
        raise EmptyCorpus()
    return units


def token_windows(
    sizes: list[int],
    counter: TokenCounter,
    budget: int,
    overlap: int = 0,
) -> list[tuple[int, int]]:
    """Half-open (start, end) unit windows covering range(len(sizes))."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1 (got {budget})")
    stride = budget - min(max(overlap, 0), budget - 1)
    prefix = list(accumulate(sizes, initial=0))
    n = len(sizes)
    windows: list[tuple[int, int]] = []
    start = 0
    while start < n:
        end = start + 1
        while end < n and counter.tokens(prefix[end + 1] - prefix[start]) <= budget:
            end += 1
        windows.append((start, end))
        nxt = start + 1
        while nxt < end and counter.tokens(prefix[nxt] - prefix[start]) < stride:
            nxt += 1
        start = nxt
    return windows


@dataclass
class ChunkPlan:
    units: list[str]
    windows: list[tuple[int, int]]

    @property
    def chunks(self) -> list[str]:
        return ["".join(self.units[s:e]) for s, e in self.windows]

    @property
    def stream(self) -> str:
        return "".join(self.units)

    def reconstruct(self) -> str:
        """Concatenate chunks dropping each window's overlap with its predecessor."""
        parts: list[str] = []
        covered = 0
        for s, e in self.windows:
            start = max(s, covered)
            parts.append("".join(self.units[start:e]))
            covered = max(covered, e)
        return "".join(parts)


def plan_chunks(documents: list[str], config: EpisodeConfig, counter: TokenCounter) -> ChunkPlan:
    units = stream_units(documents, counter)
    windows = token_windows(
        [counter.size(u) for u in units], counter, config.chunk_size_tokens, config.chunk_overlap_tokens
    )
    return ChunkPlan(units=units, windows=windows)


def chunk_stream(documents: list[str], config: EpisodeConfig, counter: TokenCounter) -> list[str]:
    """Split the concatenated, marker-delimited document stream into chunks.

    Raises EmptyCorpus when no document has any non-whitespace text.
    """
    return plan_chunks(documents, config, counter).chunks
