"""Exact top-K cosine retrieval over memory entries.

Brute-force exact scan. The scratchpad is not an entry, so it
can never be retrieved.
"""
from __future__ import annotations

import threading

import numpy as np

from atommem.errors import EmptyQuery
from atommem.memory.state import MemoryEntry, MemoryState
from atommem.retrieval.embedding import EmbeddingProvider

DEFAULT_K = 6

# Guards lazy embedding fills.
_CACHE_LOCK: threading.Lock = threading.Lock()


def fill_embeddings(state: MemoryState, provider: EmbeddingProvider) -> list[MemoryEntry]:
    """Embed every entry whose cached vector is unset; returns a snapshot of all entries."""
    with _CACHE_LOCK:
        entries = list(state.entries.values())
        missing = [e for e in entries if e.embedding is None]
        if missing:
            vectors = provider.embed_batch([e.content for e in missing])
            for entry, vec in zip(missing, vectors):
                entry.embedding = vec
        return entries


def top_k(
    state: MemoryState,
    provider: EmbeddingProvider,
    query: str,
    k: int = DEFAULT_K,
) -> list[tuple[int, float]]:
    """Up to k (id, similarity) pairs by descending cosine, ties by ascending id."""
    if not query.strip():
        raise EmptyQuery()
    if k < 1:
        raise ValueError(f"k must be >= 1 (got {k})")
    if not state.entries:
        return []

    q = provider.embed(query)
    entries = fill_embeddings(state, provider)
    ids = np.array([e.id for e in entries], dtype=np.int64)
    # Per-entry dot: scores must not depend on stacking order.
    sims = np.array([float(np.dot(e.embedding, q)) for e in entries], dtype=np.float64)
    order = np.lexsort((ids, -sims))[:k]
    return [(int(ids[i]), float(sims[i])) for i in order]


def retrieve_many(
    state: MemoryState,
    provider: EmbeddingProvider,
    queries: list[str],
    k: int = DEFAULT_K,
) -> list[tuple[int, float]]:
    """Results of several queries concatenated in query order, deduplicated by id, cut to k."""
    merged: list[tuple[int, float]] = []
    seen: set[int] = set()
    for query in queries:
        for entry_id, sim in top_k(state, provider, query, k):
            if entry_id in seen:
                continue
            seen.add(entry_id)
            merged.append((entry_id, sim))
            if len(merged) == k:
                return merged
    return merged
