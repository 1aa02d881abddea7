"""Retrieval: embedding providers and exact top-K search over memory entries."""
from atommem.retrieval.embedding import (
    EmbeddingProvider,
    HashEmbeddingProvider,
    RemoteEmbeddingProvider,
    SentenceTransformerProvider,
    embed,
    make_provider,
)
from atommem.retrieval.index import DEFAULT_K, fill_embeddings, retrieve_many, top_k

__all__ = [
    "EmbeddingProvider",
    "HashEmbeddingProvider",
    "RemoteEmbeddingProvider",
    "SentenceTransformerProvider",
    "embed",
    "make_provider",
    "DEFAULT_K",
    "fill_embeddings",
    "retrieve_many",
    "top_k",
]
