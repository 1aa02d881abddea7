"""Embedding providers behind the Read operation.

Three kinds:

  hash                   character n-gram counts hashed into a fixed number of
                         buckets, L2-normalized. Pure function of the text, no
                         network, the default for tests and offline runs.
  remote                 JSON over HTTP: {"input": [str]} -> {"embeddings": [[float]]}
  sentence-transformers  local model (default Qwen/Qwen3-Embedding-0.6B), CPU,
                         installed with the ``local-embeddings`` extra.

Every provider returns unit-norm float64 vectors of ``provider.dimension``.
"""
from __future__ import annotations

import hashlib
import logging
import re
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import TYPE_CHECKING, Optional

import backoff
import numpy as np
import requests

from atommem.config import EmbeddingConfig
from atommem.errors import EmptyText, ModelUnavailable, ProviderUnavailable

if TYPE_CHECKING:
    from sentence_transformers import SentenceTransformer

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+")


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EmptyText()
    return vec / norm


class EmbeddingProvider(ABC):
    kind: str = "abstract"
    dimension: int

    @abstractmethod
    def embed_batch(self, texts: list[str]) -> np.ndarray:
        """Embed non-empty texts; returns an array of shape (len(texts), dimension)."""

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise EmptyText()
        return self.embed_batch([text])[0]


class HashEmbeddingProvider(EmbeddingProvider):
    """Hashed character n-gram counts.

    Text is lower-cased and split into words; each word is wrapped in ``#``
    boundary markers and cut into n-grams, so "abc" yields ``#ab``, ``abc``,
    ``bc#``. Repeating the same words only scales the count vector, which is
    why "abc" and "abc abc" have cosine similarity 1.0.
    """

    kind = "hash"

    def __init__(self, dimension: int = 256, ngram: int = 3) -> None:
        if dimension < 1 or ngram < 1:
            raise ValueError(f"dimension and ngram must be >= 1 (got {dimension}, {ngram})")
        self.dimension = dimension
        self.ngram = ngram

    def _grams(self, text: str) -> list[str]:
        words = _WORD_RE.findall(text.lower()) or [text.strip().lower()]
        grams: list[str] = []
        n = self.ngram
        for word in words:
            padded = f"#{word}#"
            if len(padded) <= n:
                grams.append(padded)
                continue
            grams.extend(padded[i:i + n] for i in range(len(padded) - n + 1))
        return grams

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dimension

    def embed_one(self, text: str) -> np.ndarray:
        if not text.strip():
            raise EmptyText()
        buckets = [self._bucket(g) for g in self._grams(text)]
        counts = np.bincount(buckets, minlength=self.dimension).astype(np.float64)
        return _normalize(counts)

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.stack([self.embed_one(t) for t in texts])


def _is_permanent_http_error(exc: Exception) -> bool:
    """4xx responses other than 429, and non-JSON bodies, are not worth retrying."""
    if isinstance(exc, requests.exceptions.JSONDecodeError):
        return True
    if isinstance(exc, requests.HTTPError) and exc.response is not None:
        status = exc.response.status_code
        return 400 <= status < 500 and status != 429
    return False


def _log_retry(details: dict) -> None:
    logger.warning(
        "Embedding request failed (%s); retry %d in %.1fs",
        details.get("exception"), details["tries"], details.get("wait") or 0.0,
    )


class RemoteEmbeddingProvider(EmbeddingProvider):
    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        dimension: int,
        timeout_s: float = 30.0,
        max_retries: int = 3,
        backoff_factor_s: float = 0.5,
        api_key: Optional[str] = None,
    ) -> None:
        self.endpoint = endpoint
        self.dimension = dimension
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backoff_factor_s = backoff_factor_s
        self.api_key = api_key

    def _post_once(self, texts: list[str]) -> dict:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        r = requests.post(self.endpoint, json={"input": texts}, headers=headers, timeout=self.timeout_s)
        r.raise_for_status()
        return r.json()

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        for text in texts:
            if not text.strip():
                raise EmptyText()

        post = backoff.on_exception(
            backoff.expo,
            requests.RequestException,
            max_tries=self.max_retries + 1,
            factor=self.backoff_factor_s,
            jitter=None,
            giveup=_is_permanent_http_error,
            on_backoff=_log_retry,
            logger=None,
        )(self._post_once)

        try:
            body = post(texts)
        except requests.RequestException as e:
            raise ProviderUnavailable(self.endpoint, str(e)) from e

        try:
            matrix = np.asarray(body["embeddings"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise ProviderUnavailable(self.endpoint, f"malformed response body: {e!r}") from e
        if matrix.shape != (len(texts), self.dimension):
            raise ProviderUnavailable(
                self.endpoint,
                f"expected embeddings of shape ({len(texts)}, {self.dimension}), got {matrix.shape}",
            )
        return np.stack([_normalize(row) for row in matrix])


@lru_cache(maxsize=2)
def _load_sentence_model(model_name: str) -> "SentenceTransformer":
    """Load a sentence-transformers model once per process, CPU only."""
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as e:
        raise ModelUnavailable(model_name, "sentence-transformers is not installed") from e
    try:
        return SentenceTransformer(model_name, device="cpu")
    except (OSError, ValueError) as e:
        raise ModelUnavailable(model_name, f"{type(e).__name__}: {e}") from e


class SentenceTransformerProvider(EmbeddingProvider):
    kind = "sentence-transformers"

    def __init__(self, model_name: str = "Qwen/Qwen3-Embedding-0.6B") -> None:
        self.model_name = model_name
        self._model = _load_sentence_model(model_name)
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        for text in texts:
            if not text.strip():
                raise EmptyText()
        # normalize_embeddings=True: cosine similarity becomes a dot product
        vecs = self._model.encode(texts, normalize_embeddings=True, convert_to_numpy=True)
        return np.asarray(vecs, dtype=np.float64)


def embed(provider: EmbeddingProvider, text: str) -> np.ndarray:
    """Unit-norm embedding of *text*. Raises EmptyText for blank input."""
    return provider.embed(text)


def make_provider(config: EmbeddingConfig) -> EmbeddingProvider:
    if config.kind == "remote":
        return RemoteEmbeddingProvider(
            endpoint=config.endpoint or "",
            dimension=config.dimension,
            timeout_s=config.timeout_s,
            max_retries=config.max_retries,
            backoff_factor_s=config.backoff_factor_s,
            api_key=config.api_key,
        )
    if config.kind == "sentence-transformers":
        return SentenceTransformerProvider(config.model_name)
    return HashEmbeddingProvider(dimension=config.dimension, ngram=config.ngram)
