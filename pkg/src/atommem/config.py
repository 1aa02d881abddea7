"""Configuration models and TOML loader.

Config file layout (all sections and keys optional)::

    [episode]
    chunk_size_tokens = 4096
    chunk_overlap_tokens = 0
    retrieve_k = 6
    schema = "table"                 # or "prompt"
    tokens_per_word = 1.3
    max_parse_diagnostics_shown = 5
    disabled_actions = []            # ablations, e.g. ["update"]

    [embedding]
    kind = "hash"                    # "hash" | "remote" | "sentence-transformers"
    dimension = 256
    ngram = 3
    endpoint = "http://127.0.0.1:8081/embed"
    model_name = "Qwen/Qwen3-Embedding-0.6B"

    [policy]
    endpoint = "http://127.0.0.1:8000/v1/chat/completions"
    model = "Qwen3-8B"
    temperature = 0.7
    top_p = 1.0
    max_in_flight = 8

The API key is never required in the file: ATOMMEM_API_KEY overrides it.
The default config path can be set with ATOMMEM_CONFIG.
"""
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_serializer, model_validator

from atommem.errors import ConfigError
from atommem.protocol.actions import ActionKind
from atommem.protocol.parser import SchemaKind

API_KEY_ENV = "ATOMMEM_API_KEY"
CONFIG_PATH_ENV = "ATOMMEM_CONFIG"


class EpisodeConfig(BaseModel):
    """Environment constants: chunk budget C, retrieval size K, tag schema.

    ``schema`` is exposed as ``schema_kind`` in Python because BaseModel
    reserves the name.
    """
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    chunk_size_tokens: int = Field(default=4096, ge=1)
    chunk_overlap_tokens: int = Field(default=0, ge=0)
    retrieve_k: int = Field(default=6, ge=1)
    schema_kind: SchemaKind = Field(default=SchemaKind.TABLE, alias="schema")
    tokens_per_word: float = Field(default=1.3, gt=0.0)
    max_parse_diagnostics_shown: int = Field(default=5, ge=0)
    disabled_actions: frozenset[ActionKind] = frozenset()

    @field_serializer("disabled_actions")
    def _sorted_actions(self, value: frozenset[ActionKind]) -> list[str]:
        # Sorted so manifests and run ids do not depend on hash order.
        return sorted(a.value for a in value)

    @model_validator(mode="after")
    def overlap_below_chunk(self) -> "EpisodeConfig":
        if self.chunk_overlap_tokens >= self.chunk_size_tokens:
            raise ValueError(
                f"chunk_overlap_tokens ({self.chunk_overlap_tokens}) must be < "
                f"chunk_size_tokens ({self.chunk_size_tokens})"
            )
        return self


class EmbeddingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["hash", "remote", "sentence-transformers"] = "hash"
    dimension: int = Field(default=256, ge=1)
    ngram: int = Field(default=3, ge=1)
    endpoint: Optional[str] = None
    model_name: str = "Qwen/Qwen3-Embedding-0.6B"
    timeout_s: float = Field(default=30.0, gt=0.0)
    max_retries: int = Field(default=3, ge=0)
    backoff_factor_s: float = Field(default=0.5, ge=0.0)
    api_key: Optional[str] = None

    @model_validator(mode="after")
    def remote_needs_endpoint(self) -> "EmbeddingConfig":
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("embedding.endpoint is required when embedding.kind = 'remote'")
        return self


class PolicyConfig(BaseModel):
    """Remote chat-completion policy settings. Sampling defaults: temperature 0.7, top-p 1.0."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    endpoint: str = "http://127.0.0.1:8000/v1/chat/completions"
    model: str = "Qwen3-8B"
    temperature: float = Field(default=0.7, ge=0.0)
    top_p: float = Field(default=1.0, gt=0.0, le=1.0)
    max_tokens: int = Field(default=2048, ge=1)
    max_in_flight: int = Field(default=8, ge=1)
    connect_timeout_s: float = Field(default=10.0, gt=0.0)
    read_timeout_s: float = Field(default=120.0, gt=0.0)
    max_retries: int = Field(default=3, ge=0)
    backoff_factor_s: float = Field(default=1.0, ge=0.0)
    backoff_max_s: float = Field(default=30.0, ge=0.0)
    api_key: Optional[str] = None


class AtomMemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    episode: EpisodeConfig = EpisodeConfig()
    embedding: EmbeddingConfig = EmbeddingConfig()
    policy: PolicyConfig = PolicyConfig()


def _apply_env(config: AtomMemConfig) -> AtomMemConfig:
    api_key = os.environ.get(API_KEY_ENV)
    if not api_key:
        return config
    return config.model_copy(update={
        "policy": config.policy.model_copy(update={"api_key": api_key}),
        "embedding": config.embedding.model_copy(update={"api_key": api_key}),
    })


def load_config(path: Optional[Path] = None) -> AtomMemConfig:
    """Load and validate a TOML config. Raises ConfigError on failure.

    With no path, ATOMMEM_CONFIG is consulted; with neither, defaults are used.
    """
    if path is None:
        env_path = os.environ.get(CONFIG_PATH_ENV)
        if not env_path:
            return _apply_env(AtomMemConfig())
        path = Path(env_path).expanduser()

    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
        config = AtomMemConfig.model_validate(data)
    except ValidationError as e:
        field_errors = "; ".join(
            f"{' -> '.join(str(x) for x in err['loc'])}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(path, f"Schema validation failed: {field_errors}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(path, f"Invalid TOML: {e}") from e
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(path, str(e)) from e
    return _apply_env(config)
