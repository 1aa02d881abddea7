from pathlib import Path


class AtomMemError(Exception):
    """Base class for all atommem errors."""


# ---------------------------------------------------------------------------
# memory
# ---------------------------------------------------------------------------

class MemoryOpError(AtomMemError):
    """A memory operation was rejected. apply_sequence turns these into diagnostics."""

    code: str = "MemoryOpError"


class EmptyContent(MemoryOpError):
    code = "EmptyContent"

    def __init__(self, op: str) -> None:
        super().__init__(
            f"{op}: memory content is empty.\n"
            f"  Cause: content was blank after whitespace trimming.\n"
            f"  Check: Memory entries must carry text; use delete to remove an entry."
        )
        self.op = op


class UnknownId(MemoryOpError):
    code = "UnknownId"

    def __init__(self, op: str, entry_id: int) -> None:
        super().__init__(
            f"{op}: Memory {entry_id} does not exist.\n"
            f"  Cause: no entry with id {entry_id} is stored (never created, or already deleted).\n"
            f"  Check: Use an id shown in the retrieved memory list."
        )
        self.op = op
        self.entry_id = entry_id


# ---------------------------------------------------------------------------
# retrieval
# ---------------------------------------------------------------------------

class RetrievalError(AtomMemError):
    """Base class for embedding and top-k errors."""


class EmptyText(RetrievalError):
    def __init__(self) -> None:
        super().__init__(
            "Cannot embed empty text.\n"
            "  Cause: the input was blank after whitespace trimming."
        )


class EmptyQuery(RetrievalError):
    def __init__(self) -> None:
        super().__init__(
            "Cannot retrieve with an empty query.\n"
            "  Cause: the Read query was blank after whitespace trimming."
        )


class ProviderUnavailable(RetrievalError):
    def __init__(self, endpoint: str, detail: str) -> None:
        super().__init__(
            f"Embedding service at '{endpoint}' is unavailable.\n"
            f"  Cause: {detail}\n"
            f"  Check: Is the service running? Does it accept {{\"input\": [...]}} and return {{\"embeddings\": [...]}}?\n"
            f"  Tip: Use the deterministic hash embedder (embedding.kind = \"hash\") to run offline."
        )
        self.endpoint = endpoint
        self.detail = detail


class ModelUnavailable(RetrievalError):
    def __init__(self, model_name: str, detail: str) -> None:
        super().__init__(
            f"Cannot load embedding model '{model_name}'.\n"
            f"  Cause: {detail}\n"
            f"  Check: pip install 'atommem[local-embeddings]'\n"
            f"  Tip: Use the deterministic hash embedder (embedding.kind = \"hash\") to run without a model."
        )
        self.model_name = model_name
        self.detail = detail


# ---------------------------------------------------------------------------
# action protocol
# ---------------------------------------------------------------------------

class UnrenderableAction(AtomMemError):
    def __init__(self, action: object, detail: str) -> None:
        super().__init__(
            f"Cannot render memory action {action!r}.\n"
            f"  Cause: {detail}"
        )
        self.action = action
        self.detail = detail


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------

class EmptyCorpus(AtomMemError):
    def __init__(self) -> None:
        super().__init__(
            "Cannot chunk an empty document stream.\n"
            "  Cause: no document contained any non-whitespace text.\n"
            "  Check: Was the task file built from a non-empty source?"
        )


class EpisodeDone(AtomMemError):
    def __init__(self, task_id: str) -> None:
        super().__init__(
            f"Episode for task '{task_id}' is already done.\n"
            f"  Cause: step() was called after the last question was answered.\n"
            f"  Check: Call reset() to start a new episode."
        )
        self.task_id = task_id


class TranscriptError(AtomMemError):
    def __init__(self, path: Path, detail: str) -> None:
        super().__init__(
            f"Cannot load transcript '{path.name}'.\n"
            f"  Cause: {detail}\n"
            f"  Check: Was the file written by `atommem run`? Each line must be one JSON step record."
        )
        self.path = path
        self.detail = detail


# ---------------------------------------------------------------------------
# task builder
# ---------------------------------------------------------------------------

class TaskBuildError(AtomMemError):
    """Base class for ingestion and task construction errors."""


class UnreadableFile(TaskBuildError):
    def __init__(self, path: Path, detail: str) -> None:
        super().__init__(
            f"Cannot read source file '{path.name}'.\n"
            f"  Cause: {detail}\n"
            f"  Check: Does the file exist and is it readable text?\n"
            f"  Tip: Try re-saving the file as UTF-8 in a text editor."
        )
        self.path = path
        self.detail = detail


class SchemaMismatch(TaskBuildError):
    def __init__(self, path: Path, skipped: int) -> None:
        super().__init__(
            f"No usable rows in '{path.name}'.\n"
            f"  Cause: all {skipped} rows failed validation.\n"
            f"  Check: Rows must be normalized (question/answers/contexts), HotpotQA/2WikiMultiHopQA "
            f"(question/answer/context/supporting_facts) or MuSiQue (question/answer/paragraphs)."
        )
        self.path = path
        self.skipped = skipped


class TooFewDocs(TaskBuildError):
    def __init__(self, total_docs: int, detail: str) -> None:
        super().__init__(
            f"Cannot build a task with total_docs={total_docs}.\n"
            f"  Cause: {detail}"
        )
        self.total_docs = total_docs
        self.detail = detail


class TooFewSamples(TaskBuildError):
    def __init__(self, available: int, requested: int) -> None:
        super().__init__(
            f"Cannot draw {requested} questions from {available} source samples.\n"
            f"  Check: Lower the question count or ingest a larger source split."
        )
        self.available = available
        self.requested = requested


class InvalidQuestionCount(TaskBuildError):
    def __init__(self, num_questions: int) -> None:
        super().__init__(
            f"num_questions={num_questions} is outside the supported range 1..10."
        )
        self.num_questions = num_questions


class SplitLeak(TaskBuildError):
    def __init__(self, shared: list[str]) -> None:
        preview = ", ".join(shared[:5])
        super().__init__(
            f"{len(shared)} source ids appear in more than one split.\n"
            f"  Cause: e.g. {preview}\n"
            f"  Check: Build train and evaluation tasks from disjoint source splits."
        )
        self.shared = shared


class TaskFileError(TaskBuildError):
    def __init__(self, path: Path, detail: str) -> None:
        super().__init__(
            f"Cannot load task file '{path.name}'.\n"
            f"  Cause: {detail}\n"
            f"  Check: Was the file written by `atommem build`?"
        )
        self.path = path
        self.detail = detail


# ---------------------------------------------------------------------------
# reward / RL math
# ---------------------------------------------------------------------------

class LengthMismatch(AtomMemError):
    def __init__(self, what: str, left: int, right: int) -> None:
        super().__init__(
            f"Length mismatch for {what}: {left} != {right}."
        )
        self.what = what
        self.left = left
        self.right = right


class NonPositiveClip(AtomMemError):
    def __init__(self, clip_low: float, clip_high: float) -> None:
        super().__init__(
            f"Clip ranges must be positive (clip_low={clip_low}, clip_high={clip_high})."
        )
        self.clip_low = clip_low
        self.clip_high = clip_high


class BadGroupSize(AtomMemError):
    def __init__(self, count: int, group_size: int) -> None:
        super().__init__(
            f"{count} rewards cannot be split into groups of {group_size}.\n"
            f"  Check: The reward count must be a positive multiple of the rollout group size."
        )
        self.count = count
        self.group_size = group_size


# ---------------------------------------------------------------------------
# policy
# ---------------------------------------------------------------------------

class PolicyError(AtomMemError):
    """Base class for policy failures."""


class ScriptExhausted(PolicyError):
    def __init__(self, turn: int, length: int) -> None:
        super().__init__(
            f"Replay script exhausted at turn {turn} (script has {length} responses).\n"
            f"  Check: The script needs one response per chunk plus one per question."
        )
        self.turn = turn
        self.length = length


class TransportError(PolicyError):
    def __init__(self, endpoint: str, detail: str) -> None:
        super().__init__(
            f"Chat completion request to '{endpoint}' failed.\n"
            f"  Cause: {detail}\n"
            f"  Check: Is the endpoint an OpenAI-compatible /chat/completions URL? Is ATOMMEM_API_KEY set?"
        )
        self.endpoint = endpoint
        self.detail = detail


class RequestTimeoutError(TransportError):
    def __init__(self, endpoint: str, timeout_s: float) -> None:
        super().__init__(endpoint, f"no response within {timeout_s}s after all retries")
        self.timeout_s = timeout_s


# ---------------------------------------------------------------------------
# configuration / run directories
# ---------------------------------------------------------------------------

class ConfigError(AtomMemError):
    def __init__(self, path: Path, detail: str) -> None:
        super().__init__(
            f"Cannot load config '{path.name}'.\n"
            f"  Cause: {detail}\n"
            f"  Check: Is the file valid TOML with [episode], [embedding] and [policy] sections?"
        )
        self.path = path
        self.detail = detail


class MissingTranscripts(AtomMemError):
    def __init__(self, run_dir: Path) -> None:
        super().__init__(
            f"No transcripts found in run directory '{run_dir}'.\n"
            f"  Check: Pass a directory produced by `atommem run` (it contains transcripts/*.jsonl)."
        )
        self.run_dir = run_dir
