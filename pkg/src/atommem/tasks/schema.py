"""Source QA samples and constructed task instances.

Task files are JSONL, one TaskInstance per line::

    {"documents": [{"q": null, "relevant": false, "text": "..."}, ...],
     "gold": [["Paris"]], "mode": "niah", "questions": ["..."],
     "sampled_with_replacement": false, "seed": 7, "source_ids": ["5a8b..."],
     "task_id": "niah-0000", "total_docs": 200}

Keys are written sorted so identical instances give identical bytes.
"""
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from atommem.errors import TaskFileError
from atommem.fsutil import write_bytes_atomic


class SourceQA(BaseModel):
    """One multi-hop QA sample: a question with its relevant documents."""
    model_config = ConfigDict(frozen=True)

    source_id: str = Field(min_length=1)
    question: str = Field(min_length=1)
    gold_answers: list[str] = Field(min_length=1)
    relevant_docs: list[str] = Field(min_length=1)
    # Non-gold paragraphs shipped with the row; they feed the distractor pool.
    distractor_docs: list[str] = Field(default_factory=list)

    @field_validator("question")
    @classmethod
    def question_not_blank(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("question is blank")
        return v

    @field_validator("gold_answers", "relevant_docs")
    @classmethod
    def drop_blank_items(cls, v: list[str]) -> list[str]:
        kept = [s.strip() for s in v if s.strip()]
        if not kept:
            raise ValueError("needs at least one non-blank item")
        return kept

    @field_validator("distractor_docs")
    @classmethod
    def drop_blank_distractors(cls, v: list[str]) -> list[str]:
        return [s.strip() for s in v if s.strip()]


class TaskDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    relevant: bool
    q: Optional[int] = None   # index of the owning question; None for distractors

    @model_validator(mode="after")
    def owner_iff_relevant(self) -> "TaskDocument":
        if self.relevant != (self.q is not None):
            raise ValueError("relevant documents carry a question index q, distractors do not")
        return self


class TaskInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    task_id: str
    mode: Literal["niah", "multiq"] = "niah"
    questions: list[str] = Field(min_length=1)
    gold: list[list[str]]
    documents: list[TaskDocument]
    seed: int
    total_docs: int = Field(ge=1)
    source_ids: list[str] = Field(default_factory=list)
    sampled_with_replacement: bool = False

    @model_validator(mode="after")
    def check_alignment(self) -> "TaskInstance":
        if len(self.gold) != len(self.questions):
            raise ValueError(f"{len(self.gold)} gold lists for {len(self.questions)} questions")
        if any(not g for g in self.gold):
            raise ValueError("every question needs at least one gold answer")
        if len(self.documents) != self.total_docs:
            raise ValueError(f"{len(self.documents)} documents but total_docs={self.total_docs}")
        for doc in self.documents:
            if doc.q is not None and not 0 <= doc.q < len(self.questions):
                raise ValueError(f"document owner q={doc.q} is out of range")
        return self

    @property
    def document_texts(self) -> list[str]:
        return [d.text for d in self.documents]

    def relevant_for(self, q: int) -> list[str]:
        return [d.text for d in self.documents if d.q == q]

    def to_json_line(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, ensure_ascii=False)


def write_tasks(path: Path, tasks: list[TaskInstance]) -> Path:
    data = "".join(t.to_json_line() + "\n" for t in tasks).encode("utf-8")
    return write_bytes_atomic(path, data, suffix=".tasks.tmp")


def load_tasks(path: Path) -> list[TaskInstance]:
    """Load a task JSONL file. Raises TaskFileError on the first bad line."""
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise TaskFileError(path, str(e)) from e

    tasks: list[TaskInstance] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            tasks.append(TaskInstance.model_validate_json(line))
        except ValidationError as e:
            field_errors = "; ".join(
                f"{' -> '.join(str(x) for x in err['loc'])}: {err['msg']}"
                for err in e.errors()
            )
            raise TaskFileError(path, f"line {lineno}: {field_errors}") from e
    if not tasks:
        raise TaskFileError(path, "file contains no task instances")
    return tasks
