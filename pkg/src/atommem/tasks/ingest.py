"""Multi-hop QA source ingestion.

Accepted row layouts (JSONL, or a single JSON array of rows):

normalized
    {"id": "q1", "question": "...", "answers": ["..."],
     "contexts": ["relevant text", {"text": "...", "relevant": false}, ...]}
    Plain-string contexts count as relevant.

HotpotQA / 2WikiMultiHopQA
    {"_id": "...", "question": "...", "answer": "...",
     "context": [[title, [sentence, ...]], ...],
     "supporting_facts": [[title, sentence_index], ...]}
    Paragraphs whose title appears in supporting_facts are relevant; the rest
    are routed to the distractor pool.

MuSiQue
    {"id": "...", "question": "...", "answer": "...", "answer_aliases": [...],
     "paragraphs": [{"title": "...", "paragraph_text": "...", "is_supporting": true}, ...]}

Rows that fit none of these, or fail validation, are skipped and counted.
Files that are not UTF-8 are decoded via charset-normalizer detection.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from charset_normalizer import from_bytes
from pydantic import BaseModel, ValidationError

from atommem.errors import SchemaMismatch, UnreadableFile
from atommem.tasks.schema import SourceQA

logger = logging.getLogger(__name__)


class _NormalizedContext(BaseModel):
    text: str
    relevant: bool = True
    title: Optional[str] = None


class _NormalizedRow(BaseModel):
    id: Optional[str] = None
    question: str
    answers: list[str]
    contexts: list[Union[str, _NormalizedContext]]

    def to_source(self, fallback_id: str) -> SourceQA:
        relevant: list[str] = []
        distractors: list[str] = []
        for ctx in self.contexts:
            if isinstance(ctx, str):
                relevant.append(ctx)
                continue
            text = f"{ctx.title}: {ctx.text}" if ctx.title else ctx.text
            (relevant if ctx.relevant else distractors).append(text)
        return SourceQA(
            source_id=self.id or fallback_id,
            question=self.question,
            gold_answers=self.answers,
            relevant_docs=relevant,
            distractor_docs=distractors,
        )


class _HotpotRow(BaseModel):
    """HotpotQA and 2WikiMultiHopQA share this layout."""
    id: Optional[str] = None
    question: str
    answer: str
    answer_aliases: list[str] = []
    context: list[tuple[str, list[str]]]
    supporting_facts: list[tuple[str, int]]

    def to_source(self, fallback_id: str) -> SourceQA:
        gold_titles = {title for title, _ in self.supporting_facts}
        relevant: list[str] = []
        distractors: list[str] = []
        for title, sentences in self.context:
            text = f"{title}: " + " ".join(s.strip() for s in sentences if s.strip())
            (relevant if title in gold_titles else distractors).append(text)
        return SourceQA(
            source_id=self.id or fallback_id,
            question=self.question,
            gold_answers=[self.answer, *self.answer_aliases],
            relevant_docs=relevant,
            distractor_docs=distractors,
        )


class _MusiqueParagraph(BaseModel):
    title: str = ""
    paragraph_text: str
    is_supporting: bool = False


class _MusiqueRow(BaseModel):
    id: Optional[str] = None
    question: str
    answer: str
    answer_aliases: list[str] = []
    answerable: bool = True
    paragraphs: list[_MusiqueParagraph]

    def to_source(self, fallback_id: str) -> SourceQA:
        if not self.answerable:
            raise ValueError("unanswerable MuSiQue row")
        relevant: list[str] = []
        distractors: list[str] = []
        for p in self.paragraphs:
            text = f"{p.title}: {p.paragraph_text}" if p.title else p.paragraph_text
            (relevant if p.is_supporting else distractors).append(text)
        return SourceQA(
            source_id=self.id or fallback_id,
            question=self.question,
            gold_answers=[self.answer, *self.answer_aliases],
            relevant_docs=relevant,
            distractor_docs=distractors,
        )


def _row_to_source(row: Any, fallback_id: str) -> SourceQA:
    if not isinstance(row, dict):
        raise ValueError("row is not a JSON object")
    if "_id" in row and "id" not in row:
        row = {**row, "id": row["_id"]}
    if "paragraphs" in row:
        return _MusiqueRow.model_validate(row).to_source(fallback_id)
    if "context" in row and "supporting_facts" in row:
        return _HotpotRow.model_validate(row).to_source(fallback_id)
    if "contexts" in row:
        return _NormalizedRow.model_validate(row).to_source(fallback_id)
    raise ValueError("row matches no known source layout")


def _read_text(path: Path) -> str:
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise UnreadableFile(path, str(e)) from e
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        best = from_bytes(raw).best()
        if best is None:
            raise UnreadableFile(path, "Could not determine file encoding. Re-save as UTF-8.")
        logger.warning("%s is not UTF-8; decoding as %s", path.name, best.encoding)
        return str(best)


def _iter_rows(path: Path, text: str) -> list[tuple[str, Any]]:
    """(fallback id, decoded row or None for undecodable lines)."""
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            rows = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise UnreadableFile(path, f"invalid JSON array: {e}") from e
        return [(f"{path.stem}:{i}", row) for i, row in enumerate(rows)]

    out: list[tuple[str, Any]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append((f"{path.stem}:{lineno}", json.loads(line)))
        except json.JSONDecodeError:
            out.append((f"{path.stem}:{lineno}", None))
    return out


@dataclass
class IngestReport:
    samples: list[SourceQA] = field(default_factory=list)
    skipped: int = 0


def load_sources(path: Path) -> IngestReport:
    """Parse a source file into SourceQA samples, counting skipped rows.

    Raises UnreadableFile if the file cannot be read or decoded, and
    SchemaMismatch if no row yields a usable sample.
    """
    text = _read_text(path)
    report = IngestReport()
    for fallback_id, row in _iter_rows(path, text):
        try:
            if row is None:
                raise ValueError("line is not valid JSON")
            report.samples.append(_row_to_source(row, fallback_id))
        except (ValidationError, ValueError) as e:
            report.skipped += 1
            logger.debug("Skipping %s: %s", fallback_id, str(e).splitlines()[0])

    if not report.samples:
        raise SchemaMismatch(path, report.skipped)
    if report.skipped:
        logger.warning("%s: skipped %d malformed rows", path.name, report.skipped)
    return report


def ingest(path: Path) -> list[SourceQA]:
    """Validated SourceQA list from a JSONL source file; malformed rows are skipped."""
    return load_sources(path).samples
