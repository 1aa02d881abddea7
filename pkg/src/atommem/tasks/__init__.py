"""Task construction: source ingestion, NIAH and multi-question instances."""
from atommem.tasks.builder import (
    MAX_QUESTIONS,
    assert_disjoint,
    build_distractor_pool,
    build_multiq,
    build_niah,
    build_tasks,
    sample_question_count,
    split_sources,
    sub_seed,
)
from atommem.tasks.ingest import IngestReport, ingest, load_sources
from atommem.tasks.schema import SourceQA, TaskDocument, TaskInstance, load_tasks, write_tasks

__all__ = [
    "MAX_QUESTIONS",
    "assert_disjoint",
    "build_distractor_pool",
    "build_multiq",
    "build_niah",
    "build_tasks",
    "sample_question_count",
    "split_sources",
    "sub_seed",
    "IngestReport",
    "ingest",
    "load_sources",
    "SourceQA",
    "TaskDocument",
    "TaskInstance",
    "load_tasks",
    "write_tasks",
]
