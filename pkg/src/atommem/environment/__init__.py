"""Streaming environment: chunking, the episode loop, trajectories."""
from atommem.environment.chunking import (
    ChunkPlan,
    TokenCounter,
    WhitespaceTokenCounter,
    chunk_stream,
    plan_chunks,
    token_windows,
)
from atommem.environment.episode import (
    EpisodeState,
    Observation,
    Phase,
    Terminal,
    TranscriptStep,
    reset,
    step,
)
from atommem.environment.trajectory import (
    TrajectoryRecord,
    load_transcript,
    record_from_steps,
    run_episode,
    transcript_line,
)

__all__ = [
    "ChunkPlan",
    "TokenCounter",
    "WhitespaceTokenCounter",
    "chunk_stream",
    "plan_chunks",
    "token_windows",
    "EpisodeState",
    "Observation",
    "Phase",
    "Terminal",
    "TranscriptStep",
    "reset",
    "step",
    "TrajectoryRecord",
    "load_transcript",
    "record_from_steps",
    "run_episode",
    "transcript_line",
]
