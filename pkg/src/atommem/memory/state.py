"""Memory state M_t and the transitions induced by Create/Update/Delete and scratchpad writes.

Ids come from a monotone counter and are never reused after deletion. The
scratchpad is a distinguished slot, not an entry, so no entry operation can
reach it. Embeddings are owned by the retrieval layer: memory_core only
invalidates them (update), it never computes them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from atommem.errors import EmptyContent, MemoryOpError, UnknownId
from atommem.protocol.actions import (
    ActionSequence,
    Create,
    Delete,
    MemoryAction,
    Read,
    Scratchpad,
    Update,
)


@dataclass
class MemoryEntry:
    """One stored memory item m_i."""

    id: int
    content: str
    created_step: int
    updated_step: int
    # Unit-norm vector filled lazily by retrieval; excluded from equality and JSON.
    embedding: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


@dataclass
class MemoryState:
    """Full memory M_t: entries (insertion-ordered), scratchpad, id counter, step index."""

    entries: dict[int, MemoryEntry] = field(default_factory=dict)
    scratchpad: str = ""
    next_id: int = 0
    step: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scratchpad": self.scratchpad,
            "next_id": self.next_id,
            "entries": [
                {
                    "id": e.id,
                    "content": e.content,
                    "created_step": e.created_step,
                    "updated_step": e.updated_step,
                }
                for e in self.entries.values()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], step: int = 0) -> "MemoryState":
        entries = {
            int(e["id"]): MemoryEntry(
                id=int(e["id"]),
                content=str(e["content"]),
                created_step=int(e["created_step"]),
                updated_step=int(e["updated_step"]),
            )
            for e in data.get("entries", [])
        }
        next_id = int(data.get("next_id", 0))
        if entries and next_id <= max(entries):
            raise ValueError(f"next_id {next_id} must exceed every stored id (max {max(entries)})")
        return cls(entries=entries, scratchpad=str(data.get("scratchpad", "")), next_id=next_id, step=step)


def create(state: MemoryState, content: str) -> int:
    """Add a new entry and return its fresh id. Duplicate content is allowed."""
    if not content.strip():
        raise EmptyContent("create")
    entry_id = state.next_id
    state.entries[entry_id] = MemoryEntry(
        id=entry_id,
        content=content,
        created_step=state.step,
        updated_step=state.step,
    )
    state.next_id += 1
    return entry_id


def update(state: MemoryState, entry_id: int, content: str) -> None:
    """Replace an entry's content; the cached embedding is invalidated."""
    entry = state.entries.get(entry_id)
    if entry is None:
        raise UnknownId("update", entry_id)
    if not content.strip():
        raise EmptyContent("update")
    entry.content = content
    entry.updated_step = state.step
    entry.embedding = None


def delete(state: MemoryState, entry_id: int) -> None:
    if entry_id not in state.entries:
        raise UnknownId("delete", entry_id)
    del state.entries[entry_id]


def write_scratchpad(state: MemoryState, content: str) -> None:
    """Overwrite the scratchpad wholesale. Empty content clears it."""
    state.scratchpad = content


@dataclass
class ActionOutcome:
    action: MemoryAction
    ok: bool
    diagnostic: Optional[str] = None
    code: Optional[str] = None
    created_id: Optional[int] = None   # set for successful Create


@dataclass
class ApplyReport:
    outcomes: list[ActionOutcome] = field(default_factory=list)
    pending_reads: list[str] = field(default_factory=list)

    @property
    def diagnostics(self) -> list[str]:
        return [o.diagnostic for o in self.outcomes if o.diagnostic is not None]

    @property
    def successes(self) -> int:
        return sum(1 for o in self.outcomes if o.ok)


def apply_action(state: MemoryState, action: MemoryAction) -> ActionOutcome:
    """Apply one non-Read action, converting memory errors into a diagnostic outcome."""
    try:
        if isinstance(action, Create):
            return ActionOutcome(action, ok=True, created_id=create(state, action.content))
        if isinstance(action, Update):
            update(state, action.id, action.content)
        elif isinstance(action, Delete):
            delete(state, action.id)
        elif isinstance(action, Scratchpad):
            write_scratchpad(state, action.content)
        else:
            raise TypeError(f"apply_action does not handle {type(action).__name__}")
    except MemoryOpError as exc:
        summary = str(exc).splitlines()[0]
        return ActionOutcome(action, ok=False, diagnostic=f"{exc.code}: {summary}", code=exc.code)
    return ActionOutcome(action, ok=True)


def apply_sequence(state: MemoryState, actions: ActionSequence | list[MemoryAction]) -> ApplyReport:
    """Apply non-Read actions in emission order; collect Read queries without touching memory.

    A failing action yields a diagnostic and the rest of the sequence proceeds.
    """
    items = actions.actions if isinstance(actions, ActionSequence) else actions
    report = ApplyReport()
    for action in items:
        if isinstance(action, Read):
            report.pending_reads.append(action.query)
            report.outcomes.append(ActionOutcome(action, ok=True))
            continue
        report.outcomes.append(apply_action(state, action))
    return report
