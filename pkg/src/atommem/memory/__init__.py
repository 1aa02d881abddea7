"""Memory core: entry store, scratchpad, CRUD transitions, snapshots."""
from atommem.memory.state import (
    ActionOutcome,
    ApplyReport,
    MemoryEntry,
    MemoryState,
    apply_action,
    apply_sequence,
    create,
    delete,
    update,
    write_scratchpad,
)

__all__ = [
    "ActionOutcome",
    "ApplyReport",
    "MemoryEntry",
    "MemoryState",
    "apply_action",
    "apply_sequence",
    "create",
    "delete",
    "update",
    "write_scratchpad",
]
