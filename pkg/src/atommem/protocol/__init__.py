"""Memory action protocol: canonical actions and the two XML tag schemas."""
from atommem.protocol.actions import (
    ActionKind,
    ActionSequence,
    Create,
    Delete,
    DiagnosticCode,
    MemoryAction,
    ParseDiagnostic,
    Read,
    Scratchpad,
    Update,
)
from atommem.protocol.parser import (
    PROMPT_SCHEMA,
    TABLE_SCHEMA,
    SchemaKind,
    SchemaVariant,
    get_schema,
    parse,
    render,
)

__all__ = [
    "ActionKind",
    "ActionSequence",
    "Create",
    "Delete",
    "DiagnosticCode",
    "MemoryAction",
    "ParseDiagnostic",
    "Read",
    "Scratchpad",
    "Update",
    "PROMPT_SCHEMA",
    "TABLE_SCHEMA",
    "SchemaKind",
    "SchemaVariant",
    "get_schema",
    "parse",
    "render",
]
