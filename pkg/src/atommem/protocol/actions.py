"""Canonical memory actions emitted by a policy in one step.

Both XML schemas parse into the same action types; the schema only decides
tag names and payload layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union


class ActionKind(str, Enum):
    """str, Enum so kinds serialize as plain strings in transcripts and reports."""
    CREATE = "create"
    READ = "read"
    UPDATE = "update"
    DELETE = "delete"
    SCRATCHPAD = "scratchpad"


@dataclass(frozen=True)
class Create:
    content: str
    kind = ActionKind.CREATE


@dataclass(frozen=True)
class Read:
    query: str
    kind = ActionKind.READ


@dataclass(frozen=True)
class Update:
    id: int
    content: str
    kind = ActionKind.UPDATE


@dataclass(frozen=True)
class Delete:
    id: int
    kind = ActionKind.DELETE


@dataclass(frozen=True)
class Scratchpad:
    content: str
    kind = ActionKind.SCRATCHPAD


MemoryAction = Union[Create, Read, Update, Delete, Scratchpad]


class DiagnosticCode(str, Enum):
    UNKNOWN_TAG = "UnknownTag"
    UNCLOSED_TAG = "UnclosedTag"
    MISSING_ID = "MissingId"
    EMPTY_PAYLOAD = "EmptyPayload"
    DUPLICATE_ANSWER = "DuplicateAnswer"


@dataclass(frozen=True)
class ParseDiagnostic:
    code: DiagnosticCode
    message: str
    offset: int = -1   # character offset of the offending tag in the policy text

    def __str__(self) -> str:
        return f"{self.code.value}: {self.message}"


@dataclass
class ActionSequence:
    """Ordered actions of one step plus the optional environment action (the answer)."""

    actions: list[MemoryAction] = field(default_factory=list)
    final_answer: Optional[str] = None
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)
    free_text: str = ""   # untagged text, used as the answer when no <answer> tag is given

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def reads(self) -> list[str]:
        return [a.query for a in self.actions if isinstance(a, Read)]

    def counts(self) -> dict[str, int]:
        out = {kind.value: 0 for kind in ActionKind}
        for action in self.actions:
            out[action.kind.value] += 1
        return out

    def same_actions(self, other: "ActionSequence") -> bool:
        """Equality modulo diagnostics and free text."""
        return self.actions == other.actions and self.final_answer == other.final_answer


def action_to_dict(action: MemoryAction) -> dict[str, Any]:
    if isinstance(action, Create):
        return {"kind": "create", "content": action.content}
    if isinstance(action, Read):
        return {"kind": "read", "query": action.query}
    if isinstance(action, Update):
        return {"kind": "update", "id": action.id, "content": action.content}
    if isinstance(action, Delete):
        return {"kind": "delete", "id": action.id}
    return {"kind": "scratchpad", "content": action.content}


def action_from_dict(data: dict[str, Any]) -> MemoryAction:
    """Inverse of action_to_dict. Raises KeyError/ValueError on malformed records."""
    kind = ActionKind(data["kind"])
    if kind is ActionKind.CREATE:
        return Create(str(data["content"]))
    if kind is ActionKind.READ:
        return Read(str(data["query"]))
    if kind is ActionKind.UPDATE:
        return Update(int(data["id"]), str(data["content"]))
    if kind is ActionKind.DELETE:
        return Delete(int(data["id"]))
    return Scratchpad(str(data["content"]))
