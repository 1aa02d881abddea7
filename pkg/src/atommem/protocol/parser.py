"""XML tag protocol: policy text <-> ActionSequence.

Two tag vocabularies are supported:

  table   create_memory / read_memory / update_memory / delete_memory
          (+ scratchpad for the scratchpad write channel)
  prompt  add_memory / update_query / modify_memory / delete_memory
          (+ update_memory for the scratchpad write channel)

Tags are matched pairwise: for each opening tag the first matching closing tag
ends the payload (non-greedy). Payloads are not escaped, so a payload that
contains a literal tag of its own kind is cut at that tag. parse() never
raises; anything it cannot use becomes a ParseDiagnostic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from atommem.errors import UnrenderableAction
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

ANSWER_TAG = "answer"

_OPEN_TAG_RE = re.compile(r"<([A-Za-z_][A-Za-z0-9_]*)\s*>")
# "Memory 3: text", "Entry 3: text" or "3: text"
_UPDATE_PAYLOAD_RE = re.compile(r"(?:(?:memory|entry)\s*)?#?(\d+)\s*:\s*(.*)", re.IGNORECASE | re.DOTALL)
# "Memory 3", "Entry 3", "3"
_DELETE_PAYLOAD_RE = re.compile(r"(?:(?:memory|entry)\s*)?#?(\d+)[\s.]*", re.IGNORECASE)


class SchemaKind(str, Enum):
    TABLE = "table"
    PROMPT = "prompt"


@dataclass(frozen=True)
class SchemaVariant:
    kind: SchemaKind
    tags: dict[ActionKind, str]

    @property
    def tag_to_kind(self) -> dict[str, ActionKind]:
        return {tag: kind for kind, tag in self.tags.items()}

    def tag(self, kind: ActionKind) -> str:
        return self.tags[kind]


TABLE_SCHEMA = SchemaVariant(
    kind=SchemaKind.TABLE,
    tags={
        ActionKind.CREATE: "create_memory",
        ActionKind.READ: "read_memory",
        ActionKind.UPDATE: "update_memory",
        ActionKind.DELETE: "delete_memory",
        ActionKind.SCRATCHPAD: "scratchpad",
    },
)

PROMPT_SCHEMA = SchemaVariant(
    kind=SchemaKind.PROMPT,
    tags={
        ActionKind.CREATE: "add_memory",
        ActionKind.READ: "update_query",
        ActionKind.UPDATE: "modify_memory",
        ActionKind.DELETE: "delete_memory",
        ActionKind.SCRATCHPAD: "update_memory",
    },
)

SCHEMAS: dict[SchemaKind, SchemaVariant] = {
    SchemaKind.TABLE: TABLE_SCHEMA,
    SchemaKind.PROMPT: PROMPT_SCHEMA,
}


def get_schema(kind: SchemaKind | str) -> SchemaVariant:
    return SCHEMAS[SchemaKind(kind)]


def _payload_to_action(
    kind: ActionKind,
    payload: str,
    offset: int,
    tag: str,
) -> MemoryAction | ParseDiagnostic:
    if kind is ActionKind.SCRATCHPAD:
        # Empty scratchpad writes are allowed: they clear the pad.
        return Scratchpad(payload)

    if kind is ActionKind.UPDATE:
        m = _UPDATE_PAYLOAD_RE.fullmatch(payload)
        if m is None:
            return ParseDiagnostic(
                DiagnosticCode.MISSING_ID,
                f"<{tag}> needs a memory index like 'Memory 3: new content'",
                offset,
            )
        content = m.group(2).strip()
        if not content:
            return ParseDiagnostic(DiagnosticCode.EMPTY_PAYLOAD, f"<{tag}> for Memory {m.group(1)} has no content", offset)
        return Update(int(m.group(1)), content)

    if kind is ActionKind.DELETE:
        m = _DELETE_PAYLOAD_RE.fullmatch(payload)
        if m is None:
            return ParseDiagnostic(
                DiagnosticCode.MISSING_ID,
                f"<{tag}> needs a memory index like 'Memory 3'",
                offset,
            )
        return Delete(int(m.group(1)))

    if not payload:
        return ParseDiagnostic(DiagnosticCode.EMPTY_PAYLOAD, f"<{tag}> is empty", offset)
    if kind is ActionKind.CREATE:
        return Create(payload)
    return Read(payload)


def parse(text: str, schema: SchemaVariant) -> ActionSequence:
    """Extract all well-formed paired tags from *text* in document order."""
    tag_to_kind = schema.tag_to_kind
    seq = ActionSequence()
    free_parts: list[str] = []
    pos = 0
    free_start = 0

    while True:
        m = _OPEN_TAG_RE.search(text, pos)
        if m is None:
            break
        name = m.group(1)
        is_known = name in tag_to_kind or name == ANSWER_TAG
        if not is_known:
            seq.diagnostics.append(
                ParseDiagnostic(DiagnosticCode.UNKNOWN_TAG, f"<{name}> is not a {schema.kind.value}-schema action", m.start())
            )
            pos = m.end()
            continue

        close = f"</{name}>"
        close_at = text.find(close, m.end())
        if close_at < 0:
            seq.diagnostics.append(
                ParseDiagnostic(DiagnosticCode.UNCLOSED_TAG, f"<{name}> has no matching {close}", m.start())
            )
            pos = m.end()
            continue

        free_parts.append(text[free_start:m.start()])
        payload = text[m.end():close_at].strip()
        pos = free_start = close_at + len(close)

        if name == ANSWER_TAG:
            if seq.final_answer is None:
                seq.final_answer = payload
            else:
                seq.diagnostics.append(
                    ParseDiagnostic(DiagnosticCode.DUPLICATE_ANSWER, "only the first <answer> is used", m.start())
                )
            continue

        result = _payload_to_action(tag_to_kind[name], payload, m.start(), name)
        if isinstance(result, ParseDiagnostic):
            seq.diagnostics.append(result)
        else:
            seq.actions.append(result)

    free_parts.append(text[free_start:])
    seq.free_text = _OPEN_TAG_RE.sub(" ", "".join(free_parts)).strip()
    return seq


def _render_action(action: MemoryAction, schema: SchemaVariant) -> str:
    tag = schema.tag(action.kind)
    prompt_style = schema.kind is SchemaKind.PROMPT

    if isinstance(action, (Update, Delete)) and action.id < 0:
        raise UnrenderableAction(action, "memory ids are non-negative integers")

    if isinstance(action, Scratchpad):
        body = action.content.strip()
    elif isinstance(action, Update):
        content = action.content.strip()
        if not content:
            raise UnrenderableAction(action, "update content is empty")
        body = f"Memory {action.id}: {content}" if prompt_style else f"{action.id}: {content}"
    elif isinstance(action, Delete):
        body = f"Memory {action.id}" if prompt_style else str(action.id)
    else:
        body = (action.content if isinstance(action, Create) else action.query).strip()
        if not body:
            raise UnrenderableAction(action, "payload is empty")

    if prompt_style:
        return f"<{tag}>\n{body}\n</{tag}>"
    return f"<{tag}>{body}</{tag}>"


def render(seq: ActionSequence, schema: SchemaVariant) -> str:
    """Render *seq* so that parse(render(seq)) reproduces it modulo diagnostics."""
    blocks = [_render_action(action, schema) for action in seq.actions]
    if seq.final_answer is not None:
        blocks.append(f"<{ANSWER_TAG}>{seq.final_answer.strip()}</{ANSWER_TAG}>")
    return "\n".join(blocks)
