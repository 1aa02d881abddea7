"""Prompt rendering: system instructions plus the per-step user template.

User template sections, in order:

  question(s) -> scratchpad -> current query -> retrieved memory
  -> problems with the previous response -> tips -> article

Answer turns replace the question block with the single pending question,
drop the article, and ask for an ``<answer>`` tag. Rendering is a pure
function of (task, observation, config).
"""
from __future__ import annotations

from typing import TYPE_CHECKING

from atommem.config import EpisodeConfig
from atommem.protocol.actions import ActionKind, ActionSequence, Create, Delete, Read, Update
from atommem.protocol.parser import ANSWER_TAG, SchemaKind, SchemaVariant, get_schema, render

if TYPE_CHECKING:
    from atommem.environment.episode import Observation
    from atommem.tasks.schema import TaskInstance

EMPTY = "(empty)"
NONE = "(none)"

_SYSTEM_TEMPLATE = """\
You are presented with a section of an article and a previous memory. Please learn the provided section carefully and manage your memory to answer questions.

Your short-term memory is a step-wise updated summary, while your long-term memory is a vector database that can be updated through atomic operations.

short-term memory is updated using <{scratchpad}>.

Four kinds of memory actions for the database are available:
<{read}>: The system maintains a query for memory retrieval. You can modify it via query operations. You will not get any memory unless you give a query.

<{create}>: creates a new entry in the memory. You do not need to repeatedly add the memory shown to you or enter the index of the memory.

<{update}>: updates the existing entry. You need to enter the memory index "{update_index}" to specify which memory to modify. To manage large volumes of memory effectively, you should prioritize using the "modify" function MORE frequently, rather than relying solely on "add" operations.

<{delete}>: delete a memory. You need to enter the memory index "{delete_index}" to specify which memory to delete. You must delete duplicate memory entries!

Use paired XML tags as action markers so you can perform multiple actions, such as adding several memories, in a single response.

action example 1:

{example_read}

action example 2:

{example_create}

action example 3:

{example_update}

action example 4:

It can be observed that Entry 2 and Entry 6 are largely duplicated. Since Entry 6 is more recent, I choose to delete Entry 2.
{example_delete}

When you are asked a question, answer using only your memory and put the final answer inside <{answer}></{answer}>."""

_EXAMPLES = {
    "example_read": Read("dance partner; Yulia Zagoruychenko."),
    "example_create": Create(
        "Document 10 indicates that the dance event took place in Moscow in October and that Yulia "
        "participated in it. I need to focus more on who else attended this event or who traveled to "
        "Moscow in October, in order to infer who Yulia's dance partner might be."
    ),
    "example_update": Update(
        1,
        "The current article provides updated competition records showing that Riccardo Cocchi is now "
        "partnered with Emily in the 2025 season, while no recent evidence confirms his continued "
        "partnership with Yulia Zagoruychenko. The correct action is to modify the existing memory to "
        "reflect that Yulia's current dance partner is unknown as of 2025.",
    ),
    "example_delete": Delete(2),
}

_TIPS_TEMPLATE = (
    "DO NOT repeatedly update the query. If you don't have the desired memory, it means the entry does "
    "not exist in the knowledge base. AVOID using {read} multiple times within a single response; "
    "instead, you can use a long and composite query to retrieve documents for different questions. "
    "The query matches documents based on semantic embeddings, and composite queries are best "
    "composed of keywords."
)


def system_prompt(schema: SchemaVariant) -> str:
    """Instructions naming the schema's tags; examples are rendered in the schema's own format."""
    t = schema.tags
    prompt_style = schema.kind is SchemaKind.PROMPT
    examples = {name: render(ActionSequence([action]), schema) for name, action in _EXAMPLES.items()}
    return _SYSTEM_TEMPLATE.format(
        scratchpad=t[ActionKind.SCRATCHPAD],
        read=t[ActionKind.READ],
        create=t[ActionKind.CREATE],
        update=t[ActionKind.UPDATE],
        delete=t[ActionKind.DELETE],
        update_index="Memory i:" if prompt_style else "i:",
        delete_index="Memory i" if prompt_style else "i",
        answer=ANSWER_TAG,
        **examples,
    )


def _tips(schema: SchemaVariant) -> str:
    return _TIPS_TEMPLATE.format(read=schema.tag(ActionKind.READ))


def _memory_block(observation: "Observation") -> str:
    if not observation.retrieved:
        return EMPTY
    return "\n".join(f"Memory {entry_id}: {content}" for entry_id, content in observation.retrieved)


def _question_block(task: "TaskInstance") -> str:
    if len(task.questions) == 1:
        return task.questions[0]
    return "\n".join(f"Question {i + 1}: {q}" for i, q in enumerate(task.questions))


def user_prompt(task: "TaskInstance", observation: "Observation", config: EpisodeConfig) -> str:
    schema = get_schema(config.schema_kind)
    sections = [f"Current step: {observation.step}"]
    if observation.is_answer_turn:
        sections += ["This is the question you need to answer now:", observation.pending_question or ""]
    else:
        sections += ["This is the question you need to solve:", _question_block(task)]
    sections += [
        "This is your scratchpad from the previous turn.",
        observation.scratchpad or EMPTY,
        "This is the current query to retrieve memory from the database:",
        observation.query or NONE,
        "This is the current memory related to the query:",
        _memory_block(observation),
        "Problems with your previous response:",
        "\n".join(observation.diagnostics) or NONE,
    ]
    if observation.is_answer_turn:
        sections.append(
            "Answer using only your memory. "
            f"Put the final answer inside <{ANSWER_TAG}></{ANSWER_TAG}>."
        )
    else:
        sections += ["Tips:\n" + _tips(schema), "This is the article:", observation.env_chunk or ""]
    return "\n\n".join(sections)


def render_messages(task: "TaskInstance", observation: "Observation", config: EpisodeConfig) -> list[dict[str, str]]:
    """Fresh two-message chat for one turn; no history is carried between turns."""
    return [
        {"role": "system", "content": system_prompt(get_schema(config.schema_kind))},
        {"role": "user", "content": user_prompt(task, observation, config)},
    ]


def render_prompt(task: "TaskInstance", observation: "Observation", config: EpisodeConfig) -> str:
    return "\n\n".join(m["content"] for m in render_messages(task, observation, config))
