import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atommem.errors import UnrenderableAction
from atommem.protocol.actions import (
    ActionKind,
    ActionSequence,
    Create,
    Delete,
    DiagnosticCode,
    Read,
    Scratchpad,
    Update,
    action_from_dict,
    action_to_dict,
)
from atommem.protocol.parser import PROMPT_SCHEMA, TABLE_SCHEMA, get_schema, parse, render

SCHEMAS = [TABLE_SCHEMA, PROMPT_SCHEMA]


class TestSchemas:
    def test_table_tags(self):
        assert [TABLE_SCHEMA.tag(k) for k in (ActionKind.CREATE, ActionKind.READ, ActionKind.UPDATE, ActionKind.DELETE)] == [
            "create_memory", "read_memory", "update_memory", "delete_memory",
        ]

    def test_prompt_tags(self):
        assert [PROMPT_SCHEMA.tag(k) for k in ActionKind] == [
            "add_memory", "update_query", "modify_memory", "delete_memory", "update_memory",
        ]

    def test_lookup_by_name(self):
        assert get_schema("prompt") is PROMPT_SCHEMA
        assert get_schema("table") is TABLE_SCHEMA


class TestParse:
    def test_update_query_is_read(self):
        seq = parse("<update_query>dance partner; Yulia Zagoruychenko.</update_query>", PROMPT_SCHEMA)
        assert seq.actions == [Read("dance partner; Yulia Zagoruychenko.")]

    def test_update_query_with_trailing_newline(self):
        seq = parse("<update_query>dance partner; Yulia Zagoruychenko.\n</update_query>", PROMPT_SCHEMA)
        assert seq.actions == [Read("dance partner; Yulia Zagoruychenko.")]

    def test_delete_by_memory_index(self):
        seq = parse("<delete_memory>Memory 2</delete_memory>", PROMPT_SCHEMA)
        assert seq.actions == [Delete(2)]

    def test_modify_memory(self):
        seq = parse("<modify_memory>\nMemory 1: the capital is Paris\n</modify_memory>", PROMPT_SCHEMA)
        assert seq.actions == [Update(1, "the capital is Paris")]

    def test_table_create_then_read(self):
        seq = parse("<create_memory>x</create_memory><read_memory>y</read_memory>", TABLE_SCHEMA)
        assert seq.actions == [Create("x"), Read("y")]

    def test_table_update_with_bare_id(self):
        seq = parse("<update_memory>4: moved to Lyon</update_memory>", TABLE_SCHEMA)
        assert seq.actions == [Update(4, "moved to Lyon")]

    def test_update_memory_is_scratchpad_under_prompt_schema(self):
        seq = parse("<update_memory>## Summary\n- read 3 chunks</update_memory>", PROMPT_SCHEMA)
        assert seq.actions == [Scratchpad("## Summary\n- read 3 chunks")]

    def test_empty_scratchpad_allowed(self):
        assert parse("<scratchpad></scratchpad>", TABLE_SCHEMA).actions == [Scratchpad("")]

    def test_modify_without_index(self):
        seq = parse("<modify_memory>no index here</modify_memory>", PROMPT_SCHEMA)
        assert seq.actions == []
        assert [d.code for d in seq.diagnostics] == [DiagnosticCode.MISSING_ID]

    def test_unknown_and_unclosed_tags(self):
        seq = parse("<bogus>x</bogus><create_memory>kept</create_memory><read_memory>open", TABLE_SCHEMA)
        assert seq.actions == [Create("kept")]
        assert [d.code for d in seq.diagnostics] == [DiagnosticCode.UNKNOWN_TAG, DiagnosticCode.UNCLOSED_TAG]

    def test_other_schema_tags_are_unknown(self):
        seq = parse("<add_memory>x</add_memory>", TABLE_SCHEMA)
        assert seq.actions == []
        assert seq.diagnostics[0].code is DiagnosticCode.UNKNOWN_TAG

    def test_empty_create_payload(self):
        seq = parse("<create_memory>  </create_memory>", TABLE_SCHEMA)
        assert seq.actions == []
        assert seq.diagnostics[0].code is DiagnosticCode.EMPTY_PAYLOAD

    def test_answer_extracted(self):
        seq = parse("thinking...\n<answer>Paris</answer>", TABLE_SCHEMA)
        assert seq.final_answer == "Paris"
        assert seq.free_text == "thinking..."

    def test_duplicate_answer_keeps_first(self):
        seq = parse("<answer>a</answer><answer>b</answer>", TABLE_SCHEMA)
        assert seq.final_answer == "a"
        assert seq.diagnostics[0].code is DiagnosticCode.DUPLICATE_ANSWER

    def test_order_preserved(self):
        text = (
            "<delete_memory>0</delete_memory>"
            "<create_memory>b</create_memory>"
            "<read_memory>c</read_memory>"
            "<create_memory>d</create_memory>"
        )
        assert parse(text, TABLE_SCHEMA).actions == [Delete(0), Create("b"), Read("c"), Create("d")]

    def test_first_closing_tag_ends_payload(self):
        seq = parse("<create_memory>a <create_memory>b</create_memory> c</create_memory>", TABLE_SCHEMA)
        assert seq.actions == [Create("a <create_memory>b")]

    def test_free_text_without_tags(self):
        seq = parse("  Just Paris.  ", TABLE_SCHEMA)
        assert seq.actions == [] and seq.final_answer is None
        assert seq.free_text == "Just Paris."

    @settings(max_examples=300, deadline=None)
    @given(text=st.text())
    def test_parse_never_raises(self, text):
        for schema in SCHEMAS:
            parse(text, schema)

    @settings(max_examples=200, deadline=None)
    @given(text=st.text(alphabet=st.sampled_from(list("<>/_ acdeimnoqrty:0123456789\n"))))
    def test_parse_never_raises_on_tag_soup(self, text):
        for schema in SCHEMAS:
            parse(text, schema)


class TestRender:
    def test_modify_memory_layout(self):
        assert render(ActionSequence([Update(1, "b")]), PROMPT_SCHEMA) == "<modify_memory>\nMemory 1: b\n</modify_memory>"

    def test_create_round_trip(self):
        for schema in SCHEMAS:
            assert parse(render(ActionSequence([Create("a")]), schema), schema).actions == [Create("a")]

    def test_empty_payload_unrenderable(self):
        with pytest.raises(UnrenderableAction):
            render(ActionSequence([Create("  ")]), TABLE_SCHEMA)
        with pytest.raises(UnrenderableAction):
            render(ActionSequence([Update(0, "")]), PROMPT_SCHEMA)

    def test_negative_id_unrenderable(self):
        with pytest.raises(UnrenderableAction):
            render(ActionSequence([Delete(-1)]), TABLE_SCHEMA)

    def test_answer_rendered_last(self):
        text = render(ActionSequence([Read("q")], final_answer="42"), TABLE_SCHEMA)
        assert text.endswith("<answer>42</answer>")


_SAFE = "abcdefghijklmnopqrstuvwxyz ABCXYZ0123456789.,;:'?!-"


def _payload(rng: random.Random) -> str:
    body = "".join(rng.choice(_SAFE) for _ in range(rng.randint(1, 30))).strip()
    return body or "x"


def _random_sequence(rng: random.Random, n: int) -> ActionSequence:
    actions = []
    for _ in range(n):
        kind = rng.choice(list(ActionKind))
        if kind is ActionKind.CREATE:
            actions.append(Create(_payload(rng)))
        elif kind is ActionKind.READ:
            actions.append(Read(_payload(rng)))
        elif kind is ActionKind.UPDATE:
            actions.append(Update(rng.randrange(100), _payload(rng)))
        elif kind is ActionKind.DELETE:
            actions.append(Delete(rng.randrange(100)))
        else:
            actions.append(Scratchpad(_payload(rng) if rng.random() < 0.8 else ""))
    answer = _payload(rng) if rng.random() < 0.3 else None
    return ActionSequence(actions=actions, final_answer=answer)


class TestRoundTrip:
    @pytest.mark.parametrize("schema", SCHEMAS, ids=["table", "prompt"])
    def test_five_action_sequences(self, schema):
        rng = random.Random(5)
        for _ in range(200):
            seq = _random_sequence(rng, 5)
            assert parse(render(seq, schema), schema).same_actions(seq)

    @pytest.mark.parametrize("schema", SCHEMAS, ids=["table", "prompt"])
    def test_1000_random_sequences(self, schema):
        rng = random.Random(99)
        for _ in range(1000):
            seq = _random_sequence(rng, rng.randint(0, 8))
            parsed = parse(render(seq, schema), schema)
            assert parsed.actions == seq.actions
            assert parsed.final_answer == seq.final_answer
            assert parsed.diagnostics == []


class TestActionRecords:
    def test_dict_round_trip(self):
        for action in [Create("a"), Read("q"), Update(3, "b"), Delete(4), Scratchpad("")]:
            assert action_from_dict(action_to_dict(action)) == action

    def test_counts(self):
        seq = ActionSequence([Create("a"), Create("b"), Read("q")])
        assert seq.counts() == {"create": 2, "read": 1, "update": 0, "delete": 0, "scratchpad": 0}

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            action_from_dict({"kind": "teleport"})
