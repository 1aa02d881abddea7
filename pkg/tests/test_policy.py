import json
import random

import pytest

from atommem.config import EpisodeConfig
from atommem.environment.episode import Observation, reset
from atommem.environment.trajectory import run_episode
from atommem.errors import PolicyError, ScriptExhausted
from atommem.policy.heuristic import HeuristicPolicy, best_span, heuristic_policy, keywords, split_sentences
from atommem.policy.prompts import EMPTY, render_messages, render_prompt, system_prompt
from atommem.policy.replay import WRONG_ANSWER, ReplayPolicy, load_scripts, make_script, write_scripts
from atommem.protocol.parser import PROMPT_SCHEMA, TABLE_SCHEMA, parse
from atommem.reward.scoring import task_reward

from tests.conftest import make_task

SECTION_ORDER = [
    "Current step:",
    "This is the question you need to solve:",
    "This is your scratchpad from the previous turn.",
    "This is the current query to retrieve memory from the database:",
    "This is the current memory related to the query:",
    "Problems with your previous response:",
    "Tips:",
    "This is the article:",
]


class TestPrompt:
    def test_streaming_sections_in_order(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        prompt = render_prompt(two_chunk_task, obs, word_config)
        positions = [prompt.index(header) for header in SECTION_ORDER]
        assert positions == sorted(positions)
        for header in SECTION_ORDER:
            assert prompt.count(header) == 1
        assert prompt.endswith(obs.env_chunk)

    def test_empty_memory_placeholder(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        prompt = render_prompt(two_chunk_task, obs, word_config)
        assert f"This is the current memory related to the query:\n\n{EMPTY}" in prompt

    def test_deterministic(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        assert render_prompt(two_chunk_task, obs, word_config) == render_prompt(two_chunk_task, obs, word_config)

    def test_answer_turn_drops_article(self, two_chunk_task, word_config):
        obs = Observation(step=2, scratchpad="pad", retrieved=[(0, "Alpha owns the red kite.")],
                          pending_question="Who owns the red kite?", query="red kite")
        prompt = render_prompt(two_chunk_task, obs, word_config)
        assert "This is the article:" not in prompt
        assert "This is the question you need to answer now:\n\nWho owns the red kite?" in prompt
        assert "Memory 0: Alpha owns the red kite." in prompt
        assert "<answer></answer>" in prompt

    def test_multiple_questions_numbered(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        prompt = render_prompt(two_chunk_task, obs, word_config)
        assert "Question 3: How many marbles?" in prompt

    def test_invariant_to_entry_insertion_order(self, two_chunk_task, word_config):
        retrieved = [(4, "four"), (1, "one")]
        a = Observation(step=1, scratchpad="", retrieved=retrieved, env_chunk="c")
        b = Observation(step=1, scratchpad="", retrieved=list(retrieved), env_chunk="c")
        assert render_prompt(two_chunk_task, a, word_config) == render_prompt(two_chunk_task, b, word_config)

    def test_fresh_two_message_chat(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        messages = render_messages(two_chunk_task, obs, word_config)
        assert [m["role"] for m in messages] == ["system", "user"]

    @pytest.mark.parametrize("schema", [TABLE_SCHEMA, PROMPT_SCHEMA], ids=["table", "prompt"])
    def test_system_prompt_names_schema_tags(self, schema):
        text = system_prompt(schema)
        for tag in schema.tags.values():
            assert f"<{tag}>" in text

    def test_prompt_schema_system_text(self):
        text = system_prompt(PROMPT_SCHEMA)
        assert text.startswith(
            "You are presented with a section of an article and a previous memory. "
            "Please learn the provided section carefully and manage your memory to answer questions."
        )
        assert "short-term memory is updated using <update_memory>." in text
        assert 'You need to enter the memory index "Memory i:" to specify which memory to modify.' in text
        assert "You must delete duplicate memory entries!" in text
        assert "<update_query>\ndance partner; Yulia Zagoruychenko.\n</update_query>" in text
        assert "<delete_memory>\nMemory 2\n</delete_memory>" in text

    def test_table_schema_examples_use_table_format(self):
        text = system_prompt(TABLE_SCHEMA)
        assert "<read_memory>dance partner; Yulia Zagoruychenko.</read_memory>" in text
        assert "<delete_memory>2</delete_memory>" in text
        assert "short-term memory is updated using <scratchpad>." in text

    def test_tips_in_streaming_prompt(self, two_chunk_task):
        config = EpisodeConfig(chunk_size_tokens=12, tokens_per_word=1.0, schema="prompt")
        _, obs = reset(two_chunk_task, config)
        prompt = render_prompt(two_chunk_task, obs, config)
        assert (
            "Tips:\nDO NOT repeatedly update the query. If you don't have the desired memory, it means "
            "the entry does not exist in the knowledge base. AVOID using update_query multiple times "
            "within a single response"
        ) in prompt
        assert "composite queries are best composed of keywords." in prompt


class TestReplay:
    def test_returns_script_in_order(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        policy = ReplayPolicy(["a", "b"])
        assert policy.respond(two_chunk_task, obs, "") == "a"
        assert policy.respond(two_chunk_task, obs, "") == "b"
        assert policy.turns_used == 2
        with pytest.raises(ScriptExhausted):
            policy.respond(two_chunk_task, obs, "")

    def test_turn_pairs_prompt_and_response(self, two_chunk_task, word_config):
        _, obs = reset(two_chunk_task, word_config)
        turn = ReplayPolicy(["x"]).turn(two_chunk_task, obs, "the prompt")
        assert (turn.rendered_prompt, turn.response) == ("the prompt", "x")

    @pytest.mark.parametrize("schema", ["table", "prompt"])
    def test_gold_script_rewards_one(self, two_chunk_task, schema):
        config = EpisodeConfig(chunk_size_tokens=12, tokens_per_word=1.0, schema=schema)
        record = run_episode(two_chunk_task, config, ReplayPolicy(make_script(two_chunk_task, config, "gold")))
        assert task_reward(record.answers, two_chunk_task.gold) == 1.0

    def test_wrong_script_rewards_zero(self, two_chunk_task, word_config):
        record = run_episode(two_chunk_task, word_config, ReplayPolicy(make_script(two_chunk_task, word_config, "wrong")))
        assert record.answers == [WRONG_ANSWER] * 3
        assert task_reward(record.answers, two_chunk_task.gold) == 0.0

    def test_gold_script_parses_cleanly(self, two_chunk_task, word_config):
        for text in make_script(two_chunk_task, word_config, "gold"):
            assert parse(text, TABLE_SCHEMA).diagnostics == []

    def test_script_file_round_trip(self, two_chunk_task, word_config, tmp_path):
        scripts = {two_chunk_task.task_id: make_script(two_chunk_task, word_config, "gold")}
        path = write_scripts(tmp_path / "s.json", scripts)
        assert load_scripts(path) == scripts

    @pytest.mark.parametrize("content", ["not json", "[1, 2]", '{"t": [1]}'])
    def test_bad_script_file(self, tmp_path, content):
        path = tmp_path / "s.json"
        path.write_text(content)
        with pytest.raises(PolicyError):
            load_scripts(path)


DISTRACTORS = [
    "Migrating geese fly south across the marshes every October.",
    "Granite quarries supplied stone for many cathedrals.",
    "Orchestras often tune to an A above middle C.",
    "Volcanic soil makes vineyards unusually fertile.",
    "Trams returned to several European cities after 1990.",
    "Honeybees communicate direction through a waggle dance.",
    "Glaciers carve U-shaped valleys over millennia.",
    "Lighthouses once relied on whale oil lamps.",
]
COLORS = ["blue", "red", "green", "amber", "violet"]
CODES = ["zebra42", "falcon7", "otter19", "maple88", "cobalt3"]


def _toy_task(rng: random.Random, index: int):
    color = rng.choice(COLORS)
    code = rng.choice(CODES)
    needle = f"The secret code of the {color} door is {code}."
    docs = rng.sample(DISTRACTORS, 4)
    pos = rng.randrange(5)
    docs.insert(pos, needle)
    return make_task(
        documents=docs,
        questions=[f"What is the secret code of the {color} door?"],
        gold=[[code]],
        relevant={pos: 0},
        task_id=f"toy-{index:04d}",
    )


class TestHeuristic:
    def test_helpers(self):
        assert keywords("What is the secret code?") == {"secret", "code"}
        assert split_sentences("One. Two!\nThree") == ["One.", "Two!", "Three"]
        assert best_span("The secret code of the blue door is zebra42.", "What is the secret code of the blue door?") == "zebra42"

    def test_keyword_chunk_creates(self, word_config):
        task = _toy_task(random.Random(0), 0)
        policy = heuristic_policy(word_config)
        obs = Observation(step=0, scratchpad="", env_chunk="The secret code is hidden here. Nothing else.")
        seq = parse(policy.respond(task, obs, ""), TABLE_SCHEMA)
        assert len([a for a in seq.actions if a.kind.value == "create"]) >= 1

    def test_no_keyword_chunk_reads_only(self, word_config):
        task = _toy_task(random.Random(0), 0)
        policy = HeuristicPolicy(TABLE_SCHEMA)
        obs = Observation(step=0, scratchpad="", env_chunk="Granite quarries supplied stone.")
        seq = parse(policy.respond(task, obs, ""), TABLE_SCHEMA)
        assert [a.kind.value for a in seq.actions] == ["read"]

    @pytest.mark.parametrize("schema", ["table", "prompt"])
    def test_toy_tasks_solved(self, schema):
        # Whole sentences per chunk: the rule stores sentences, not fragments.
        config = EpisodeConfig(schema=schema)
        policy = heuristic_policy(config)
        rng = random.Random(17)
        rewards = []
        for i in range(20):
            task = _toy_task(rng, i)
            record = run_episode(task, config, policy)
            rewards.append(task_reward(record.answers, task.gold))
        assert sum(rewards) / len(rewards) >= 0.9

    def test_answers_from_top_ranked_entry(self):
        task = _toy_task(random.Random(1), 0)
        question = "Who flies the red kite?"
        # The second entry shares more keywords but ranks lower.
        obs = Observation(step=5, scratchpad="", pending_question=question,
                          retrieved=[(3, "Alpha flies kites."), (1, "The red kite flies with Beta over red kite hills.")])
        seq = parse(HeuristicPolicy(TABLE_SCHEMA).respond(task, obs, ""), TABLE_SCHEMA)
        assert seq.final_answer == "Alpha"

    def test_answer_with_empty_memory(self, word_config):
        task = _toy_task(random.Random(1), 0)
        obs = Observation(step=5, scratchpad="", pending_question=task.questions[0])
        seq = parse(HeuristicPolicy(TABLE_SCHEMA).respond(task, obs, ""), TABLE_SCHEMA)
        assert seq.final_answer == ""


class TestMakeScript:
    def test_length_is_chunks_plus_questions(self, two_chunk_task, word_config):
        for kind in ("gold", "wrong", "empty"):
            assert len(make_script(two_chunk_task, word_config, kind)) == 2 + 3

    def test_written_json_is_sorted(self, two_chunk_task, word_config, tmp_path):
        path = write_scripts(tmp_path / "s.json", {"b": ["1"], "a": ["2"]})
        assert list(json.loads(path.read_text())) == ["a", "b"]
