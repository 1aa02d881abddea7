import json
from collections import Counter
from pathlib import Path

import pytest

from atommem.environment.chunking import WhitespaceTokenCounter
from atommem.errors import (
    InvalidQuestionCount,
    SchemaMismatch,
    SplitLeak,
    TaskFileError,
    TooFewDocs,
    TooFewSamples,
    UnreadableFile,
)
from atommem.tasks.builder import (
    assert_disjoint,
    build_distractor_pool,
    build_multiq,
    build_niah,
    build_tasks,
    sample_question_count,
    split_sources,
)
from atommem.tasks.ingest import ingest, load_sources
from atommem.tasks.schema import SourceQA, TaskInstance, load_tasks, write_tasks

FIXTURES = Path(__file__).parent / "fixtures"


def _sample(i: int, n_relevant: int = 2, n_distractors: int = 5) -> SourceQA:
    return SourceQA(
        source_id=f"s{i}",
        question=f"Question number {i}?",
        gold_answers=[f"answer {i}"],
        relevant_docs=[f"Relevant paragraph {j} for sample {i}." for j in range(n_relevant)],
        distractor_docs=[f"Filler paragraph {j} from sample {i} about nothing in particular." for j in range(n_distractors)],
    )


SAMPLES = [_sample(i) for i in range(12)]
POOL = build_distractor_pool(SAMPLES)


class TestIngest:
    def test_normalized_rows(self):
        report = load_sources(FIXTURES / "normalized.jsonl")
        assert len(report.samples) == 3
        assert report.skipped == 1
        n2 = report.samples[1]
        assert n2.source_id == "n2"
        assert n2.gold_answers == ["cello", "the cello"]
        assert n2.relevant_docs == ["Mara Lind: Mara Lind is a Swedish musician who plays the cello."]
        assert len(n2.distractor_docs) == 2

    def test_plain_string_contexts_are_relevant(self):
        n3 = ingest(FIXTURES / "normalized.jsonl")[2]
        assert len(n3.relevant_docs) == 2
        assert n3.distractor_docs == []

    def test_hotpot_two_gold_eight_distractors(self):
        samples = ingest(FIXTURES / "hotpot.jsonl")
        assert len(samples) == 3
        first = samples[0]
        assert first.source_id == "5a8b57f25542995d1e6f1371"
        assert len(first.relevant_docs) == 2
        assert len(first.distractor_docs) == 8
        assert first.relevant_docs[0].startswith("Arthur's Magazine: Arthur's Magazine (1844-1846)")
        assert "Edited by T.S. Arthur" in first.relevant_docs[0]
        assert samples[2].gold_answers == ["Ida Brenner", "I. Brenner"]

    def test_musique_supporting_paragraphs(self):
        report = load_sources(FIXTURES / "musique.jsonl")
        assert report.skipped == 1   # unanswerable row
        sample = report.samples[0]
        assert sample.relevant_docs == [
            "Anna Verl: Anna Verl was born in Kettenburg.",
            "Kettenburg: Kettenburg lies on the banks of the Salz.",
        ]
        assert sample.gold_answers == ["the Salz", "Salz"]

    def test_json_array_input(self, tmp_path):
        rows = [json.loads(line) for line in (FIXTURES / "normalized.jsonl").read_text().splitlines()]
        path = tmp_path / "rows.json"
        path.write_text(json.dumps(rows))
        assert len(ingest(path)) == 3

    def test_bad_json_lines_counted(self, tmp_path):
        path = tmp_path / "mixed.jsonl"
        good = (FIXTURES / "normalized.jsonl").read_text().splitlines()[0]
        path.write_text(good + "\n{not json\n\n[1, 2]\n")
        report = load_sources(path)
        assert len(report.samples) == 1
        assert report.skipped == 2

    def test_fallback_id_from_line_number(self, tmp_path):
        path = tmp_path / "noid.jsonl"
        path.write_text(json.dumps({"question": "q?", "answers": ["a"], "contexts": ["c"]}) + "\n")
        assert ingest(path)[0].source_id == "noid:1"

    def test_latin1_file_decoded(self, tmp_path):
        path = tmp_path / "latin.jsonl"
        row = {"id": "l1", "question": "Où est la gare de Besançon?", "answers": ["à côté du marché"],
               "contexts": [
                   "La gare de Besançon est à côté du marché, près de l'église. "
                   "Les trains régionaux arrivent à l'heure, sauf les jours de grève. "
                   "Le café de la place est très fréquenté le matin, où l'on sert des crêpes."
               ]}
        path.write_bytes((json.dumps(row, ensure_ascii=False) + "\n").encode("latin-1"))
        samples = ingest(path)
        assert samples[0].gold_answers == ["à côté du marché"]

    def test_no_usable_rows(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"foo": 1}\n{"bar": 2}\n')
        with pytest.raises(SchemaMismatch) as exc:
            load_sources(path)
        assert exc.value.skipped == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(UnreadableFile):
            load_sources(tmp_path / "absent.jsonl")


class TestNiah:
    def test_needles_present_once_and_size(self):
        task = build_niah(SAMPLES[0], POOL, 40, seed=1)
        texts = task.document_texts
        assert len(texts) == task.total_docs == 40
        for doc in SAMPLES[0].relevant_docs:
            assert texts.count(doc) == 1
        assert task.questions == [SAMPLES[0].question]
        assert task.relevant_for(0) and set(task.relevant_for(0)) == set(SAMPLES[0].relevant_docs)
        assert not task.sampled_with_replacement

    def test_only_relevant_docs(self):
        task = build_niah(SAMPLES[0], POOL, 2, seed=3)
        assert sorted(task.document_texts) == sorted(SAMPLES[0].relevant_docs)
        assert all(d.relevant for d in task.documents)

    def test_too_few_docs(self):
        with pytest.raises(TooFewDocs):
            build_niah(SAMPLES[0], POOL, 1, seed=0)

    def test_empty_pool(self):
        with pytest.raises(TooFewDocs):
            build_niah(SAMPLES[0], [], 5, seed=0)

    def test_pool_too_small_samples_with_replacement(self):
        task = build_niah(SAMPLES[0], POOL[:3], 20, seed=0)
        assert task.sampled_with_replacement
        assert len(task.documents) == 20

    def test_relevant_text_never_drawn_as_distractor(self):
        pool = POOL + list(SAMPLES[0].relevant_docs)
        task = build_niah(SAMPLES[0], pool, 50, seed=9)
        for doc in SAMPLES[0].relevant_docs:
            assert task.document_texts.count(doc) == 1

    def test_same_seed_same_order(self):
        for seed in range(100):
            a = build_niah(SAMPLES[1], POOL, 30, seed)
            b = build_niah(SAMPLES[1], POOL, 30, seed)
            assert a == b

    def test_different_seeds_differ(self):
        orders = {tuple(build_niah(SAMPLES[1], POOL, 30, seed).document_texts) for seed in range(100)}
        assert len(orders) == 100

    def test_token_length_scales_linearly(self):
        counter = WhitespaceTokenCounter()
        samples = [_sample(i, n_distractors=100) for i in range(10)]
        pool = build_distractor_pool(samples)
        lengths = {
            n: counter.count("\n\n".join(build_niah(samples[0], pool, n, seed=4).document_texts))
            for n in (200, 400, 800)
        }
        assert lengths[400] / lengths[200] == pytest.approx(2.0, rel=0.2)
        assert lengths[800] / lengths[400] == pytest.approx(2.0, rel=0.2)


class TestMultiq:
    def test_single_question_shape(self):
        task = build_multiq(SAMPLES, 1, 30, seed=0)
        assert len(task.questions) == 1
        assert len(task.documents) == 30
        assert sum(d.relevant for d in task.documents) == 2

    def test_ten_questions_twenty_needles(self):
        task = build_multiq(SAMPLES, 10, 60, seed=5)
        relevant = [d for d in task.documents if d.relevant]
        assert len(relevant) == 20
        assert len({d.text for d in relevant}) == 20
        assert Counter(d.q for d in relevant) == {q: 2 for q in range(10)}

    def test_owner_index_maps_to_question(self):
        task = build_multiq(SAMPLES, 4, 40, seed=11)
        by_id = {s.source_id: s for s in SAMPLES}
        for q, source_id in enumerate(task.source_ids):
            sample = by_id[source_id]
            assert task.questions[q] == sample.question
            assert task.gold[q] == sample.gold_answers
            assert set(task.relevant_for(q)) == set(sample.relevant_docs)

    def test_distinct_questions(self):
        task = build_multiq(SAMPLES, 6, 40, seed=2)
        assert len(set(task.source_ids)) == 6

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            build_multiq(SAMPLES[:3], 4, 40, seed=0)

    @pytest.mark.parametrize("n", [0, 11])
    def test_question_count_range(self, n):
        with pytest.raises(InvalidQuestionCount):
            build_multiq(SAMPLES, n, 40, seed=0)

    def test_question_count_uniform_range(self):
        counts = Counter(sample_question_count(0, i) for i in range(2000))
        assert set(counts) == set(range(1, 11))
        assert max(counts.values()) < 2 * min(counts.values())


class TestBuildTasks:
    def test_ids_and_determinism(self):
        a = build_tasks(SAMPLES, "niah", 20, 5, seed=7)
        b = build_tasks(SAMPLES, "niah", 20, 5, seed=7)
        assert [t.task_id for t in a] == ["niah-0000", "niah-0001", "niah-0002", "niah-0003", "niah-0004"]
        assert a == b

    def test_multiq_bounded(self):
        tasks = build_tasks(SAMPLES, "multiq", 40, 20, seed=1, max_questions=3)
        assert all(1 <= len(t.questions) <= 3 for t in tasks)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            build_tasks(SAMPLES, "bogus", 20, 1, seed=0)

    def test_write_then_load_bytes_stable(self, tmp_path):
        tasks = build_tasks(SAMPLES, "multiq", 30, 3, seed=2)
        p1 = write_tasks(tmp_path / "a.jsonl", tasks)
        p2 = write_tasks(tmp_path / "b.jsonl", load_tasks(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_serialized_keys(self, tmp_path):
        path = write_tasks(tmp_path / "t.jsonl", build_tasks(SAMPLES, "niah", 10, 1, seed=0))
        row = json.loads(path.read_text().splitlines()[0])
        assert {"questions", "gold", "documents", "seed", "total_docs"} <= set(row)
        assert set(row["documents"][0]) == {"text", "relevant", "q"}


class TestTaskFile:
    def test_bad_line_reports_line_number(self, tmp_path):
        path = tmp_path / "t.jsonl"
        good = build_tasks(SAMPLES, "niah", 10, 1, seed=0)[0].to_json_line()
        path.write_text(good + "\n" + '{"task_id": "x"}\n')
        with pytest.raises(TaskFileError, match="line 2"):
            load_tasks(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "t.jsonl"
        path.write_text("\n")
        with pytest.raises(TaskFileError):
            load_tasks(path)

    def test_misaligned_instance_rejected(self):
        with pytest.raises(ValueError):
            TaskInstance(task_id="x", questions=["a?", "b?"], gold=[["a"]], documents=[], seed=0, total_docs=1)


class TestSplit:
    def test_disjoint_and_complete(self):
        train, held = split_sources(SAMPLES, 0.25, seed=0)
        assert len(held) == 3
        assert {s.source_id for s in train} | {s.source_id for s in held} == {s.source_id for s in SAMPLES}
        assert_disjoint(train, held)

    def test_leak_detected(self):
        with pytest.raises(SplitLeak) as exc:
            assert_disjoint(SAMPLES[:5], SAMPLES[4:8])
        assert exc.value.shared == ["s4"]

    def test_deterministic(self):
        assert split_sources(SAMPLES, 0.5, seed=3) == split_sources(SAMPLES, 0.5, seed=3)
