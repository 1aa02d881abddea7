import csv
import io
import json

import pytest

from atommem.environment.trajectory import TrajectoryRecord, load_transcript, run_episode
from atommem.policy.heuristic import heuristic_policy
from atommem.protocol.actions import ActionSequence, Create, Delete, Read
from atommem.reward.stats import KINDS, action_stats, action_stats_csv, write_action_stats_csv


def _record(creates: int, reads: int = 0, train_step=None) -> TrajectoryRecord:
    seq = ActionSequence([Create(f"c{i}") for i in range(creates)] + [Read("q")] * reads)
    return TrajectoryRecord(task_id="t", answers=[], per_step_actions=[seq], train_step=train_step)


class TestActionStats:
    def test_mean_creates(self):
        stats = action_stats([_record(3), _record(5)])
        assert stats.overall["create"] == 4.0
        assert stats.episodes == 2

    def test_empty_episode_contributes_zero(self):
        stats = action_stats([_record(0), _record(4)])
        assert stats.overall["create"] == 2.0
        assert stats.overall["delete"] == 0.0

    def test_no_records(self):
        assert action_stats([]).overall == {k: 0.0 for k in KINDS}

    def test_per_train_step_series(self):
        stats = action_stats([_record(2, train_step=0), _record(4, train_step=0), _record(7, train_step=10)])
        assert stats.per_train_step[0] == (2, {**{k: 0.0 for k in KINDS}, "create": 3.0})
        assert stats.per_train_step[10][1]["create"] == 7.0

    def test_counts_span_steps(self):
        record = TrajectoryRecord(
            task_id="t",
            answers=[],
            per_step_actions=[ActionSequence([Create("a"), Delete(0)]), ActionSequence([Create("b")])],
        )
        assert record.action_counts == {"create": 2, "read": 0, "update": 0, "delete": 1, "scratchpad": 0}


class TestCsv:
    def test_single_row_without_train_steps(self):
        rows = list(csv.reader(io.StringIO(action_stats_csv(action_stats([_record(3), _record(5)])))))
        assert rows[0] == ["train_step", "episodes", *KINDS]
        assert rows[1][:3] == ["all", "2", "4.000000"]
        assert len(rows) == 2

    def test_one_row_per_train_step(self, tmp_path):
        stats = action_stats([_record(1, train_step=20), _record(2, train_step=0)])
        path = write_action_stats_csv(tmp_path / "s.csv", stats)
        rows = list(csv.reader(path.open()))
        assert [r[0] for r in rows[1:]] == ["0", "20"]


class TestTranscriptRecount:
    def test_counts_from_transcript_equal_counts_from_actions(self, two_chunk_task, word_config, tmp_path):
        path = tmp_path / f"{two_chunk_task.task_id}.jsonl"
        live = run_episode(two_chunk_task, word_config, heuristic_policy(word_config), transcript_path=path)

        recount = {k: 0 for k in KINDS}
        for line in path.read_text().splitlines():
            for action in json.loads(line)["actions"]:
                recount[action["kind"]] += 1

        assert recount == live.action_counts
        assert load_transcript(path).action_counts == live.action_counts
        assert action_stats([load_transcript(path)]).overall == pytest.approx(
            {k: float(v) for k, v in live.action_counts.items()}
        )
