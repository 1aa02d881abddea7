"""Rewards, group advantages, surrogate objective and action analytics."""
from atommem.reward.grpo import (
    CLIP_HIGH,
    CLIP_LOW,
    GROUP_SIZE,
    GroupAdvantage,
    compute_group_advantages,
    group_advantage,
    grpo_surrogate,
    spread_advantage,
    surrogate_terms,
)
from atommem.reward.scoring import em_reward, f1_score, normalize_answer, per_question_em, task_reward
from atommem.reward.stats import ActionStats, action_stats, action_stats_csv, write_action_stats_csv

__all__ = [
    "CLIP_HIGH",
    "CLIP_LOW",
    "GROUP_SIZE",
    "GroupAdvantage",
    "compute_group_advantages",
    "group_advantage",
    "grpo_surrogate",
    "spread_advantage",
    "surrogate_terms",
    "em_reward",
    "f1_score",
    "normalize_answer",
    "per_question_em",
    "task_reward",
    "ActionStats",
    "action_stats",
    "action_stats_csv",
    "write_action_stats_csv",
]
