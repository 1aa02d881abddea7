"""Group-relative advantages and the clipped surrogate objective.

Pure numpy computations over given numbers: no gradients, no optimizer, no
model. Advantages are mean-subtracted only (no std normalization), and each
trajectory's scalar advantage is shared by all of its output tokens.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from atommem.environment.trajectory import TrajectoryRecord
from atommem.errors import BadGroupSize, LengthMismatch, NonPositiveClip

CLIP_LOW = 0.2
CLIP_HIGH = 0.28
GROUP_SIZE = 16
ZERO_SUM_TOL = 1e-9


@dataclass
class GroupAdvantage:
    group_id: str
    rewards: list[float]
    advantages: list[float]


def group_advantage(rewards: Sequence[float]) -> list[float]:
    """A_i = r_i - mean(r)."""
    if len(rewards) < 1:
        raise ValueError("group_advantage needs at least one reward")
    r = np.asarray(rewards, dtype=np.float64)
    return (r - r.mean()).tolist()


def compute_group_advantages(
    rewards: Sequence[float],
    group_size: int = GROUP_SIZE,
    prefix: str = "group",
) -> list[GroupAdvantage]:
    """Split a flat reward list into consecutive groups of *group_size*.

    Raises BadGroupSize unless the count is a positive multiple of the group size.
    """
    if group_size < 1 or not rewards or len(rewards) % group_size:
        raise BadGroupSize(len(rewards), group_size)
    groups: list[GroupAdvantage] = []
    for g, start in enumerate(range(0, len(rewards), group_size)):
        chunk = [float(x) for x in rewards[start:start + group_size]]
        adv = group_advantage(chunk)
        total = float(np.sum(adv))
        if abs(total) > ZERO_SUM_TOL:
            raise AssertionError(f"advantages of {prefix}-{g} sum to {total}, not 0")
        groups.append(GroupAdvantage(group_id=f"{prefix}-{g}", rewards=chunk, advantages=adv))
    return groups


def surrogate_terms(
    ratios: Sequence[float],
    advantages: Sequence[float],
    clip_low: float = CLIP_LOW,
    clip_high: float = CLIP_HIGH,
    clip: bool = True,
) -> np.ndarray:
    """Per-sample min(rho*A, clip(rho, 1-clip_low, 1+clip_high)*A); rho*A when clip is off."""
    if len(ratios) != len(advantages):
        raise LengthMismatch("ratios vs advantages", len(ratios), len(advantages))
    if clip_low <= 0 or clip_high <= 0:
        raise NonPositiveClip(clip_low, clip_high)
    rho = np.asarray(ratios, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    unclipped = rho * adv
    if not clip:
        return unclipped
    clipped = np.clip(rho, 1.0 - clip_low, 1.0 + clip_high) * adv
    return np.minimum(unclipped, clipped)


def grpo_surrogate(
    ratios: Sequence[float],
    advantages: Sequence[float],
    clip_low: float = CLIP_LOW,
    clip_high: float = CLIP_HIGH,
    beta: float = 0.0,
    kl_terms: Optional[Sequence[float]] = None,
    clip: bool = True,
) -> float:
    """Mean clipped surrogate minus beta * mean(kl_terms). beta defaults to 0."""
    terms = surrogate_terms(ratios, advantages, clip_low, clip_high, clip)
    if terms.size == 0:
        raise ValueError("grpo_surrogate needs at least one sample")
    objective = float(terms.mean())
    if beta == 0.0:
        return objective
    if kl_terms is None:
        raise ValueError("kl_terms are required when beta != 0")
    if len(kl_terms) != len(ratios):
        raise LengthMismatch("kl_terms vs ratios", len(kl_terms), len(ratios))
    return objective - beta * float(np.mean(np.asarray(kl_terms, dtype=np.float64)))


def spread_advantage(record: TrajectoryRecord, advantage: float) -> list[tuple[int, int, float]]:
    """(step, output tokens, advantage) for every output span of the trajectory."""
    return [(step, length, float(advantage)) for step, length in record.token_spans]
