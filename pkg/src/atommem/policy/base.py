"""Policy interface: observation + rendered prompt in, raw text out.

A policy never touches MemoryState. Its only effect on the environment is
the text it returns, which the environment parses into actions.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from atommem.environment.episode import Observation
    from atommem.tasks.schema import TaskInstance


@dataclass(frozen=True)
class PolicyTurn:
    rendered_prompt: str
    response: str


class Policy(ABC):
    name: str = "abstract"

    @abstractmethod
    def respond(self, task: "TaskInstance", observation: "Observation", prompt: str) -> str:
        """Return the policy's raw response text for one step."""

    def turn(self, task: "TaskInstance", observation: "Observation", prompt: str) -> PolicyTurn:
        return PolicyTurn(rendered_prompt=prompt, response=self.respond(task, observation, prompt))
