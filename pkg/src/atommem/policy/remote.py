"""Remote chat-completion policy (OpenAI-compatible /chat/completions).

Each turn is a fresh system + user message pair; the template already
carries the scratchpad and retrieved memory, so no chat history accrues.
Connection errors, timeouts, HTTP 5xx and 429 are retried with exponential
backoff. Any other 4xx or an undecodable body fails the turn at once.
"""
from __future__ import annotations

import logging
import threading
from typing import TYPE_CHECKING, Any

import backoff
import requests

from atommem.config import EpisodeConfig, PolicyConfig
from atommem.errors import RequestTimeoutError, TransportError
from atommem.policy.base import Policy
from atommem.policy.prompts import render_messages

if TYPE_CHECKING:
    from atommem.environment.episode import Observation
    from atommem.tasks.schema import TaskInstance

logger = logging.getLogger(__name__)

_BODY_EXCERPT = 200
_RETRYABLE = (requests.ConnectionError, requests.Timeout, requests.HTTPError)


def _log_retry(details: dict) -> None:
    logger.warning(
        "Chat completion failed (%s); retry %d in %.1fs",
        details.get("exception"), details["tries"], details.get("wait") or 0.0,
    )


class RemotePolicy(Policy):
    name = "remote"

    def __init__(self, config: PolicyConfig, episode: EpisodeConfig) -> None:
        self.config = config
        self.episode = episode
        self._slots = threading.BoundedSemaphore(config.max_in_flight)

    def _payload(self, messages: list[dict[str, str]]) -> dict[str, Any]:
        return {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
            "max_tokens": self.config.max_tokens,
        }

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def _post_once(self, payload: dict[str, Any]) -> str:
        endpoint = self.config.endpoint
        r = requests.post(
            endpoint,
            json=payload,
            headers=self._headers(),
            timeout=(self.config.connect_timeout_s, self.config.read_timeout_s),
        )
        if r.status_code >= 500 or r.status_code == 429:
            raise requests.HTTPError(f"HTTP {r.status_code}", response=r)
        if r.status_code >= 400:
            raise TransportError(endpoint, f"HTTP {r.status_code}: {r.text[:_BODY_EXCERPT]}")
        try:
            data = r.json()
        except ValueError as e:
            raise TransportError(endpoint, f"malformed JSON body: {r.text[:_BODY_EXCERPT]!r}") from e
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise TransportError(endpoint, f"unexpected response shape: {str(data)[:_BODY_EXCERPT]}") from e
        return content or ""

    def complete(self, messages: list[dict[str, str]]) -> str:
        """One chat completion with retries. Raises TransportError or RequestTimeoutError."""
        post = backoff.on_exception(
            backoff.expo,
            _RETRYABLE,
            max_tries=self.config.max_retries + 1,
            factor=self.config.backoff_factor_s,
            max_value=self.config.backoff_max_s,
            jitter=None,
            on_backoff=_log_retry,
            logger=None,
        )(self._post_once)

        with self._slots:
            try:
                return post(self._payload(messages))
            except requests.Timeout as e:
                raise RequestTimeoutError(self.config.endpoint, self.config.read_timeout_s) from e
            except requests.RequestException as e:
                raise TransportError(self.config.endpoint, str(e)) from e

    def respond(self, task: "TaskInstance", observation: "Observation", prompt: str) -> str:
        return self.complete(render_messages(task, observation, self.episode))


def remote_policy(config: PolicyConfig, episode: EpisodeConfig) -> RemotePolicy:
    return RemotePolicy(config, episode)
