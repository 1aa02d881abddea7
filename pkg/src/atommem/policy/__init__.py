"""Policies: scripted replay, rule-based heuristic, remote chat model."""
from atommem.policy.base import Policy, PolicyTurn
from atommem.policy.heuristic import HeuristicPolicy, heuristic_policy
from atommem.policy.prompts import render_messages, render_prompt, system_prompt, user_prompt
from atommem.policy.remote import RemotePolicy, remote_policy
from atommem.policy.replay import ReplayPolicy, load_scripts, make_script, replay_policy, write_scripts

__all__ = [
    "Policy",
    "PolicyTurn",
    "HeuristicPolicy",
    "heuristic_policy",
    "render_messages",
    "render_prompt",
    "system_prompt",
    "user_prompt",
    "RemotePolicy",
    "remote_policy",
    "ReplayPolicy",
    "load_scripts",
    "make_script",
    "replay_policy",
    "write_scripts",
]
