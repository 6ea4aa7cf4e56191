"""Built-in players for the episode runner.

OracleAgent plays optimally using only player-visible information (the
symbolic rule-out mapping plus the observations in the transcript);
RandomAgent is the floor baseline; ScriptedAgent replays a fixed reply
list (test harness use).
"""

from __future__ import annotations

import random

from .envmodel import SeedConfig
from .oracle import OptimalSearcher
from .simulator import AgentReply, extract_observations
from .taskgen import TaskInstance


class ScriptedAgent:
    """Replays canned replies in order; repeats the last one if exhausted."""

    def __init__(self, replies: list[str], name: str = "scripted"):
        self.replies = list(replies)
        self.name = name
        self._i = 0

    def reply(self, messages: list[dict]) -> AgentReply:
        text = self.replies[min(self._i, len(self.replies) - 1)]
        self._i += 1
        return AgentReply(text=text)


class RandomAgent:
    """Takes uniformly random actions, then guesses a uniformly random truth."""

    def __init__(self, task: TaskInstance, seed: int = 0, name: str = "random"):
        self.task = task
        self.rng = random.Random(f"random-agent:{seed}:{task.task_id}")
        self.name = name
        self._turns = 0

    def reply(self, messages: list[dict]) -> AgentReply:
        self._turns += 1
        if self._turns <= len(self.task.actions):
            choice = self.rng.choice(self.task.actions)
            return AgentReply(text=f"<ACTION>{choice}</ACTION>")
        guess = self.rng.choice(self.task.truths)
        return AgentReply(text=f"<ANSWER>{guess}</ANSWER>")


class OracleAgent:
    """Optimal player: tracks candidates from observed rule-outs and takes
    the expectimax-best action until a stop state, then predicts.

    Consumes nothing beyond what a player legitimately sees: the symbolic
    book (rule-out mapping restricted to the task) and the observation
    lines accumulated in the transcript.
    """

    def __init__(
        self,
        task: TaskInstance,
        rule_out_map: dict[str, dict[str, tuple[str, ...]]],
        name: str = "oracle",
    ):
        self.task = task
        self.name = name
        self.searcher = OptimalSearcher(task.truths, task.actions, rule_out_map)

    @classmethod
    def for_task(cls, cfg: SeedConfig, task: TaskInstance, name: str = "oracle") -> "OracleAgent":
        return cls(task, cfg.rule_out_map(task.truths, task.actions), name=name)

    def reply(self, messages: list[dict]) -> AgentReply:
        s = self.searcher
        tmask = s.full_truth_mask
        amask = s.full_action_mask
        for action, label in extract_observations(messages):
            tmask &= ~s.state_rule_out_mask(action, label)
            amask &= ~(1 << s.actions.index(action))
        _, best = s.search(tmask, amask)
        if best is not None:
            return AgentReply(text=f"<ACTION>{s.actions[best]}</ACTION>")
        remaining = [t for i, t in enumerate(s.truths) if tmask >> i & 1]
        if len(remaining) == 1:
            return AgentReply(text=f"<ANSWER>{remaining[0]}</ANSWER>")
        # Stop state with several candidates: the one no remaining action
        # can rule out is the only one that can still be valid.
        reach = s.reachable_rule_outs(amask)
        for i, t in enumerate(s.truths):
            if (tmask >> i & 1) and not (reach >> i & 1):
                return AgentReply(text=f"<ANSWER>{t}</ANSWER>")
        return AgentReply(text=f"<ANSWER>{remaining[0]}</ANSWER>")
