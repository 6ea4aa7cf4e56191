"""Play-service domain model: task sets, live sessions, earnings.

A participant session owns a set of ten tasks: for each of five domains,
one easy (4 truths / 6 actions) and one hard (12 truths / 16 actions)
instance. Tasks are played in sequence; a prediction closes the current
task and opens the next. Earnings for a completed set follow

    total = 25 + success_rate * 15 - action_count * 0.1

where the action count covers game actions only (predictions are free).
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field

from ..books import session_preamble
from ..envmodel import SeedConfig
from ..errors import InsufficientTaskPool
from ..llmgen.mock import render_plain_book
from ..simulator import SUCCESS, Move, Session
from ..taskgen import EASY, HARD, GenParams, TaskInstance, generate_tasks

BASE_EARNINGS = 25.0
SUCCESS_BONUS = 15.0
ACTION_PENALTY = 0.1

TASKS_PER_SET = 10
DOMAINS_PER_SET = 5


@dataclass(frozen=True)
class Earnings:
    base: float
    success_component: float
    action_penalty: float

    @property
    def total(self) -> float:
        return self.base + self.success_component - self.action_penalty

    @classmethod
    def compute(cls, success_rate: float, action_count: int) -> "Earnings":
        return cls(
            base=BASE_EARNINGS,
            success_component=success_rate * SUCCESS_BONUS,
            action_penalty=action_count * ACTION_PENALTY,
        )

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "success_component": self.success_component,
            "action_penalty": self.action_penalty,
            "total": self.total,
        }


@dataclass
class TaskSlot:
    index: int
    domain: str
    difficulty: str  # "easy" | "hard"
    task: TaskInstance
    book: str
    outcome: str | None = None  # terminal simulator outcome once done
    action_count: int = 0

    @property
    def done(self) -> bool:
        return self.outcome is not None


@dataclass
class PlaySession:
    """One participant's task-set assignment plus live play state."""

    session_id: str
    participant_id: str
    slots: list[TaskSlot]
    created_at: float = field(default_factory=time.time)
    current: int = 0
    live: Session | None = None  # simulator session for the active slot
    turn_times: list[float] = field(default_factory=list)
    request_cache: dict[str, dict] = field(default_factory=dict)
    low_quality: bool | None = None

    @property
    def finished(self) -> bool:
        return self.current >= len(self.slots)

    @property
    def active_slot(self) -> TaskSlot | None:
        return None if self.finished else self.slots[self.current]

    def success_rate(self) -> float:
        done = [s for s in self.slots if s.done]
        if not done:
            return 0.0
        return sum(1 for s in done if s.outcome == SUCCESS) / len(done)

    def total_actions(self) -> int:
        live_count = self.live.action_count if self.live is not None else 0
        return sum(s.action_count for s in self.slots if s.done) + live_count

    def earnings(self) -> Earnings:
        return Earnings.compute(self.success_rate(), self.total_actions())


def draw_task_set(
    configs: dict[str, SeedConfig],
    seed: str,
    *,
    max_resamples: int = 100,
) -> list[TaskSlot]:
    """Ten tasks: for five domains, one easy and one hard each, shuffled."""
    if len(configs) < DOMAINS_PER_SET:
        raise InsufficientTaskPool(
            f"{len(configs)} registered environment(s); {DOMAINS_PER_SET} needed"
        )
    rng = random.Random(f"taskset:{seed}")
    domains = sorted(configs)[:DOMAINS_PER_SET]
    slots: list[TaskSlot] = []
    for domain in domains:
        cfg = configs[domain]
        for difficulty, (n_truth, n_action) in (("easy", EASY), ("hard", HARD)):
            params = GenParams(
                n_truth=n_truth,
                n_action=n_action,
                count=1,
                rng_seed=rng.getrandbits(48),
                max_resamples=max_resamples,
            )
            task = generate_tasks(cfg, params)[0]
            book = render_plain_book(cfg.rule_out_map(task.truths, task.actions))
            slots.append(TaskSlot(
                index=0, domain=domain, difficulty=difficulty, task=task, book=book,
            ))
    rng.shuffle(slots)
    for i, slot in enumerate(slots):
        slot.index = i
    return slots


def open_slot(session: PlaySession, cfg_lookup) -> Session:
    """Start the simulator session for the current slot."""
    slot = session.active_slot
    assert slot is not None
    cfg = cfg_lookup(slot.domain)
    live = Session(
        slot.task,
        slot.book,
        rule_out_map=cfg.rule_out_map(slot.task.truths, slot.task.actions),
    )
    session.live = live
    return live


def quality_flag(
    session: PlaySession,
    *,
    min_median_latency: float = 2.0,
    chance_margin: float = 0.0,
) -> bool:
    """True when play looks like fast random clicking.

    Flags sessions whose median per-turn latency is under the threshold
    and whose success rate is no better than chance (the mean of the
    per-task 1/n_truth baselines).
    """
    if len(session.turn_times) < 2:
        return False
    gaps = [b - a for a, b in zip(session.turn_times, session.turn_times[1:])]
    median_latency = statistics.median(gaps)
    chance = statistics.mean(1.0 / len(s.task.truths) for s in session.slots)
    return median_latency < min_median_latency and (
        session.success_rate() <= chance + chance_margin
    )


def session_view(session: PlaySession) -> dict:
    """Client-facing state: everything a player may see, nothing more."""
    slots = [
        {
            "index": s.index,
            "domain": s.domain,
            "difficulty": s.difficulty,
            "done": s.done,
            "outcome": s.outcome if s.done else None,
            "action_count": s.action_count if s.done else None,
        }
        for s in session.slots
    ]
    view: dict = {
        "session_id": session.session_id,
        "participant_id": session.participant_id,
        "finished": session.finished,
        "tasks": slots,
        "total_actions": session.total_actions(),
    }
    slot = session.active_slot
    if slot is not None and session.live is not None:
        live = session.live
        observations = [
            {"action": t.parsed.name, "observation": t.observation}
            for t in live.turn_log
            if isinstance(t.parsed, Move) and t.observation is not None
        ]
        view["current"] = {
            "index": slot.index,
            "domain": slot.domain,
            "difficulty": slot.difficulty,
            "truths": list(slot.task.truths),
            "actions": [
                {"name": a, "used": a not in live.remaining_actions}
                for a in slot.task.actions
            ],
            "observations": observations,
            "action_count": live.action_count,
        }
    return view


def preamble_for_slot(slot: TaskSlot) -> str:
    return session_preamble(slot.task, slot.book)
