"""Turn-based game engine: moves in, observations out.

A Session wraps one task instance. The agent-facing protocol is a tagged
directive grammar: replies must contain exactly one ``<ACTION>name</ACTION>``
or ``<ANSWER>truth</ANSWER>`` (tags case-insensitive, names matched exactly
after trimming). Anything else is a parse error; a run of consecutive parse
errors fails the episode. Taking an action reveals the realized outcome's
state label; repeating an action re-reveals it and still counts toward the
action total. A prediction ends the session either way. Realized outcomes
for untaken actions, and the valid truth, are never exposed.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .books import session_preamble
from .envmodel import SeedConfig
from .errors import AgentTransportError, InvalidTask, SessionTerminated
from .taskgen import TaskInstance

PARSE_FAILURE_BUDGET = 3  # consecutive unparseable replies before giving up

_DIRECTIVE_RE = re.compile(
    r"<\s*(ACTION|ANSWER)\s*>(.*?)<\s*/\s*\1\s*>",
    re.IGNORECASE | re.DOTALL,
)

MALFORMED = "malformed"
UNKNOWN_ACTION = "unknown_action"
UNKNOWN_TRUTH = "unknown_truth"
MULTIPLE_DIRECTIVES = "multiple_directives"

TAKE_ACTION = "take_action"
PREDICT = "predict"

SUCCESS = "success"
WRONG_PREDICTION = "wrong_prediction"
PARSE_FAILURE = "parse_failure"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class Move:
    kind: str  # TAKE_ACTION or PREDICT
    name: str


@dataclass(frozen=True)
class ParseError:
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class TurnRecord:
    raw_agent_text: str
    parsed: Move | ParseError
    observation: str | None
    timestamp: float

    def to_json(self) -> dict:
        if isinstance(self.parsed, Move):
            parsed = {"kind": self.parsed.kind, "name": self.parsed.name}
        else:
            parsed = {"kind": "parse_error", "reason": self.parsed.reason,
                      "detail": self.parsed.detail}
        return {"raw": self.raw_agent_text, "parsed": parsed,
                "observation": self.observation, "t": self.timestamp}

    @classmethod
    def from_json(cls, doc: dict) -> "TurnRecord":
        p = doc["parsed"]
        if p["kind"] == "parse_error":
            parsed: Move | ParseError = ParseError(p["reason"], p.get("detail", ""))
        else:
            parsed = Move(p["kind"], p["name"])
        return cls(raw_agent_text=doc["raw"], parsed=parsed,
                   observation=doc.get("observation"), timestamp=doc.get("t", 0.0))


@dataclass
class Trajectory:
    task_id: str
    turns: list[TurnRecord]
    outcome: str  # SUCCESS / WRONG_PREDICTION / PARSE_FAILURE / EXHAUSTED
    action_count: int
    tokens_in: int = 0
    tokens_out: int = 0
    tags: dict[str, str] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.outcome == SUCCESS

    def parse_error_turns(self) -> int:
        return sum(1 for t in self.turns if isinstance(t.parsed, ParseError))

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "outcome": self.outcome,
            "action_count": self.action_count,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
            "tags": dict(self.tags),
            "turns": [t.to_json() for t in self.turns],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Trajectory":
        return cls(
            task_id=doc["task_id"],
            turns=[TurnRecord.from_json(t) for t in doc["turns"]],
            outcome=doc["outcome"],
            action_count=doc["action_count"],
            tokens_in=doc.get("tokens_in", 0),
            tokens_out=doc.get("tokens_out", 0),
            tags=dict(doc.get("tags", {})),
        )


def parse_agent_reply(
    text: str,
    actions: Sequence[str] | None = None,
    truths: Sequence[str] | None = None,
) -> Move | ParseError:
    """Extract the single directive from an agent reply.

    Without vocabularies this is a purely structural parse; with them,
    names must match a task element exactly (post whitespace trim).
    """
    matches = _DIRECTIVE_RE.findall(text)
    if not matches:
        return ParseError(MALFORMED, "no directive tag found")
    if len(matches) > 1:
        return ParseError(MULTIPLE_DIRECTIVES, f"{len(matches)} directives found")
    tag, body = matches[0]
    name = body.strip()
    if tag.upper() == "ACTION":
        if actions is not None and name not in actions:
            return ParseError(UNKNOWN_ACTION, name)
        return Move(TAKE_ACTION, name)
    if truths is not None and name not in truths:
        return ParseError(UNKNOWN_TRUTH, name)
    return Move(PREDICT, name)


class Session:
    """Single-owner mutable state for one episode over one task."""

    def __init__(
        self,
        task: TaskInstance,
        knowledge_book: str,
        *,
        rule_out_map: dict[str, dict[str, tuple[str, ...]]] | None = None,
        parse_failure_budget: int = PARSE_FAILURE_BUDGET,
        clock: Callable[[], float] | None = None,
    ):
        if not knowledge_book or not knowledge_book.strip():
            raise InvalidTask("knowledge book must be non-empty")
        if task.valid_truth not in task.truths:
            raise InvalidTask("valid truth missing from task truths")
        if set(task.realized_outcome) != set(task.actions):
            raise InvalidTask("realized outcomes must cover exactly the task actions")
        self.task = task
        self.knowledge_book = knowledge_book
        self._rule_out_map = rule_out_map
        self.turn_log: list[TurnRecord] = []
        self.remaining_actions: set[str] = set(task.actions)
        self.status = "active"
        self.failure_reason: str | None = None
        self.parse_failure_streak = 0
        self.parse_failure_budget = parse_failure_budget
        self.action_count = 0
        self.tokens_in = 0
        self.tokens_out = 0
        self._clock = clock if clock is not None else time.time

    @property
    def active(self) -> bool:
        return self.status == "active"

    @property
    def outcome(self) -> str | None:
        if self.status == "succeeded":
            return SUCCESS
        if self.status == "failed":
            return self.failure_reason
        return None

    def add_token_usage(self, tokens_in: int, tokens_out: int):
        self.tokens_in += tokens_in
        self.tokens_out += tokens_out

    def _finish(self, status: str, reason: str | None = None):
        self.status = status
        self.failure_reason = reason

    def step(self, raw_agent_text: str) -> TurnRecord:
        """Parse one agent reply and apply it; returns the recorded turn."""
        if not self.active:
            raise SessionTerminated(f"session is {self.status}")
        parsed = parse_agent_reply(
            raw_agent_text, actions=self.task.actions, truths=self.task.truths
        )
        return self._record(raw_agent_text, parsed)

    def apply_move(self, move: Move) -> TurnRecord:
        """Structured entry for callers that do not speak the tag grammar."""
        if not self.active:
            raise SessionTerminated(f"session is {self.status}")
        if move.kind == TAKE_ACTION and move.name not in self.task.actions:
            raise KeyError(move.name)
        if move.kind == PREDICT and move.name not in self.task.truths:
            raise KeyError(move.name)
        tag = "ACTION" if move.kind == TAKE_ACTION else "ANSWER"
        return self._record(f"<{tag}>{move.name}</{tag}>", move)

    def _record(self, raw_agent_text: str, parsed: Move | ParseError) -> TurnRecord:
        observation: str | None = None
        if isinstance(parsed, ParseError):
            self.parse_failure_streak += 1
            if self.parse_failure_streak >= self.parse_failure_budget:
                self._finish("failed", PARSE_FAILURE)
        else:
            self.parse_failure_streak = 0
            if parsed.kind == TAKE_ACTION:
                observation = self.task.realized_outcome[parsed.name]
                if self._rule_out_map is not None:
                    ruled = self._rule_out_map[parsed.name][observation]
                    assert self.task.valid_truth not in ruled, (
                        "revealed state rules out the valid truth; instance unsound"
                    )
                self.remaining_actions.discard(parsed.name)
                self.action_count += 1  # repeats count too
            else:
                if parsed.name == self.task.valid_truth:
                    self._finish("succeeded")
                else:
                    self._finish("failed", WRONG_PREDICTION)
        record = TurnRecord(
            raw_agent_text=raw_agent_text,
            parsed=parsed,
            observation=observation,
            timestamp=self._clock(),
        )
        self.turn_log.append(record)
        return record

    def trajectory(self, tags: dict[str, str] | None = None) -> Trajectory:
        outcome = self.outcome if self.outcome is not None else EXHAUSTED
        return Trajectory(
            task_id=self.task.task_id,
            turns=list(self.turn_log),
            outcome=outcome,
            action_count=self.action_count,
            tokens_in=self.tokens_in,
            tokens_out=self.tokens_out,
            tags=dict(tags or {}),
        )


def create_session(
    task: TaskInstance,
    knowledge_book: str,
    *,
    cfg: SeedConfig | None = None,
    parse_failure_budget: int = PARSE_FAILURE_BUDGET,
    clock: Callable[[], float] | None = None,
) -> Session:
    """Open a fresh session; with ``cfg`` the engine also asserts at reveal
    time that no observation rules out the valid truth."""
    rule_out = cfg.rule_out_map(task.truths, task.actions) if cfg is not None else None
    return Session(
        task,
        knowledge_book,
        rule_out_map=rule_out,
        parse_failure_budget=parse_failure_budget,
        clock=clock,
    )


@dataclass(frozen=True)
class AgentReply:
    text: str
    tokens_in: int = 0
    tokens_out: int = 0


class Agent(Protocol):
    """Message-in/message-out player binding."""

    name: str

    def reply(self, messages: list[dict]) -> AgentReply: ...


def observation_line(action: str, label: str) -> str:
    return f"Observation for {action}: {label}"


_OBSERVATION_RE = re.compile(r"^Observation for (.+?): (.*)$", re.MULTILINE)


def extract_observations(messages: list[dict]) -> list[tuple[str, str]]:
    """Recover (action, state) pairs from user messages of a transcript."""
    out: list[tuple[str, str]] = []
    for msg in messages:
        if msg["role"] != "user":
            continue
        out.extend(_OBSERVATION_RE.findall(msg["content"]))
    return out


def turn_cap(task: TaskInstance) -> int:
    return 2 * len(task.actions) + 2


def run_episode(
    session: Session,
    agent: Agent,
    *,
    system_prompt: str | None = None,
    tags: dict[str, str] | None = None,
) -> Trajectory:
    """Drive an agent through a session until it ends or the cap is hit.

    The transcript grows as alternating user/assistant messages after one
    system message carrying the rules, the truth list, the action list and
    the knowledge book, so the agent always sees the full observation
    history. Transport failures propagate with the partial trajectory
    attached.
    """
    task = session.task
    preamble = (system_prompt if system_prompt is not None
                else session_preamble(task, session.knowledge_book))
    messages: list[dict] = [{"role": "system", "content": preamble}]
    cap = turn_cap(task)
    all_tags = dict(tags or {})
    all_tags.setdefault("model", getattr(agent, "name", agent.__class__.__name__))

    def state_lines() -> str:
        remaining = [a for a in task.actions if a in session.remaining_actions]
        return f"Remaining actions: {', '.join(remaining) if remaining else '(none)'}"

    prompt = f"Begin.\n{state_lines()}"
    for _ in range(cap):
        messages.append({"role": "user", "content": prompt})
        try:
            reply = agent.reply(messages)
        except AgentTransportError as exc:
            exc.trajectory = session.trajectory(all_tags)
            raise
        except Exception as exc:  # transport faults keep the partial log
            raise AgentTransportError(str(exc), trajectory=session.trajectory(all_tags)) from exc
        session.add_token_usage(reply.tokens_in, reply.tokens_out)
        messages.append({"role": "assistant", "content": reply.text})
        record = session.step(reply.text)
        if not session.active:
            break
        if isinstance(record.parsed, ParseError):
            prompt = (
                f"Your reply could not be parsed ({record.parsed.reason}). "
                "Reply with exactly one <ACTION>name</ACTION> or "
                f"<ANSWER>truth</ANSWER> directive.\n{state_lines()}"
            )
        else:
            prompt = f"{observation_line(record.parsed.name, record.observation)}\n{state_lines()}"
    return session.trajectory(all_tags)
