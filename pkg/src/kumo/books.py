"""Text renderings of a task's knowledge for players.

The symbolic book is the task-restricted action->state->ruled-out mapping
rendered as a JSON dictionary literal; the game-rules text explains the
move grammar. Natural-language books come from the LLM pipeline instead
and are interchangeable wherever a book string is expected.
"""

from __future__ import annotations

import json

from .envmodel import SeedConfig
from .taskgen import TaskInstance

RULES_TEXT = """\
You are playing a deduction game. Exactly one of the candidate truths is
valid. Each action, when taken, reveals one outcome state; the knowledge
book tells you which truths every observed state rules out. Ruled-out
truths are eliminated as possibilities; the valid truth is never ruled out
by an observed outcome.

On each turn reply with exactly one directive:
  <ACTION>action name</ACTION>   to take an action, or
  <ANSWER>truth name</ANSWER>    to predict the valid truth.
Predicting ends the game. Use the fewest actions you can."""


def symbolic_book_text(cfg: SeedConfig, task: TaskInstance) -> str:
    """Task-restricted rule-out mapping as a pretty JSON dictionary."""
    book = cfg.rule_out_map(task.truths, task.actions)
    doc = {action: {state: list(excl) for state, excl in states.items()}
           for action, states in book.items()}
    return json.dumps(doc, indent=2, ensure_ascii=False)


def session_preamble(task: TaskInstance, book: str) -> str:
    """System message shown to a player: rules, candidates, actions, book."""
    return (
        f"{RULES_TEXT}\n\n"
        f"Candidate truths: {', '.join(task.truths)}\n"
        f"Available actions: {', '.join(task.actions)}\n\n"
        f"Knowledge book:\n{book}"
    )
