from .engine import (
    EASY,
    HARD,
    GenParams,
    OutcomePool,
    TaskInstance,
    ValidOutcome,
    classify_outcomes,
    generate_tasks,
    pad_actions,
    sample_truths,
    solve_selection,
    verify_task,
)
from .bundle import config_hash, read_task_bundle, write_task_bundle

__all__ = [
    "EASY",
    "HARD",
    "GenParams",
    "OutcomePool",
    "TaskInstance",
    "ValidOutcome",
    "classify_outcomes",
    "config_hash",
    "generate_tasks",
    "pad_actions",
    "read_task_bundle",
    "sample_truths",
    "solve_selection",
    "verify_task",
    "write_task_bundle",
]
