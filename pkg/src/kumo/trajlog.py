"""Trajectory log persistence: JSONL, append-safe, corruption-tolerant.

A crashed writer leaves a prefix of valid lines plus at most one partial
line; loading skips malformed records with a warning and reports how many
were dropped, so a truncated log never poisons an analysis run.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Sequence

from .errors import IoError
from .simulator import Trajectory

log = logging.getLogger(__name__)


def store_trajectories(path: str | Path, trajectories: Sequence[Trajectory]):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for traj in trajectories:
                fh.write(json.dumps(traj.to_json(), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def append_trajectory(path: str | Path, trajectory: Trajectory):
    """Single-record append; the line is flushed to disk before returning."""
    try:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(trajectory.to_json(), ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise IoError(f"cannot append to {path}: {exc}") from exc


def load_trajectories(path: str | Path) -> tuple[list[Trajectory], int]:
    """Returns (trajectories, number of corrupt records skipped)."""
    out: list[Trajectory] = []
    skipped = 0
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    out.append(Trajectory.from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    skipped += 1
                    log.warning("%s:%d: skipping corrupt record (%s)", path, lineno, exc)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return out, skipped
