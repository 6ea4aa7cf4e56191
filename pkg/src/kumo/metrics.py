"""Trajectory scoring and aggregation.

Success rate is the fraction of episodes whose final prediction named the
valid truth; relative action count is (realized - optimal) / optimal with
the optimal expected count as reference; parsing error rate is the
fraction of agent turns that produced no legal directive. Episodes ending
in parse failure or turn exhaustion count as failures and keep their
realized action counts.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .errors import DegenerateOptimal, EmptyInput, MissingOptimal, ZeroVariance
from .simulator import Trajectory

log = logging.getLogger(__name__)

CSV_COLUMNS = ["group", "n", "success_rate", "rel_action_mean",
               "parse_err_rate", "tokens_in", "tokens_out"]


def success_rate(trajectories: Sequence[Trajectory]) -> float:
    if not trajectories:
        raise EmptyInput("success_rate over an empty collection")
    return sum(1 for t in trajectories if t.succeeded) / len(trajectories)


def relative_action_count(trajectory: Trajectory, optimal: float) -> float:
    if optimal <= 0:
        raise DegenerateOptimal(f"optimal action count {optimal} is not positive")
    return (trajectory.action_count - optimal) / optimal


def parsing_error_rate(trajectories: Sequence[Trajectory]) -> float:
    if not trajectories:
        raise EmptyInput("parsing_error_rate over an empty collection")
    turns = sum(len(t.turns) for t in trajectories)
    if turns == 0:
        return 0.0
    bad = sum(t.parse_error_turns() for t in trajectories)
    return bad / turns


@dataclass(frozen=True)
class ScoreReport:
    group: tuple[str, ...]
    n: int
    success_rate: float
    rel_action_mean: float | None  # None when every member was degenerate
    parse_err_rate: float
    tokens_in: float
    tokens_out: float

    def row(self) -> list:
        return [
            "/".join(self.group) if self.group else "all",
            self.n,
            f"{self.success_rate:.6g}",
            "" if self.rel_action_mean is None else f"{self.rel_action_mean:.6g}",
            f"{self.parse_err_rate:.6g}",
            f"{self.tokens_in:.6g}",
            f"{self.tokens_out:.6g}",
        ]


def aggregate(
    trajectories: Sequence[Trajectory],
    optimal_for: Mapping[str, float] | Callable[[Trajectory], float] | None,
    group_keys: Sequence[str] = (),
) -> list[ScoreReport]:
    """One report per group of trajectories.

    ``optimal_for`` resolves a trajectory's optimal action count, either as
    a task_id -> value mapping or a callable; pass None to skip the
    relative-action metric entirely. Groups are the distinct tag tuples
    under ``group_keys`` (an empty key list aggregates everything); token
    usage is averaged per episode. Trajectories whose optimal is not
    positive are excluded from the relative-action mean with a warning but
    still count toward the other metrics.
    """
    if not trajectories:
        raise EmptyInput("aggregate over an empty collection")

    def resolve(traj: Trajectory) -> float:
        if callable(optimal_for):
            return optimal_for(traj)
        try:
            return optimal_for[traj.task_id]
        except KeyError:
            raise MissingOptimal(f"no optimal action count for task {traj.task_id}")

    groups: dict[tuple[str, ...], list[Trajectory]] = {}
    for traj in trajectories:
        key = tuple(traj.tags.get(k, "") for k in group_keys)
        groups.setdefault(key, []).append(traj)

    reports = []
    for key in sorted(groups):
        members = groups[key]
        rels = []
        if optimal_for is not None:
            for traj in members:
                optimal = resolve(traj)
                try:
                    rels.append(relative_action_count(traj, optimal))
                except DegenerateOptimal:
                    log.warning(
                        "task %s has optimal %.3g <= 0; excluded from relative action mean",
                        traj.task_id, optimal,
                    )
        reports.append(ScoreReport(
            group=key,
            n=len(members),
            success_rate=success_rate(members),
            rel_action_mean=(sum(rels) / len(rels)) if rels else None,
            parse_err_rate=parsing_error_rate(members),
            tokens_in=sum(t.tokens_in for t in members) / len(members),
            tokens_out=sum(t.tokens_out for t in members) / len(members),
        ))
    return reports


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("pearson undefined for a constant sequence")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def reports_to_csv(reports: Sequence[ScoreReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow(report.row())
    return buf.getvalue()


def reports_to_table(reports: Sequence[ScoreReport]) -> str:
    """Fixed-width rendering for standard output."""
    rows = [CSV_COLUMNS] + [[str(c) for c in r.row()] for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_COLUMNS))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
