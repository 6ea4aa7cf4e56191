"""Relabel-invariant structural signature of a task's bipartite graph.

Edges join a task truth to a task action whenever some state of the action
rules that truth out. The signature concatenates the sorted truth-node and
action-node degree sequences, so isomorphic tasks (up to renaming) map to
the same key.
"""

from __future__ import annotations

from ..envmodel import SeedConfig
from ..taskgen import TaskInstance


def structure_signature(cfg: SeedConfig, task: TaskInstance) -> str:
    in_task = set(task.truths)
    truth_deg = {t: 0 for t in task.truths}
    action_deg: list[int] = []
    for action in task.actions:
        related = cfg.action(action).related_truths() & in_task
        action_deg.append(len(related))
        for t in related:
            truth_deg[t] += 1
    t_seq = ",".join(str(d) for d in sorted(truth_deg.values()))
    a_seq = ",".join(str(d) for d in sorted(action_deg))
    return f"{t_seq}|{a_seq}"
