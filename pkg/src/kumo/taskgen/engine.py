"""Task instance synthesis from a seed configuration.

Pipeline per instance: sample a truth subset and designate the valid
truth(s); classify every (action, state) pair against the sample; encode
the selection problem as CNF (unique state per action, action budget,
every invalid truth excluded by some selected outcome) and solve it; pad
the selection up to the action budget with related-then-irrelevant
actions; dedupe against the batch. UNSAT or duplicate draws resample the
slot up to a budget.

Everything is a pure function of (config, params): each slot derives its
own RNG stream from (rng_seed, slot index), so serial and parallel
generation produce identical batches.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Sequence

from ..envmodel import SeedConfig, validate_seed_config
from ..errors import (
    GenerationExhausted,
    InsufficientActions,
    InsufficientUniverse,
    InvalidConfig,
)
from . import cnf

EASY = (4, 6)
HARD = (12, 16)


@dataclass(frozen=True)
class GenParams:
    """Generation knobs: subset sizes, batch size, and determinism seeds."""

    n_truth: int
    n_action: int
    n_valid: int = 1
    count: int = 1
    rng_seed: int = 0
    max_resamples: int = 100

    def __post_init__(self):
        if self.n_truth <= 0:
            raise ValueError("n_truth must be positive")
        if self.n_action < 0:
            raise ValueError("n_action must be non-negative")
        if self.n_valid <= 0:
            raise ValueError("n_valid must be positive")
        if self.n_valid >= self.n_truth:
            raise ValueError("n_valid must be < n_truth")
        if self.count <= 0:
            raise ValueError("count must be positive")
        if self.max_resamples <= 0:
            raise ValueError("max_resamples must be positive")

    def check_against(self, cfg: SeedConfig):
        if self.n_truth > len(cfg.truths):
            raise InsufficientUniverse(
                f"n_truth={self.n_truth} exceeds universe of {len(cfg.truths)} truths"
            )
        if self.n_action > len(cfg.actions):
            raise InsufficientUniverse(
                f"n_action={self.n_action} exceeds universe of {len(cfg.actions)} actions"
            )

    @property
    def difficulty(self) -> str:
        if (self.n_truth, self.n_action) == EASY:
            return "easy"
        if (self.n_truth, self.n_action) == HARD:
            return "hard"
        return f"t{self.n_truth}a{self.n_action}"

    def to_json(self) -> dict:
        return {
            "n_truth": self.n_truth,
            "n_action": self.n_action,
            "n_valid": self.n_valid,
            "count": self.count,
            "rng_seed": self.rng_seed,
            "max_resamples": self.max_resamples,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GenParams":
        return cls(**doc)


@dataclass(frozen=True)
class ValidOutcome:
    """A non-contradictory state that excludes >= 1 sampled truth."""

    action: str
    state: str
    ruled_out: tuple[str, ...]  # intersection with the sampled truth subset


@dataclass(frozen=True)
class OutcomePool:
    valid_outcomes: tuple[ValidOutcome, ...]
    contradictory: frozenset[tuple[str, str]]  # (action, state)
    related_actions: tuple[str, ...]  # config order


@dataclass(frozen=True)
class TaskInstance:
    """One playable game sampled from a seed configuration."""

    domain: str
    truths: tuple[str, ...]
    valid_truth: str
    actions: tuple[str, ...]
    realized_outcome: dict[str, str]  # action -> state label, one per action
    params: GenParams
    instance_seed: int

    @property
    def task_id(self) -> str:
        payload = json.dumps(
            [self.domain, list(self.truths), self.valid_truth, list(self.actions),
             sorted(self.realized_outcome.items())],
            ensure_ascii=False,
        )
        return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]

    def dedup_key(self):
        return (
            frozenset(self.truths),
            self.valid_truth,
            frozenset(self.actions),
            tuple(sorted(self.realized_outcome.items())),
        )

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "domain": self.domain,
            "truths": list(self.truths),
            "valid_truth": self.valid_truth,
            "actions": list(self.actions),
            "realized_outcome": {a: self.realized_outcome[a] for a in self.actions},
            "params": self.params.to_json(),
            "instance_seed": self.instance_seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TaskInstance":
        return cls(
            domain=doc["domain"],
            truths=tuple(doc["truths"]),
            valid_truth=doc["valid_truth"],
            actions=tuple(doc["actions"]),
            realized_outcome=dict(doc["realized_outcome"]),
            params=GenParams.from_json(doc["params"]),
            instance_seed=doc["instance_seed"],
        )


def sample_truths(
    cfg: SeedConfig, params: GenParams, rng: random.Random
) -> tuple[list[str], list[str], list[str]]:
    """Draw the truth subset and split it into valid / invalid parts."""
    params.check_against(cfg)
    subset = rng.sample(list(cfg.truths), params.n_truth)
    valid = rng.sample(subset, params.n_valid)
    valid_set = set(valid)
    invalid = [t for t in subset if t not in valid_set]
    return subset, valid, invalid


def classify_outcomes(
    cfg: SeedConfig, subset: Sequence[str], valid: Sequence[str]
) -> OutcomePool:
    """Split every (action, state) pair into valid / contradictory / inert.

    A state is contradictory when it rules out a designated valid truth; it
    is a usable ("valid") outcome when it excludes at least one sampled
    truth without touching the valid ones. Actions contributing either kind
    are related to the sample.
    """
    subset_set = set(subset)
    valid_set = set(valid)
    assert valid_set <= subset_set
    outcomes: list[ValidOutcome] = []
    contradictory: set[tuple[str, str]] = set()
    related: list[str] = []
    for spec in cfg.actions:
        action_related = False
        for state in spec.states:
            hit = tuple(t for t in state.ruled_out if t in subset_set)
            if not hit:
                continue
            action_related = True
            if any(t in valid_set for t in hit):
                contradictory.add((spec.name, state.label))
            else:
                outcomes.append(ValidOutcome(spec.name, state.label, hit))
        if action_related:
            related.append(spec.name)
    return OutcomePool(
        valid_outcomes=tuple(outcomes),
        contradictory=frozenset(contradictory),
        related_actions=tuple(related),
    )


def solve_selection(
    pool: OutcomePool,
    invalid: Sequence[str],
    n_action: int,
    rng: random.Random | None = None,
) -> dict[str, str] | None:
    """Pick outcomes covering every invalid truth, or None when UNSAT.

    CNF constraints: at most one state per action, at most ``n_action``
    selected outcomes overall (which bounds distinct actions, given the
    per-action constraint), and one positive clause per invalid truth. The
    first model under a seed-shuffled branching order is returned.
    """
    builder = cnf.CnfBuilder()
    ovars = builder.new_vars(len(pool.valid_outcomes))

    by_action: dict[str, list[int]] = {}
    for var, outcome in zip(ovars, pool.valid_outcomes):
        by_action.setdefault(outcome.action, []).append(var)
    for lits in by_action.values():
        builder.at_most_one(lits)
    builder.at_most_k(ovars, n_action)
    for t in invalid:
        builder.at_least_one(
            [var for var, o in zip(ovars, pool.valid_outcomes) if t in o.ruled_out]
        )

    order = list(ovars)
    if rng is not None:
        rng.shuffle(order)
    model = cnf.solve(builder.num_vars, builder.clauses, decision_order=order)
    if model is None:
        return None
    selection: dict[str, str] = {}
    for var, outcome in zip(ovars, pool.valid_outcomes):
        if model[var]:
            assert outcome.action not in selection
            selection[outcome.action] = outcome.state
    return selection


def pad_actions(
    selection: dict[str, str],
    pool: OutcomePool,
    cfg: SeedConfig,
    n_action: int,
    rng: random.Random,
) -> dict[str, str]:
    """Grow the selection to exactly ``n_action`` actions.

    Unused related actions come first, each realized with a uniformly
    chosen non-contradictory state; once related actions run out,
    irrelevant actions (no state excludes any sampled truth) are added with
    a uniformly chosen state. Padded states never rule out a valid truth.
    """
    if len(selection) > n_action:
        raise ValueError("selection already exceeds the action budget")
    padded = dict(selection)

    related = [a for a in pool.related_actions if a not in padded]
    rng.shuffle(related)
    for name in related:
        if len(padded) == n_action:
            break
        legal = [
            s.label
            for s in cfg.action(name).states
            if (name, s.label) not in pool.contradictory
        ]
        if legal:
            padded[name] = rng.choice(legal)

    if len(padded) < n_action:
        related_set = set(pool.related_actions)
        irrelevant = [a.name for a in cfg.actions
                      if a.name not in related_set and a.name not in padded]
        rng.shuffle(irrelevant)
        for name in irrelevant:
            if len(padded) == n_action:
                break
            padded[name] = rng.choice(cfg.action(name).state_labels())

    if len(padded) < n_action:
        raise InsufficientActions(
            f"only {len(padded)} of {n_action} actions available for this sample"
        )
    return padded


def verify_task(cfg: SeedConfig, task: TaskInstance) -> list[str]:
    """Independent invariant scan; returns human-readable problems."""
    problems: list[str] = []
    n = task.params
    if task.valid_truth not in task.truths:
        problems.append("valid truth not among task truths")
    if len(set(task.truths)) != len(task.truths):
        problems.append("duplicate truths")
    if len(set(task.actions)) != len(task.actions):
        problems.append("duplicate actions")
    if len(task.truths) != n.n_truth:
        problems.append(f"|truths|={len(task.truths)} != n_truth={n.n_truth}")
    if len(task.actions) != n.n_action:
        problems.append(f"|actions|={len(task.actions)} != n_action={n.n_action}")
    if set(task.realized_outcome) != set(task.actions):
        problems.append("realized outcomes do not cover exactly the task actions")
    in_task = set(task.truths)
    excluded: set[str] = set()
    for action, label in task.realized_outcome.items():
        try:
            state = cfg.action(action).state(label)
        except KeyError:
            problems.append(f"realized state {action}/{label} unknown to the config")
            continue
        hit = in_task.intersection(state.ruled_out)
        if task.valid_truth in hit:
            problems.append(f"realized state {action}/{label} excludes the valid truth")
        excluded.update(hit)
    for t in task.truths:
        if t != task.valid_truth and t not in excluded:
            problems.append(f"invalid truth {t!r} is excluded by no realized outcome")
    return problems


def generate_tasks(cfg: SeedConfig, params: GenParams) -> list[TaskInstance]:
    """Produce exactly ``params.count`` distinct invariant-clean instances."""
    report = validate_seed_config(cfg)
    if not report.ok:
        raise InvalidConfig(f"config invalid: {report.summary()}", report=report)
    params.check_against(cfg)
    if params.n_valid != 1:
        raise ValueError("instance assembly requires n_valid == 1")

    tasks: list[TaskInstance] = []
    seen: set = set()
    for slot in range(params.count):
        rng = random.Random(f"{params.rng_seed}:{slot}")
        task = None
        for _attempt in range(params.max_resamples):
            instance_seed = rng.getrandbits(63)
            subset, valid, invalid = sample_truths(cfg, params, rng)
            pool = classify_outcomes(cfg, subset, valid)
            selection = solve_selection(pool, invalid, params.n_action, rng)
            if selection is None:
                continue
            try:
                realized = pad_actions(selection, pool, cfg, params.n_action, rng)
            except InsufficientActions:
                continue
            actions = list(realized)
            rng.shuffle(actions)
            candidate = TaskInstance(
                domain=cfg.domain_name,
                truths=tuple(subset),
                valid_truth=valid[0],
                actions=tuple(actions),
                realized_outcome=realized,
                params=params,
                instance_seed=instance_seed,
            )
            problems = verify_task(cfg, candidate)
            if problems:  # solver/padding bug, not a sampling miss
                raise AssertionError(f"generated instance violates invariants: {problems}")
            if candidate.dedup_key() in seen:
                continue
            task = candidate
            break
        if task is None:
            raise GenerationExhausted(
                f"slot {slot}: no fresh satisfiable instance in "
                f"{params.max_resamples} resamples"
            )
        seen.add(task.dedup_key())
        tasks.append(task)
    return tasks
