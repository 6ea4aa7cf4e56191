"""Exact optimal play: minimal expected action count via memoized recursion.

The value of a game state (candidate truths T, unused actions A) is the
least expected number of actions a player needs before the valid truth is
determined, assuming each observed state s of an action is reached with
probability proportional to the number of candidates it leaves alive:

    W(s) = |T \\ ruled_out(s)|,   P(s) = W(s) / (sum_s' W(s') + epsilon)

Base states (one candidate left, no actions left, or some candidate that
no remaining action can ever rule out) cost zero further actions: the
final prediction itself is not counted as an action. Non-base states cost
1 + min over actions of the probability-weighted child values. States are
memoized under an integer key packing the truth and action subsets into
one bitmask, and evaluation of an action is cut short as soon as its
partial sum reaches the incumbent minimum (both behaviours can be switched
off, which must not change any returned value).

A deliberately naive policy-enumeration evaluator doubles as an
independent check for small instances, and ``golden_trajectory`` replays
optimal play against a concrete instance's realized outcomes.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .books import session_preamble, symbolic_book_text
from .envmodel import SeedConfig
from .errors import InvalidTask, StateSpaceTooLarge, TooLargeForBruteForce
from .taskgen import TaskInstance

MAX_BITS = 62
DEFAULT_EPSILON = 1e-9

ExclusionMap = Mapping[str, Mapping[str, Iterable[str]]]


@dataclass(frozen=True)
class SearchState:
    """A subset pair within a fixed truth/action index space."""

    truths: tuple[str, ...]
    actions: tuple[str, ...]
    current_truths: tuple[str, ...]
    current_actions: tuple[str, ...]

    def __post_init__(self):
        if len(self.truths) + len(self.actions) > MAX_BITS:
            raise StateSpaceTooLarge(
                f"{len(self.truths)}+{len(self.actions)} indices exceed {MAX_BITS} bits"
            )

    @property
    def bitmask(self) -> int:
        nt = len(self.truths)
        t_idx = {t: i for i, t in enumerate(self.truths)}
        a_idx = {a: nt + i for i, a in enumerate(self.actions)}
        mask = 0
        for t in self.current_truths:
            mask |= 1 << t_idx[t]
        for a in self.current_actions:
            mask |= 1 << a_idx[a]
        return mask


@dataclass(frozen=True)
class MemoEntry:
    expected_steps: float
    best_action: str | None


class OptimalSearcher:
    """Reusable search over one task's truth/action index space.

    ``exclusion`` maps action -> state label -> truths ruled out, already
    restricted to the task's truths. One searcher owns one memo table;
    masks are only meaningful relative to its index assignment.
    """

    def __init__(
        self,
        truths: Sequence[str],
        actions: Sequence[str],
        exclusion: ExclusionMap,
        *,
        epsilon: float = DEFAULT_EPSILON,
        use_memo: bool = True,
        prune: bool = True,
        memo: dict | None = None,
    ):
        if len(truths) + len(actions) > MAX_BITS:
            raise StateSpaceTooLarge(
                f"{len(truths)}+{len(actions)} indices exceed {MAX_BITS} bits"
            )
        self.truths = tuple(truths)
        self.actions = tuple(actions)
        self.epsilon = epsilon
        self.use_memo = use_memo
        self.prune = prune
        self.memo: dict[int, tuple[float, int | None]] = {} if memo is None else memo
        self._reach_cache: dict[int, int] = {}
        self._nt = len(self.truths)
        t_idx = {t: i for i, t in enumerate(self.truths)}
        # Per action: list of rule-out masks (state order preserved).
        self._state_masks: list[list[int]] = []
        self._state_labels: list[list[str]] = []
        self._coverage: list[int] = []
        for a in self.actions:
            masks, labels = [], []
            cover = 0
            for label, excluded in exclusion[a].items():
                m = 0
                for t in excluded:
                    if t in t_idx:
                        m |= 1 << t_idx[t]
                masks.append(m)
                labels.append(label)
                cover |= m
            self._state_masks.append(masks)
            self._state_labels.append(labels)
            self._coverage.append(cover)

    # -- mask helpers -------------------------------------------------------

    @property
    def full_truth_mask(self) -> int:
        return (1 << self._nt) - 1

    @property
    def full_action_mask(self) -> int:
        return (1 << len(self.actions)) - 1

    def truth_mask(self, names: Iterable[str]) -> int:
        idx = {t: i for i, t in enumerate(self.truths)}
        mask = 0
        for t in names:
            mask |= 1 << idx[t]
        return mask

    def action_mask(self, names: Iterable[str]) -> int:
        idx = {a: i for i, a in enumerate(self.actions)}
        mask = 0
        for a in names:
            mask |= 1 << idx[a]
        return mask

    def state_rule_out_mask(self, action: str, label: str) -> int:
        ai = self.actions.index(action)
        return self._state_masks[ai][self._state_labels[ai].index(label)]

    def reachable_rule_outs(self, amask: int) -> int:
        """Union of rule-out masks over every state of the given actions."""
        reach = self._reach_cache.get(amask)
        if reach is None:
            reach = 0
            rest = amask
            while rest:
                low = rest & -rest
                reach |= self._coverage[low.bit_length() - 1]
                rest ^= low
            self._reach_cache[amask] = reach
        return reach

    def _is_base(self, tmask: int, amask: int) -> bool:
        if tmask.bit_count() <= 1 or amask == 0:
            return True
        # Some candidate no remaining action can touch => stop and predict.
        return (tmask & ~self.reachable_rule_outs(amask)) != 0

    def _informative(self, tmask: int, amask: int) -> int:
        """Actions with at least one state intersecting the candidates.

        Taking any other action costs a turn and cannot shrink the
        candidate set, so it is never optimal and never ties the optimum
        (its value exceeds the state's by essentially one). Whole states
        therefore collapse onto their informative core: skipping the inert
        actions and keying the memo on the core leaves every returned
        value and argmin bit-identical while pruning an exponential family
        of equivalent states.
        """
        keep = 0
        rest = amask
        while rest:
            low = rest & -rest
            rest ^= low
            if self._coverage[low.bit_length() - 1] & tmask:
                keep |= low
        return keep

    # -- core recursion -------------------------------------------------------

    def search(self, tmask: int, amask: int) -> tuple[float, int | None]:
        """Return (expected actions, best action index or None)."""
        if self._is_base(tmask, amask):
            return 0.0, None
        core = self._informative(tmask, amask)
        key = tmask | (core << self._nt)
        if self.use_memo:
            hit = self.memo.get(key)
            if hit is not None:
                return hit
        best = math.inf
        best_action: int | None = None
        rest = core
        while rest:
            low = rest & -rest
            rest ^= low
            ai = low.bit_length() - 1
            next_amask = core & ~low
            masks = self._state_masks[ai]
            weights = [(tmask & ~m).bit_count() for m in masks]
            z = sum(weights) + self.epsilon
            # Admissible floor for each unevaluated branch: a non-base child
            # costs at least one further action. Tightens early termination
            # without affecting any returned value.
            floors = [0.0] * len(masks)
            remaining_floor = 0.0
            if self.prune:
                for i, (m, w) in enumerate(zip(masks, weights)):
                    if w > 1 and not self._is_base(tmask & ~m, next_amask):
                        floors[i] = w / z
                        remaining_floor += floors[i]
            total = 0.0
            pruned = False
            for i, (m, w) in enumerate(zip(masks, weights)):
                if self.prune:
                    remaining_floor -= floors[i]
                if w == 0:  # impossible branch under the uniform prior
                    continue
                child, _ = self.search(tmask & ~m, next_amask)
                total += (w / z) * child
                if self.prune and total + remaining_floor >= best:
                    pruned = True
                    break
            if not pruned and total < best:
                best = total
                best_action = ai
        result = (1.0 + best, best_action)
        if self.use_memo:
            self.memo[key] = result
        return result

    def action_values(self, tmask: int, amask: int) -> list[tuple[int, float]]:
        """Fully evaluated (action index, expected value) pairs at a state.

        Values are 1 + the weighted child sum, i.e. on the same scale as
        ``search``'s return; no pruning is applied here so ties are exact.
        Only informative actions are listed (the rest cannot be optimal).
        """
        out: list[tuple[int, float]] = []
        core = self._informative(tmask, amask)
        rest = core
        while rest:
            low = rest & -rest
            rest ^= low
            ai = low.bit_length() - 1
            masks = self._state_masks[ai]
            weights = [(tmask & ~m).bit_count() for m in masks]
            z = sum(weights) + self.epsilon
            total = 0.0
            for m, w in zip(masks, weights):
                if w == 0:
                    continue
                child, _ = self.search(tmask & ~m, core & ~low)
                total += (w / z) * child
            out.append((ai, 1.0 + total))
        return out


def searcher_for_task(
    cfg: SeedConfig,
    task: TaskInstance,
    *,
    epsilon: float = DEFAULT_EPSILON,
    use_memo: bool = True,
    prune: bool = True,
) -> OptimalSearcher:
    exclusion = cfg.rule_out_map(task.truths, task.actions)
    return OptimalSearcher(
        task.truths, task.actions, exclusion,
        epsilon=epsilon, use_memo=use_memo, prune=prune,
    )


def optimal_search(
    state: SearchState,
    exclusion: ExclusionMap,
    memo: dict | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    use_memo: bool = True,
    prune: bool = True,
) -> MemoEntry:
    """Evaluate one search state; ``memo`` may be shared across calls that
    use the same index space."""
    searcher = OptimalSearcher(
        state.truths, state.actions, exclusion,
        epsilon=epsilon, use_memo=use_memo, prune=prune, memo=memo,
    )
    value, ai = searcher.search(
        searcher.truth_mask(state.current_truths),
        searcher.action_mask(state.current_actions),
    )
    return MemoEntry(expected_steps=value,
                     best_action=None if ai is None else searcher.actions[ai])


def optimal_action_count(cfg: SeedConfig, task: TaskInstance) -> float:
    """Root expected action count; the reference for relative action count."""
    s = searcher_for_task(cfg, task)
    value, _ = s.search(s.full_truth_mask, s.full_action_mask)
    return value


# -- independent check: explicit policy enumeration --------------------------

def enumerate_policy_costs(
    cfg: SeedConfig, task: TaskInstance, *, epsilon: float = DEFAULT_EPSILON
) -> Iterator[float]:
    """Yield the expected action count of every legal deterministic policy.

    A policy maps observation histories to the next action, and may stop
    only at base states. Plain frozensets, no memoization, no bitmasks, no
    pruning: this is the slow reference the fast search is checked against.
    """
    if len(task.actions) > 5:
        raise TooLargeForBruteForce(f"{len(task.actions)} actions; guard is 5")
    book = cfg.rule_out_map(task.truths, task.actions)
    states = {a: [(label, frozenset(excl)) for label, excl in book[a].items()]
              for a in task.actions}
    coverage = {a: frozenset().union(*(excl for _, excl in st)) if st else frozenset()
                for a, st in states.items()}

    def is_base(T: frozenset, A: frozenset) -> bool:
        if len(T) <= 1 or not A:
            return True
        return any(all(t not in coverage[a] for a in A) for t in T)

    def costs(T: frozenset, A: frozenset) -> list[float]:
        if is_base(T, A):
            return [0.0]
        out: list[float] = []
        for a in sorted(A):
            z = sum(len(T - excl) for _, excl in states[a]) + epsilon
            branches = []
            for _, excl in states[a]:
                T_next = T - excl
                if not T_next:  # zero-probability observation
                    continue
                branches.append((len(T_next) / z, costs(T_next, A - {a})))
            # One sub-policy choice per reachable observation.
            stack: list[tuple[int, float]] = [(0, 0.0)]
            while stack:
                i, acc = stack.pop()
                if i == len(branches):
                    out.append(1.0 + acc)
                    continue
                p, options = branches[i]
                for c in options:
                    stack.append((i + 1, acc + p * c))
        return out

    yield from costs(frozenset(task.truths), frozenset(task.actions))


def brute_force_expected_steps(
    cfg: SeedConfig, task: TaskInstance, *, epsilon: float = DEFAULT_EPSILON
) -> float:
    """Minimum expected action count over all policies, by enumeration."""
    return min(enumerate_policy_costs(cfg, task, epsilon=epsilon))


# -- golden trajectories ------------------------------------------------------

@dataclass(frozen=True)
class GoldenTrajectory:
    task_id: str
    system_preamble: str
    turns: tuple[tuple[str, str], ...]  # (action, observed state label)
    final_prediction: str

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "preamble": self.system_preamble,
            "turns": [[a, s] for a, s in self.turns],
            "prediction": self.final_prediction,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GoldenTrajectory":
        return cls(
            task_id=doc["task_id"],
            system_preamble=doc["preamble"],
            turns=tuple((a, s) for a, s in doc["turns"]),
            final_prediction=doc["prediction"],
        )


def golden_trajectory(
    cfg: SeedConfig, task: TaskInstance, rng: random.Random | None = None
) -> GoldenTrajectory:
    """Replay optimal play against the instance's realized outcomes.

    Each turn takes the best action (with ``rng``, a uniform choice among
    equal-value best actions), applies the realized observation's rule-outs
    to the candidate set, and stops at a base state. The remaining
    candidate consistent with everything observed is the prediction.
    """
    searcher = searcher_for_task(cfg, task)
    tmask = searcher.full_truth_mask
    amask = searcher.full_action_mask
    turns: list[tuple[str, str]] = []
    while True:
        _, best = searcher.search(tmask, amask)
        if best is None:
            break
        if rng is not None:
            values = searcher.action_values(tmask, amask)
            floor = min(v for _, v in values)
            ties = sorted(ai for ai, v in values if v - floor <= 1e-12)
            best = rng.choice(ties)
        action = searcher.actions[best]
        label = task.realized_outcome[action]
        turns.append((action, label))
        tmask &= ~searcher.state_rule_out_mask(action, label)
        amask &= ~(1 << best)

    remaining = [t for i, t in enumerate(searcher.truths) if tmask >> i & 1]
    if len(remaining) == 1:
        prediction = remaining[0]
    else:
        # Base case was an untouchable candidate: with one valid truth and
        # all invalid ones excludable by realized outcomes, that candidate
        # is the answer.
        reach = searcher.reachable_rule_outs(amask)
        untouchable = [t for i, t in enumerate(searcher.truths)
                       if (tmask >> i & 1) and not (reach >> i & 1)]
        if len(untouchable) != 1:
            raise InvalidTask(
                f"task {task.task_id}: optimal play cannot isolate a single truth"
            )
        prediction = untouchable[0]
    if prediction != task.valid_truth:
        raise InvalidTask(
            f"task {task.task_id}: deduced {prediction!r} but valid truth is "
            f"{task.valid_truth!r}; instance is unsound"
        )
    return GoldenTrajectory(
        task_id=task.task_id,
        system_preamble=session_preamble(task, symbolic_book_text(cfg, task)),
        turns=tuple(turns),
        final_prediction=prediction,
    )


def write_golden_jsonl(path: str | Path, trajectories: Iterable[GoldenTrajectory]):
    with open(path, "w", encoding="utf-8") as fh:
        for g in trajectories:
            fh.write(json.dumps(g.to_json(), ensure_ascii=False) + "\n")


def read_golden_jsonl(path: str | Path) -> list[GoldenTrajectory]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(GoldenTrajectory.from_json(json.loads(line)))
    return out
