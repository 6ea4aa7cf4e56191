"""Domain data model: seed configurations, parsing, and validation.

A seed configuration describes one game domain: the universal truth list,
the universal action list, and for every action its outcome states together
with the truths each state rules out when observed. The action->state->
ruled-out mapping doubles as the domain's symbolic knowledge book.

External document schema (JSON, UTF-8)::

    {
      "domain": str,
      "goal": str,
      "truths": [str, ...],
      "outcomes": {
        action: {"type": "str" | "float",
                 "states": {label_or_interval: [excluded truths]}}
      },
      "provenance": {...}          # optional generator metadata
    }

Numeric state keys are the exact text ``[lo,hi]`` with decimal endpoints;
the interval is closed on both sides. Infinite or NaN endpoints are
rejected at parse time.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DanglingTruthReference, DuplicateName, SchemaError

CATEGORICAL = "categorical"
NUMERIC = "numeric"

_KIND_FROM_TAG = {"str": CATEGORICAL, "float": NUMERIC}
_TAG_FROM_KIND = {CATEGORICAL: "str", NUMERIC: "float"}

# Exact interval-key grammar: "[lo,hi]" with plain decimal endpoints.
_INTERVAL_RE = re.compile(
    r"^\[(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?),(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\]$"
)


@dataclass(frozen=True)
class OutcomeState:
    """One observable state of an action and the truths it eliminates."""

    label: str
    ruled_out: tuple[str, ...]
    interval: tuple[float, float] | None = None

    @property
    def is_numeric(self) -> bool:
        return self.interval is not None


@dataclass(frozen=True)
class ActionOutcomeSpec:
    """An action, its outcome kind, and its ordered state list."""

    name: str
    kind: str  # CATEGORICAL or NUMERIC
    states: tuple[OutcomeState, ...]

    def state(self, label: str) -> OutcomeState:
        for s in self.states:
            if s.label == label:
                return s
        raise KeyError(label)

    def state_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.states)

    def related_truths(self) -> frozenset[str]:
        """Union of rule-out sets across all states."""
        out: set[str] = set()
        for s in self.states:
            out.update(s.ruled_out)
        return frozenset(out)


@dataclass(frozen=True)
class DomainProposal:
    """Natural-language sketch of a domain: goal plus truth/action themes."""

    goal: str
    truths_desc: str
    actions_desc: str

    def __post_init__(self):
        for name in ("goal", "truths_desc", "actions_desc"):
            if not getattr(self, name).strip():
                raise ValueError(f"proposal field {name!r} must be non-empty")


@dataclass(frozen=True)
class SeedConfig:
    """A domain's universal truths, actions, and outcome rule-out mapping."""

    domain_name: str
    goal: str
    truths: tuple[str, ...]
    actions: tuple[ActionOutcomeSpec, ...]
    provenance: Mapping | None = None

    def action(self, name: str) -> ActionOutcomeSpec:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def action_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions)

    def rule_out_map(
        self,
        truths: Sequence[str] | None = None,
        actions: Sequence[str] | None = None,
    ) -> dict[str, dict[str, tuple[str, ...]]]:
        """Symbolic knowledge book, optionally restricted to subsets.

        Restriction keeps every state of every kept action but intersects
        each rule-out set with the kept truths (preserving config order).
        """
        keep_t = set(self.truths if truths is None else truths)
        keep_a = set(self.action_names() if actions is None else actions)
        book: dict[str, dict[str, tuple[str, ...]]] = {}
        for spec in self.actions:
            if spec.name not in keep_a:
                continue
            book[spec.name] = {
                s.label: tuple(t for t in s.ruled_out if t in keep_t)
                for s in spec.states
            }
        return book


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    offender: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.code}({v.offender}): {v.message}" for v in self.violations)


def parse_interval_label(label: str) -> tuple[float, float] | None:
    """Parse "[lo,hi]" into floats, or None if the text is not an interval."""
    m = _INTERVAL_RE.match(label)
    if m is None:
        return None
    lo, hi = float(m.group(1)), float(m.group(2))
    return lo, hi


def _require(cond: bool, message: str):
    if not cond:
        raise SchemaError(message)


def parse_seed_config(text: str) -> SeedConfig:
    """Parse a serialized config document into a SeedConfig.

    Structural problems (shape, kind tags, duplicate names, dangling truth
    references, fewer than two states) raise immediately; semantic checks
    such as interval overlap and universal exclusion are left to
    :func:`validate_seed_config` so that a report can enumerate them all.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"document is not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "top level must be an object")
    unknown = set(doc) - {"domain", "goal", "truths", "outcomes", "provenance"}
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    for key in ("domain", "goal", "truths", "outcomes"):
        _require(key in doc, f"missing required key {key!r}")
    _require(isinstance(doc["domain"], str) and doc["domain"].strip(), "domain must be non-empty text")
    _require(isinstance(doc["goal"], str), "goal must be text")
    _require(isinstance(doc["truths"], list), "truths must be a list")
    _require(isinstance(doc["outcomes"], dict), "outcomes must be an object")

    truths: list[str] = []
    seen = set()
    for t in doc["truths"]:
        _require(isinstance(t, str) and t, "truths must be non-empty strings")
        if t in seen:
            raise DuplicateName(f"duplicate truth {t!r}")
        seen.add(t)
        truths.append(t)
    truth_set = set(truths)

    actions: list[ActionOutcomeSpec] = []
    for name, body in doc["outcomes"].items():
        _require(isinstance(name, str) and name, "action names must be non-empty strings")
        if any(a.name == name for a in actions):
            raise DuplicateName(f"duplicate action {name!r}")
        _require(isinstance(body, dict), f"action {name!r} body must be an object")
        _require(set(body) == {"type", "states"}, f"action {name!r} must have exactly type+states")
        tag = body["type"]
        _require(tag in _KIND_FROM_TAG, f"action {name!r} has unknown kind tag {tag!r}")
        kind = _KIND_FROM_TAG[tag]
        states_doc = body["states"]
        _require(isinstance(states_doc, dict), f"action {name!r} states must be an object")
        if len(states_doc) < 2:
            raise SchemaError(f"action {name!r} has {len(states_doc)} state(s); at least 2 required")
        states: list[OutcomeState] = []
        for label, excluded in states_doc.items():
            _require(isinstance(label, str) and label, f"state label in {name!r} must be non-empty")
            _require(isinstance(excluded, list), f"state {label!r} exclusions must be a list")
            ruled_out = []
            for t in excluded:
                _require(isinstance(t, str), f"state {label!r} exclusion entries must be strings")
                if t not in truth_set:
                    raise DanglingTruthReference(
                        f"state {label!r} of action {name!r} rules out unknown truth {t!r}"
                    )
                ruled_out.append(t)
            interval = None
            if kind == NUMERIC:
                interval = parse_interval_label(label)
                if interval is None:
                    raise SchemaError(
                        f"action {name!r} is float-kind but state key {label!r} is not '[lo,hi]'"
                    )
                lo, hi = interval
                _require(math.isfinite(lo) and math.isfinite(hi),
                         f"interval {label!r} endpoints must be finite")
                _require(lo <= hi, f"interval {label!r} has lo > hi")
            if any(s.label == label for s in states):
                raise DuplicateName(f"duplicate state {label!r} in action {name!r}")
            states.append(OutcomeState(label=label, ruled_out=tuple(ruled_out), interval=interval))
        actions.append(ActionOutcomeSpec(name=name, kind=kind, states=tuple(states)))

    provenance = doc.get("provenance")
    if provenance is not None:
        _require(isinstance(provenance, dict), "provenance must be an object")

    return SeedConfig(
        domain_name=doc["domain"],
        goal=doc["goal"],
        truths=tuple(truths),
        actions=tuple(actions),
        provenance=provenance,
    )


def config_to_document(cfg: SeedConfig) -> dict:
    """SeedConfig back to its plain-JSON document form (stable field order)."""
    doc: dict = {
        "domain": cfg.domain_name,
        "goal": cfg.goal,
        "truths": list(cfg.truths),
        "outcomes": {
            a.name: {
                "type": _TAG_FROM_KIND[a.kind],
                "states": {s.label: list(s.ruled_out) for s in a.states},
            }
            for a in cfg.actions
        },
    }
    if cfg.provenance is not None:
        doc["provenance"] = dict(cfg.provenance)
    return doc


def serialize_seed_config(cfg: SeedConfig) -> str:
    """Canonical serialization; serialize(parse(s)) is a fixed point."""
    return json.dumps(config_to_document(cfg), indent=2, ensure_ascii=False) + "\n"


def _intervals_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    # Closed intervals: touching endpoints count as overlap.
    return a[0] <= b[1] and b[0] <= a[1]


def validate_seed_config(cfg: SeedConfig) -> ValidationReport:
    """Check every config invariant; enumerate all failures, not the first.

    Accepts arbitrarily constructed SeedConfig values (not only parsed
    ones), so structural invariants are re-checked here alongside the
    semantic ones.
    """
    violations: list[Violation] = []

    def flag(code: str, message: str, offender: str):
        violations.append(Violation(code, message, offender))

    seen_truths = set()
    for t in cfg.truths:
        if not t:
            flag("EMPTY_TRUTH", "truth name is empty", repr(t))
        elif t != t.strip():
            flag("WHITESPACE_TRUTH", "truth has leading/trailing whitespace", repr(t))
        if t in seen_truths:
            flag("DUPLICATE_TRUTH", "truth appears more than once", t)
        seen_truths.add(t)
    truth_set = set(cfg.truths)

    seen_actions = set()
    for spec in cfg.actions:
        if not spec.name:
            flag("EMPTY_ACTION", "action name is empty", repr(spec.name))
        if spec.name in seen_actions:
            flag("DUPLICATE_ACTION", "action appears more than once", spec.name)
        seen_actions.add(spec.name)
        if spec.kind not in (CATEGORICAL, NUMERIC):
            flag("BAD_KIND", f"unknown kind {spec.kind!r}", spec.name)
            continue
        if len(spec.states) < 2:
            flag("MIN_STATES", f"{len(spec.states)} state(s); at least 2 required", spec.name)
        seen_labels = set()
        intervals: list[tuple[str, tuple[float, float]]] = []
        for state in spec.states:
            if state.label in seen_labels:
                flag("DUPLICATE_STATE", "state label repeats within action",
                     f"{spec.name}/{state.label}")
            seen_labels.add(state.label)
            for t in state.ruled_out:
                if t not in truth_set:
                    flag("DANGLING_TRUTH", "ruled-out truth missing from truth list",
                         f"{spec.name}/{state.label}/{t}")
            if spec.kind == NUMERIC:
                if state.interval is None:
                    flag("BAD_INTERVAL", "numeric state lacks an interval",
                         f"{spec.name}/{state.label}")
                    continue
                lo, hi = state.interval
                if not (math.isfinite(lo) and math.isfinite(hi)):
                    flag("BAD_INTERVAL", "interval endpoints must be finite",
                         f"{spec.name}/{state.label}")
                elif lo > hi:
                    flag("BAD_INTERVAL", "interval lo > hi", f"{spec.name}/{state.label}")
                else:
                    intervals.append((state.label, (lo, hi)))
        for i in range(len(intervals)):
            for j in range(i + 1, len(intervals)):
                if _intervals_overlap(intervals[i][1], intervals[j][1]):
                    flag("OVERLAPPING_INTERVALS",
                         f"intervals {intervals[i][0]} and {intervals[j][0]} intersect",
                         spec.name)

    # A truth excluded by every state of every action can never survive
    # play; flagged only when at least one (action, state) pair exists
    # ("excluded by available actions" is vacuous otherwise).
    pairs = [(a, s) for a in cfg.actions for s in a.states]
    if pairs:
        for t in cfg.truths:
            if all(t in s.ruled_out for _, s in pairs):
                flag("UNIVERSALLY_EXCLUDED", "truth is ruled out by every state of every action", t)

    return ValidationReport(violations=tuple(violations))
