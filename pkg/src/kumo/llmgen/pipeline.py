"""LLM-driven pipeline stages: proposals, seed configs, guidebooks.

Prompts are versioned text assets under ``templates/``. Config generation
recovers from truncated replies by asking the model to continue from the
cut, concatenating the raw chunks (at most three continuations), and
regenerates outright when the parsed document fails validation.
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass
from importlib import resources

from ..books import symbolic_book_text
from ..envmodel import (
    DomainProposal,
    SeedConfig,
    parse_seed_config,
    validate_seed_config,
)
from ..errors import (
    AgentTransportError,
    GenerationFailed,
    PersistentlyInvalid,
    SchemaError,
    VerdictUnparseable,
)
from ..simulator import AgentReply
from ..taskgen import TaskInstance
from .client import TRUNCATED, ChatClient, ChatResponse

MAX_CONTINUATIONS = 3  # extra queries allowed to finish a truncated reply
MAX_VALIDATION_RETRIES = 3
MAX_PROPOSAL_ROUNDS = 3
MAX_REVISION_ROUNDS = 2

STAGE_PROPOSE = "propose"
STAGE_SEED = "seed"
STAGE_BOOK = "book"
STAGE_REVISE = "revise"
STAGE_PLAY = "play"

_ANSWER_RE = re.compile(r"<\s*ANSWER\s*>(.*?)<\s*/\s*ANSWER\s*>", re.IGNORECASE | re.DOTALL)
_BOOK_RE = re.compile(r"<\s*BOOK\s*>(.*?)<\s*/\s*BOOK\s*>", re.IGNORECASE | re.DOTALL)


def load_template(name: str) -> str:
    return resources.files("kumo.llmgen").joinpath(f"templates/{name}").read_text("utf-8")


def _complete_with_continuation(client: ChatClient, stage: str, prompt: str) -> str:
    """One exchange, stitching together truncated replies verbatim."""
    messages = [{"role": "user", "content": prompt}]
    response: ChatResponse = client.ask(stage, messages)
    parts = [response.content]
    continue_prompt = load_template("continue.txt")
    attempts = 0
    while response.finish_reason == TRUNCATED:
        if attempts >= MAX_CONTINUATIONS:
            raise GenerationFailed(
                f"reply still truncated after {MAX_CONTINUATIONS} continuations"
            )
        attempts += 1
        messages = messages + [
            {"role": "assistant", "content": response.content},
            {"role": "user", "content": continue_prompt},
        ]
        response = client.ask(stage, messages)
        parts.append(response.content)
    return "".join(parts)


def _parse_proposal_entries(text: str) -> list[DomainProposal]:
    """Pull Goal/Truths/Actions entries out of a model reply.

    Accepts a JSON array or a Python-style list literal (single quotes);
    entries missing a field are dropped, not fatal.
    """
    payload = None
    start = text.find("[")
    if start >= 0:
        try:
            payload, _ = json.JSONDecoder().raw_decode(text, start)
        except json.JSONDecodeError:
            try:
                payload = ast.literal_eval(text[start:text.rfind("]") + 1])
            except (ValueError, SyntaxError):
                payload = None
    if payload is None:
        start = text.find("{")
        if start >= 0:
            try:
                payload = [json.JSONDecoder().raw_decode(text, start)[0]]
            except json.JSONDecodeError:
                try:
                    payload = [ast.literal_eval(text[start:text.rfind("}") + 1])]
                except (ValueError, SyntaxError):
                    payload = None
    if not isinstance(payload, list):
        return []
    out = []
    for entry in payload:
        if not isinstance(entry, dict):
            continue
        try:
            out.append(DomainProposal(
                goal=str(entry["Goal"]),
                truths_desc=str(entry["Truths"]),
                actions_desc=str(entry["Actions"]),
            ))
        except (KeyError, ValueError):
            continue
    return out


def propose_domains(client: ChatClient, n: int) -> list[DomainProposal]:
    """Ask for scenario domains until ``n`` well-formed ones are in hand."""
    if n < 1:
        raise ValueError("n must be >= 1")
    template = load_template("propose.txt")
    collected: list[DomainProposal] = []
    seen_goals: set[str] = set()
    for _ in range(MAX_PROPOSAL_ROUNDS):
        missing = n - len(collected)
        if missing <= 0:
            break
        text = _complete_with_continuation(
            client, STAGE_PROPOSE, template.format(n=missing)
        )
        for proposal in _parse_proposal_entries(text):
            if proposal.goal not in seen_goals:
                seen_goals.add(proposal.goal)
                collected.append(proposal)
    if len(collected) < n:
        raise GenerationFailed(f"only {len(collected)} of {n} proposals parsed")
    return collected[:n]


def extract_config_text(text: str) -> str:
    """Locate the config JSON document inside a model reply."""
    fence = re.search(r"```(?:json)?\s*\n(.*?)```", text, re.DOTALL)
    if fence:
        text = fence.group(1)
    decoder = json.JSONDecoder()
    idx = text.find("{")
    while idx >= 0:
        try:
            _, end = decoder.raw_decode(text, idx)
            return text[idx:end]
        except json.JSONDecodeError:
            idx = text.find("{", idx + 1)
    raise SchemaError("no JSON document found in reply")


def generate_seed_config(
    client: ChatClient,
    proposal: DomainProposal,
    *,
    provenance: dict | None = None,
) -> SeedConfig:
    """Generate, parse, and validate a seed config; regenerate on failure."""
    template = load_template("seed_config.txt")
    prompt = template.format(
        goal=proposal.goal,
        truths_desc=proposal.truths_desc,
        actions_desc=proposal.actions_desc,
    )
    failures: list[str] = []
    for _ in range(MAX_VALIDATION_RETRIES):
        text = _complete_with_continuation(client, STAGE_SEED, prompt)
        try:
            cfg = parse_seed_config(extract_config_text(text))
        except SchemaError as exc:
            failures.append(str(exc))
            continue
        report = validate_seed_config(cfg)
        if not report.ok:
            failures.append(report.summary())
            continue
        if provenance:
            cfg = SeedConfig(
                domain_name=cfg.domain_name,
                goal=cfg.goal,
                truths=cfg.truths,
                actions=cfg.actions,
                provenance={**(cfg.provenance or {}), **provenance},
            )
        return cfg
    raise PersistentlyInvalid(
        f"no valid config in {MAX_VALIDATION_RETRIES} generations: {failures}"
    )


def _book_prompt_fields(cfg: SeedConfig, task: TaskInstance) -> dict:
    mapping = cfg.rule_out_map(task.truths, task.actions)
    return {
        "domain": cfg.domain_name,
        "goal": cfg.goal,
        "truths": ", ".join(task.truths),
        "actions": ", ".join(task.actions),
        "ta_mapping": json.dumps(
            {a: {s: list(e) for s, e in states.items()} for a, states in mapping.items()},
            ensure_ascii=False,
        ),
    }


def write_knowledge_book(client: ChatClient, cfg: SeedConfig, task: TaskInstance) -> str:
    """Natural-language rendering of a task's rule-out mapping."""
    prompt = load_template("book.txt").format(**_book_prompt_fields(cfg, task))
    text = _complete_with_continuation(client, STAGE_BOOK, prompt)
    if not text.strip():
        raise GenerationFailed("empty knowledge book reply")
    return text.strip()


@dataclass(frozen=True)
class BookVerdict:
    passed: bool
    revised_book: str | None = None

    def __post_init__(self):
        if self.passed == (self.revised_book is not None):
            raise ValueError("revised_book present iff not passed")

    @property
    def final_book(self) -> str | None:
        return self.revised_book


def revise_knowledge_book(
    client: ChatClient, cfg: SeedConfig, task: TaskInstance, book: str
) -> BookVerdict:
    """Audit a book; on failure carry the model's revision (two rounds max)."""
    if not book.strip():
        raise ValueError("book must be non-empty")
    template = load_template("book_revision.txt")
    fields = _book_prompt_fields(cfg, task)
    current = book
    revised: str | None = None
    for _ in range(MAX_REVISION_ROUNDS):
        prompt = template.format(book=current, **fields)
        reply = _complete_with_continuation(client, STAGE_REVISE, prompt)
        answer = _ANSWER_RE.search(reply)
        if answer is None:
            raise VerdictUnparseable("no <ANSWER> tag in revision reply")
        verdict = answer.group(1).strip().lower()
        if verdict == "true":
            if revised is None:
                return BookVerdict(passed=True)
            return BookVerdict(passed=False, revised_book=revised)
        if verdict != "false":
            raise VerdictUnparseable(f"unrecognized verdict {answer.group(1)!r}")
        book_match = _BOOK_RE.search(reply)
        if book_match is None:
            raise VerdictUnparseable("verdict False without a <BOOK> revision")
        revised = book_match.group(1).strip()
        current = revised
    return BookVerdict(passed=False, revised_book=revised)


class LLMAgent:
    """Episode player backed by the chat client's ``play`` stage."""

    def __init__(self, client: ChatClient, name: str = "llm"):
        self.client = client
        self.name = name

    def reply(self, messages: list[dict]) -> AgentReply:
        try:
            response = self.client.ask(STAGE_PLAY, messages)
        except Exception as exc:
            raise AgentTransportError(str(exc)) from exc
        return AgentReply(
            text=response.content,
            tokens_in=response.tokens_in,
            tokens_out=response.tokens_out,
        )


def symbolic_book_for_task(cfg: SeedConfig, task: TaskInstance) -> str:
    """Book fallback when no language model is in the loop."""
    return symbolic_book_text(cfg, task)
