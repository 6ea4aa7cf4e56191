"""Deterministic stand-ins for a chat endpoint.

``QueueTransport`` replays a scripted reply queue (unit tests drive exact
edge cases with it). ``CannedPipelineTransport`` behaves like a tiny
always-correct generator model: it recognizes the pipeline stage from the
prompt and synthesizes proposals, seed configurations, guidebooks, and
audit verdicts deterministically from its seed, so the whole pipeline runs
hermetically and reproducibly. Either transport can also be served over
HTTP for integration tests against the real client.
"""

from __future__ import annotations

import json
import random
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import TransportError
from .client import COMPLETE, TRUNCATED, ChatRequest, ChatResponse


@dataclass
class QueueTransport:
    """Scripted reply queue; raises when a request finds the queue empty."""

    replies: list[ChatResponse] = field(default_factory=list)
    requests_seen: list[ChatRequest] = field(default_factory=list)

    def enqueue(self, content: str, finish_reason: str = COMPLETE,
                tokens_in: int = 0, tokens_out: int = 0):
        self.replies.append(ChatResponse(content, finish_reason, tokens_in, tokens_out))

    def send(self, request: ChatRequest) -> ChatResponse:
        self.requests_seen.append(request)
        if not self.replies:
            raise TransportError("mock reply queue is empty")
        return self.replies.pop(0)


CANNED_THEMES = [
    {"Goal": "Identify the anomaly destabilizing the reactor core",
     "Truths": "Reactor anomaly signatures",
     "Actions": "Sensor sweeps / Coolant assays / Containment stress probes"},
    {"Goal": "Determine which blight is spreading through the orchard",
     "Truths": "Orchard blight strains",
     "Actions": "Leaf inspections / Soil cultures / Canopy drone scans"},
    {"Goal": "Find the source of the deep-sea acoustic signal",
     "Truths": "Acoustic source candidates",
     "Actions": "Hydrophone triangulation / Sonar sweeps / Current profiling"},
    {"Goal": "Expose the forgery hidden in the archive collection",
     "Truths": "Forgery technique profiles",
     "Actions": "Ink chromatography / Paper dating / Provenance audits"},
    {"Goal": "Diagnose the fault grounding the airship fleet",
     "Truths": "Airship fault classes",
     "Actions": "Envelope pressure tests / Ballast inspections / Engine telemetry"},
    {"Goal": "Name the microbe thriving under the glacier",
     "Truths": "Glacial microbe lineages",
     "Actions": "Core sampling / Metabolic assays / Dye tracing"},
    {"Goal": "Pinpoint the failure stalling the printing press line",
     "Truths": "Press line failure modes",
     "Actions": "Roller alignment checks / Ink viscosity tests / Drive audits"},
    {"Goal": "Identify the comet fragment recovered from the tundra",
     "Truths": "Fragment composition classes",
     "Actions": "Spectrometry / Isotope ratios / Magnetic susceptibility"},
]

_GOAL_RE = re.compile(r"^Domain goal: (.+)$", re.MULTILINE)
_TRUTHS_RE = re.compile(r"^Candidate truths are: (.+)$", re.MULTILINE)
_ACTIONS_RE = re.compile(r"^Probing actions are: (.+)$", re.MULTILINE)
_COUNT_RE = re.compile(r"Propose exactly (\d+) distinct")
_MAPPING_RE = re.compile(r"^Outcome mapping: ", re.MULTILINE)


def _stem(desc: str, fallback: str) -> str:
    for word in re.findall(r"[A-Za-z]+", desc):
        if len(word) >= 4:
            return word.capitalize().rstrip("s") or fallback
    return fallback


def synthesize_config_doc(
    goal: str,
    truths_desc: str,
    actions_desc: str,
    seed: int,
    n_truths: int = 50,
    n_actions: int = 30,
) -> dict:
    """Generate a well-formed, validation-clean config document.

    Rule-out sets are intentionally broad (each state eliminates roughly
    two-fifths of the universe) so sampled tasks stay highly discriminative
    and exact optimal-play search remains cheap at both difficulty levels.
    """
    rng = random.Random(f"cfg:{seed}:{goal}")
    t_stem = _stem(truths_desc, "Truth")
    a_stem = _stem(actions_desc, "Action")
    domain = "".join(w.capitalize() for w in re.findall(r"[A-Za-z]+", t_stem))[:24] + "Env"
    truths = [f"{t_stem} {i:02d}" for i in range(n_truths)]
    outcomes: dict = {}
    for ai in range(n_actions):
        numeric = ai % 6 == 5
        k = 2 if rng.random() < 0.6 else 3
        states: dict[str, list[str]] = {}
        for si in range(k):
            label = f"[{10 * si},{10 * si + 9}]" if numeric else f"finding-{si}"
            states[label] = rng.sample(truths, rng.randint(20, 28))
        outcomes[f"{a_stem} {ai:02d}"] = {
            "type": "float" if numeric else "str",
            "states": states,
        }
    return {"domain": domain, "goal": goal, "truths": truths, "outcomes": outcomes}


def render_plain_book(ta_mapping: dict[str, dict[str, list[str]]]) -> str:
    """Deterministic prose rendering of a rule-out mapping."""
    lines = ["This guidebook explains what each observation eliminates."]
    for action, states in ta_mapping.items():
        lines.append("")
        lines.append(f"{action}:")
        for state, excluded in states.items():
            if excluded:
                lines.append(
                    f"  When {action} yields {state}, rule out: {', '.join(excluded)}."
                )
            else:
                lines.append(f"  A result of {state} from {action} rules nothing out.")
    return "\n".join(lines)


class CannedPipelineTransport:
    """Stage-aware deterministic generator model.

    ``truncate_config_at`` (bytes) splits config replies into that many
    byte-sized chunks delivered through the truncation/continue protocol,
    exercising reassembly end to end.
    """

    def __init__(self, seed: int = 0, truncate_config_at: int | None = None):
        self.seed = seed
        self.truncate_config_at = truncate_config_at
        self._pending: list[str] = []
        self.requests_seen: list[ChatRequest] = []

    def send(self, request: ChatRequest) -> ChatResponse:
        self.requests_seen.append(request)
        prompt = request.messages[-1]["content"]
        if prompt.startswith("Your previous reply was cut off"):
            return self._next_chunk()
        if "Propose exactly" in prompt:
            return self._propose(prompt)
        if prompt.startswith("Create the full configuration"):
            return self._config(prompt)
        if prompt.startswith("Write a clear natural-language guidebook"):
            return self._book(prompt)
        if prompt.startswith("Audit a deduction-game guidebook"):
            return self._reply("Every mapping entry is covered accurately. <ANSWER>True</ANSWER>")
        if request.messages[0]["role"] == "system" and "Remaining actions:" in prompt:
            return self._play(request)
        raise TransportError("canned transport cannot infer the stage from this prompt")

    def _reply(self, content: str, finish_reason: str = COMPLETE) -> ChatResponse:
        return ChatResponse(
            content=content,
            finish_reason=finish_reason,
            tokens_in=0,
            tokens_out=max(1, len(content) // 4),
        )

    def _propose(self, prompt: str) -> ChatResponse:
        n = int(_COUNT_RE.search(prompt).group(1))
        themes = list(CANNED_THEMES)
        random.Random(f"propose:{self.seed}").shuffle(themes)
        out = [themes[i % len(themes)] for i in range(n)]
        return self._reply(json.dumps(out, indent=2, ensure_ascii=False))

    def _config(self, prompt: str) -> ChatResponse:
        goal = _GOAL_RE.search(prompt).group(1).strip()
        truths_desc = _TRUTHS_RE.search(prompt).group(1).strip()
        actions_desc = _ACTIONS_RE.search(prompt).group(1).strip()
        doc = synthesize_config_doc(goal, truths_desc, actions_desc, self.seed)
        text = "Here is the configuration.\n```json\n" + json.dumps(
            doc, indent=2, ensure_ascii=False) + "\n```\n"
        if not self.truncate_config_at:
            return self._reply(text)
        size = self.truncate_config_at
        self._pending = [text[i:i + size] for i in range(0, len(text), size)]
        return self._next_chunk()

    def _next_chunk(self) -> ChatResponse:
        if not self._pending:
            raise TransportError("no pending continuation")
        chunk = self._pending.pop(0)
        reason = TRUNCATED if self._pending else COMPLETE
        return self._reply(chunk, finish_reason=reason)

    def _book(self, prompt: str) -> ChatResponse:
        m = _MAPPING_RE.search(prompt)
        if m is None:
            raise TransportError("book prompt lacks an outcome mapping")
        mapping, _ = json.JSONDecoder().raw_decode(prompt, m.end())
        return self._reply(render_plain_book(mapping))

    def _play(self, request: ChatRequest) -> ChatResponse:
        """Naive player: exhaust the action menu, then guess a candidate.

        Deliberately weak (no deduction) so evaluation pipelines have a
        live model-shaped opponent without any network dependency.
        """
        prompt = request.messages[-1]["content"]
        remaining = re.search(r"^Remaining actions: (.+)$", prompt, re.MULTILINE)
        if remaining and remaining.group(1).strip() != "(none)":
            action = remaining.group(1).split(", ")[0].strip()
            return self._reply(f"Probing further. <ACTION>{action}</ACTION>")
        system = request.messages[0]["content"]
        candidates = re.search(r"^Candidate truths: (.+)$", system, re.MULTILINE)
        if candidates is None:
            raise TransportError("play prompt lacks a candidate list")
        guess = candidates.group(1).split(", ")[0].strip()
        return self._reply(f"Out of probes; my answer is <ANSWER>{guess}</ANSWER>")


def serve_transport_http(transport, host: str = "127.0.0.1", port: int = 0):
    """Expose any transport as a local chat-completions HTTP service.

    Returns the started ``ThreadingHTTPServer``; callers own shutdown. The
    bound port is ``server.server_address[1]``.
    """

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802 (http.server API)
            if not self.path.endswith("/chat/completions"):
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length))
            request = ChatRequest(
                model=body.get("model", "mock"),
                messages=body["messages"],
                temperature=body.get("temperature"),
                max_tokens=body.get("max_tokens"),
            )
            try:
                reply = transport.send(request)
            except TransportError as exc:
                payload = json.dumps({"error": str(exc)}).encode("utf-8")
                self.send_response(500)
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)
                return
            payload = json.dumps({
                "choices": [{
                    "message": {"role": "assistant", "content": reply.content},
                    "finish_reason": "length" if reply.finish_reason == TRUNCATED else "stop",
                }],
                "usage": {"prompt_tokens": reply.tokens_in,
                          "completion_tokens": reply.tokens_out},
            }).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):  # keep test output quiet
            pass

    server = ThreadingHTTPServer((host, port), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
