"""Provider-agnostic chat client over a chat-completion style HTTP wire.

One wire shape covers every provider this package talks to: POST
``{base_url}/chat/completions`` with role-tagged messages, reply carrying
``choices[0].message.content``, a finish reason, and token usage. The
credential comes from an environment variable so config files stay free of
secrets. Transient transport failures (connection errors, 5xx, 429) are
retried with exponential backoff.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests

from ..errors import AuthError, RateLimited, TransportError

COMPLETE = "complete"
TRUNCATED = "truncated"

API_KEY_ENV = "KUMO_LLM_API_KEY"


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: list[dict]  # {"role": system|user|assistant, "content": str}
    temperature: float | None = None
    max_tokens: int | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        previous = None
        for i, m in enumerate(self.messages):
            role = m.get("role")
            if role not in ("system", "user", "assistant"):
                raise ValueError(f"bad role {role!r}")
            if role == "system" and i > 0:
                raise ValueError("system messages only at the start")
            if role == previous and role != "system":
                raise ValueError(f"consecutive {role!r} messages")
            previous = role


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str  # COMPLETE or TRUNCATED
    tokens_in: int = 0
    tokens_out: int = 0


class ChatTransport(Protocol):
    def send(self, request: ChatRequest) -> ChatResponse: ...


@dataclass
class EndpointConfig:
    """Where to send chat requests and which model serves each stage."""

    base_url: str
    models: dict[str, str] = field(default_factory=dict)  # stage -> model id
    default_model: str = "default"
    temperature: float | None = None
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    api_key_env: str = API_KEY_ENV

    def model_for(self, stage: str) -> str:
        return self.models.get(stage, self.default_model)


def load_endpoint_config(path: str | Path) -> EndpointConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return EndpointConfig(
        base_url=doc["base_url"],
        models=dict(doc.get("models", {})),
        default_model=doc.get("default_model", "default"),
        temperature=doc.get("temperature"),
        timeout=doc.get("timeout", 60.0),
        max_retries=doc.get("max_retries", 3),
        backoff_base=doc.get("backoff_base", 0.5),
        api_key_env=doc.get("api_key_env", API_KEY_ENV),
    )


class HttpChatTransport:
    """Blocking HTTP transport with retry/backoff on transient failures."""

    def __init__(self, config: EndpointConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def send(self, request: ChatRequest) -> ChatResponse:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload: dict = {"model": request.model, "messages": request.messages}
        if request.temperature is not None:
            payload["temperature"] = request.temperature
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens

        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                resp = self.session.post(
                    url, json=payload, headers=self._headers(),
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credential (HTTP {resp.status_code})")
            if resp.status_code == 429:
                rate_limited = True
                last_error = TransportError("rate limited")
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"server error HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected HTTP {resp.status_code}: {resp.text[:200]}")
            return _parse_completion(resp.json())
        if rate_limited:
            raise RateLimited(f"still rate limited after {self.config.max_retries} retries")
        raise TransportError(f"transport failed after retries: {last_error}")


def _parse_completion(doc: dict) -> ChatResponse:
    try:
        choice = doc["choices"][0]
        content = choice["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"malformed completion payload: {exc}") from exc
    finish = choice.get("finish_reason", "stop")
    usage = doc.get("usage", {})
    return ChatResponse(
        content=content,
        finish_reason=TRUNCATED if finish == "length" else COMPLETE,
        tokens_in=int(usage.get("prompt_tokens", 0)),
        tokens_out=int(usage.get("completion_tokens", 0)),
    )


class ChatClient:
    """Stage-aware front end over a transport."""

    def __init__(
        self,
        transport: ChatTransport,
        *,
        models: dict[str, str] | None = None,
        default_model: str = "default",
        temperature: float | None = None,
    ):
        self.transport = transport
        self.models = dict(models or {})
        self.default_model = default_model
        self.temperature = temperature

    @classmethod
    def for_endpoint(cls, config: EndpointConfig) -> "ChatClient":
        return cls(
            HttpChatTransport(config),
            models=config.models,
            default_model=config.default_model,
            temperature=config.temperature,
        )

    def chat(self, request: ChatRequest) -> ChatResponse:
        return self.transport.send(request)

    def ask(self, stage: str, messages: list[dict]) -> ChatResponse:
        """Send one exchange using the model configured for a stage."""
        request = ChatRequest(
            model=self.models.get(stage, self.default_model),
            messages=messages,
            temperature=self.temperature,
        )
        return self.chat(request)
