"""Minimal chat-completion client with retries, caching, and prompt assets.

All model traffic in the toolkit flows through ChatClient so that judging,
generation, and inference share one retry policy and one response cache.
Backends are pluggable; the HTTP one speaks the common chat-completions JSON
shape, and MockChatBackend keeps every test offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from .errors import (
    BackendUnavailable,
    ConfigError,
    ProtocolError,
    TemplateError,
    TransientBackendError,
)

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"bad role {self.role!r}")
        if not self.content:
            raise ValueError("empty message content")


@dataclass(frozen=True)
class ChatRequest:
    model_name: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_output_tokens: int = 256

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.messages[0].role == "assistant":
            raise ValueError("first message must be system or user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    usage: tuple[tuple[str, int], ...] = ()


def request_key(request: ChatRequest) -> str:
    """Cache key: hashes exactly the fields that determine the completion."""
    payload = json.dumps(
        {
            "model": request.model_name,
            "messages": [[m.role, m.content] for m in request.messages],
            "temperature": request.temperature,
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class MockChatBackend:
    """Scriptable offline backend.

    `script` may be a constant string, a list consumed in order, or a
    callable of the request. `fail_first` injects that many transient
    failures before any success, for retry tests.
    """

    def __init__(self, script: str | list[str] | Callable[[ChatRequest], str] = "ok",
                 *, fail_first: int = 0):
        self.script = script
        self.fail_first = fail_first
        self.calls: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls.append(request)
            if self.fail_first > 0:
                self.fail_first -= 1
                raise TransientBackendError("injected failure")
            if callable(self.script):
                content = self.script(request)
            elif isinstance(self.script, list):
                if not self.script:
                    raise TransientBackendError("script exhausted")
                content = self.script.pop(0)
            else:
                content = self.script
        return ChatResponse(content=content)


def hashed_choice_script(choices: Sequence[str]) -> Callable[[ChatRequest], str]:
    """Mock script: pick a canned reply by request hash.

    Deterministic per prompt, varied across prompts; lets offline pipeline
    runs exercise generation stages reproducibly.
    """
    fixed = list(choices)

    def script(request: ChatRequest) -> str:
        return fixed[int(request_key(request)[:8], 16) % len(fixed)]

    return script


class HttpChatBackend:
    """JSON-over-HTTP chat-completions backend.

    Credentials come from the environment variable named in the config;
    the key value itself never appears in configs, logs, or errors.
    """

    def __init__(self, base_url: str, *, credential_env: str = "NEGKIT_API_KEY",
                 timeout: float = 60.0, session=None):
        import requests

        self.base_url = base_url.rstrip("/")
        self.credential_env = credential_env
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, request: ChatRequest) -> ChatResponse:
        import requests

        api_key = os.environ.get(self.credential_env)
        if not api_key:
            raise ConfigError(f"credential env var {self.credential_env} is not set")
        body = {
            "model": request.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = self._session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransientBackendError(f"transport failure: {exc}") from None
        if resp.status_code in (429,) or resp.status_code >= 500:
            raise TransientBackendError(f"backend status {resp.status_code}")
        if resp.status_code >= 400:
            raise ProtocolError(f"backend rejected request: status {resp.status_code}")
        try:
            payload = resp.json()
            choice = payload["choices"][0]
            return ChatResponse(
                content=choice["message"]["content"],
                finish_reason=choice.get("finish_reason", "stop"),
                usage=tuple(sorted((k, int(v)) for k, v in payload.get("usage", {}).items())),
            )
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"cannot parse backend response: {exc}") from None


class ResponseCache:
    """Exact-request response cache, optionally persisted as JSONL."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._entries: dict[str, ChatResponse] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    self._entries[record["key"]] = ChatResponse(
                        content=record["content"],
                        finish_reason=record.get("finish_reason", "stop"),
                    )

    def get(self, key: str) -> ChatResponse | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, response: ChatResponse) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = response
            if self.path:
                record = {"key": key, "content": response.content,
                          "finish_reason": response.finish_reason}
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        return len(self._entries)


class ChatClient:
    """Retrying, caching front door for a ChatBackend.

    A request is sent at most 1 + retry_limit times; only transient failures
    are retried, with exponential backoff. Successful responses are cached
    by (model, messages, temperature), so repeat calls are free and a rerun
    of a labeling job resumes from the cache.
    """

    def __init__(self, backend: ChatBackend, *, model_name: str = "default",
                 retry_limit: int = 3, backoff: float = 0.5,
                 cache: ResponseCache | None = None, max_in_flight: int = 4):
        if retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")
        self.backend = backend
        self.model_name = model_name
        self.retry_limit = retry_limit
        self.backoff = backoff
        self.cache = cache if cache is not None else ResponseCache()
        self.max_in_flight = max(1, max_in_flight)

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = request_key(request)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        attempts = self.retry_limit + 1
        for attempt in range(attempts):
            try:
                response = self.backend.complete(request)
            except TransientBackendError as exc:
                if attempt + 1 == attempts:
                    raise BackendUnavailable(
                        f"giving up after {attempts} attempts: {exc}"
                    ) from None
                if self.backoff:
                    time.sleep(self.backoff * (2**attempt))
                continue
            self.cache.put(key, response)
            return response
        raise BackendUnavailable("unreachable")  # pragma: no cover

    def complete_many(self, requests: Sequence[ChatRequest]) -> list[ChatResponse]:
        """Complete a batch concurrently, preserving input order."""
        if not requests:
            return []
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            return list(pool.map(self.complete, requests))


# --- prompt assets -------------------------------------------------------

_ASSET_DIR = Path(__file__).parent / "assets" / "prompts"
_ROLE_MARKER = re.compile(r"^###\s*role:\s*(system|user|assistant)\s*$")
_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    messages: tuple[ChatMessage, ...]

    @property
    def placeholders(self) -> frozenset[str]:
        found = set()
        for message in self.messages:
            found.update(_PLACEHOLDER.findall(message.content))
        return frozenset(found)


def load_prompt_asset(name_or_path: str | Path) -> PromptTemplate:
    """Load a prompt template, from the bundled assets by bare name.

    Files are a sequence of `### role: <role>` sections; a file without
    markers is one user message. Text is kept verbatim apart from the final
    newline so prompts stay byte-auditable.
    """
    path = Path(name_or_path)
    if not path.suffix:
        path = _ASSET_DIR / f"{path.name}.txt"
    text = path.read_text(encoding="utf-8")

    sections: list[tuple[str, list[str]]] = []
    for line in text.splitlines():
        marker = _ROLE_MARKER.match(line)
        if marker:
            sections.append((marker.group(1), []))
        elif sections:
            sections[-1][1].append(line)
    if not sections:
        messages = (ChatMessage("user", text.rstrip("\n")),)
    else:
        messages = tuple(
            ChatMessage(role, "\n".join(lines).strip("\n")) for role, lines in sections
        )
    return PromptTemplate(name=path.stem, messages=messages)


def render_template(
    template: PromptTemplate,
    bindings: dict[str, str],
    *,
    model_name: str,
    temperature: float = 0.0,
    max_output_tokens: int = 256,
) -> ChatRequest:
    """Substitute bindings into a template; unbound placeholders are errors."""
    missing = template.placeholders - set(bindings)
    if missing:
        raise TemplateError(
            f"template {template.name!r} is missing bindings for {sorted(missing)}"
        )

    def fill(content: str) -> str:
        return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), content)

    return ChatRequest(
        model_name=model_name,
        messages=tuple(ChatMessage(m.role, fill(m.content)) for m in template.messages),
        temperature=temperature,
        max_output_tokens=max_output_tokens,
    )
