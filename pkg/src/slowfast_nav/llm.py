"""Chat-completion backend for the slow planner, with record and replay.

A live :class:`HttpChatClient` posts OpenAI-style ``/chat/completions``
requests.  :class:`RecordingClient` wraps any client and appends one fixture
record per call; :class:`ReplayClient` serves those records back by request
hash, so planner tests never touch the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Protocol, Union

from .errors import BackendError, ConfigError, FixtureMiss, SchemaError
from .planner import Completion, PlanContext, chain_messages, goal_messages, policy_messages

FIXTURE_SCHEMA_VERSION = 1
DEFAULT_KEY_ENV = "SLOWFAST_NAV_API_KEY"


def request_hash(request: dict) -> str:
    canonical = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResult:
    body: str
    duration: float


class ChatClient(Protocol):
    def send(self, request: dict) -> ChatResult: ...


def parse_body(body: str):
    """Message text and (prompt, completion) usage from a response body."""
    try:
        data = json.loads(body)
        text = data["choices"][0]["message"]["content"]
        usage = data.get("usage") or {}
        return text, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"malformed chat-completion body: {exc}") from exc


class HttpChatClient:
    """Blocking chat-completion client; safe to share across episode threads."""

    def __init__(self, base_url: str, api_key: Optional[str] = None, key_env: str = DEFAULT_KEY_ENV,
                 timeout: float = 60.0, transport=None):
        import httpx

        if api_key is None:
            api_key = os.environ.get(key_env)
        if not api_key:
            raise ConfigError(f"environment variable {key_env} holding the API key is not set")
        self._http = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=timeout,
            transport=transport,
        )

    def send(self, request: dict) -> ChatResult:
        import httpx

        start = time.perf_counter()
        try:
            resp = self._http.post("/chat/completions", json=request)
        except httpx.HTTPError as exc:
            raise BackendError(f"request failed: {exc}") from exc
        duration = time.perf_counter() - start
        if resp.status_code != 200:
            raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return ChatResult(resp.text, duration)

    def close(self):
        self._http.close()


@dataclass(frozen=True)
class FixtureRecord:
    request_hash: str
    request: dict
    response_body: str
    prompt_tokens: int
    completion_tokens: int
    duration: float

    def to_dict(self) -> dict:
        return {
            "schema_version": FIXTURE_SCHEMA_VERSION,
            "request_hash": self.request_hash,
            "request": self.request,
            "response_body": self.response_body,
            "usage": {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens},
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, d: dict, where: str = "fixture") -> "FixtureRecord":
        expected = {"schema_version", "request_hash", "request", "response_body", "usage", "duration"}
        if set(d) != expected:
            raise SchemaError(f"{where}: expected fields {sorted(expected)}, got {sorted(d)}")
        if d["schema_version"] != FIXTURE_SCHEMA_VERSION:
            raise SchemaError(f"{where}: schema_version {d['schema_version']!r} != {FIXTURE_SCHEMA_VERSION}")
        usage = d["usage"]
        return cls(d["request_hash"], d["request"], d["response_body"],
                   int(usage["prompt_tokens"]), int(usage["completion_tokens"]), float(d["duration"]))


def load_fixtures(path: Union[str, Path]) -> List[FixtureRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc.msg}") from exc
            out.append(FixtureRecord.from_dict(d, f"{path}:{lineno}"))
    return out


class RecordingClient:
    """Forward to ``inner`` and append every successful exchange to ``path``."""

    def __init__(self, inner: ChatClient, path: Union[str, Path]):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()
        self.recorded = 0

    def send(self, request: dict) -> ChatResult:
        result = self.inner.send(request)
        _, pt, ct = parse_body(result.body)
        rec = FixtureRecord(request_hash(request), request, result.body, pt, ct, result.duration)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            self.recorded += 1
        return result


class ReplayClient:
    """Serve recorded responses; repeated identical requests are served in order."""

    def __init__(self, records: Iterable[FixtureRecord]):
        self._queues = defaultdict(deque)
        for rec in records:
            self._queues[rec.request_hash].append(rec)
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_file(cls, path) -> "ReplayClient":
        return cls(load_fixtures(path))

    def send(self, request: dict) -> ChatResult:
        key = request_hash(request)
        with self._lock:
            queue = self._queues.get(key)
            if not queue:
                raise FixtureMiss(f"no recorded response for request {key[:12]}")
            rec = queue.popleft() if len(queue) > 1 else queue[0]
            self.calls += 1
        return ChatResult(rec.response_body, rec.duration)


class LLMBackend:
    """Planner backend that renders the stage prompts and sends them to ``client``."""

    def __init__(self, client: ChatClient, model: str, temperature: float = 0.0):
        self.client = client
        self.model = model
        self.temperature = temperature

    def _complete(self, messages: List[dict]) -> Completion:
        request = {"model": self.model, "messages": messages, "temperature": self.temperature}
        result = self.client.send(request)
        text, pt, ct = parse_body(result.body)
        return Completion(text, pt, ct, result.duration)

    def goal(self, instruction: str, reminder: Optional[str] = None) -> Completion:
        return self._complete(goal_messages(instruction, reminder))

    def policy(self, ctx: PlanContext, reminder: Optional[str] = None) -> Completion:
        return self._complete(policy_messages(ctx, reminder))

    def chain(self, reasoning: str, horizon: int, reminder: Optional[str] = None) -> Completion:
        return self._complete(chain_messages(reasoning, horizon, reminder))


def make_body(text: str, prompt_tokens: int, completion_tokens: int, model: str = "fixture") -> str:
    """Chat-completion response body in the wire format the client expects."""
    return json.dumps({
        "object": "chat.completion",
        "model": model,
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens,
                  "total_tokens": prompt_tokens + completion_tokens},
    })
