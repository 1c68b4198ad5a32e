"""Deterministic mock chat-completion and rerank services on local loopback.

The mocks speak the same wire protocols as the real services so that client
retry, batching and reassembly code is exercised for real. Every request is
appended to a call log, readable in-process or via ``GET /calls``.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Mapping, Sequence

from ..errors import PortUnavailable


@dataclass
class MockReply:
    """Explicit HTTP reply, for responders that need to simulate service errors."""

    status: int
    body: Any


def body_hash(body: Mapping) -> str:
    return hashlib.sha256(json.dumps(body, sort_keys=True, ensure_ascii=False).encode()).hexdigest()


@dataclass
class MockBehavior:
    """How a mock answers.

    Lookup order per request: ``script`` (keyed by :func:`body_hash` of the
    request body), then the next item of ``sequence``, then ``responder``.
    The first ``fail_first`` requests are answered with ``fail_status``.
    """

    responder: Callable[[dict], Any] | None = None
    script: Mapping[str, Any] = field(default_factory=dict)
    sequence: Sequence[Any] = ()
    fail_first: int = 0
    fail_status: int = 503
    latency: tuple[float, float] = (0.0, 0.0)
    seed: int = 0


class MockService:
    def __init__(self, kind: str, behavior: MockBehavior, host: str = "127.0.0.1", port: int = 0):
        self.kind = kind
        self.behavior = behavior
        self._lock = threading.Lock()
        self._calls: list[dict] = []
        self._rng = random.Random(behavior.seed)
        self._seq_pos = 0
        self._served = 0
        try:
            self._server = ThreadingHTTPServer((host, port), self._handler_class())
        except OSError as exc:
            raise PortUnavailable(f"cannot bind mock {kind} service on {host}:{port}: {exc}") from exc
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, args=(0.05,), name=f"mock-{kind}", daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def calls(self) -> list[dict]:
        with self._lock:
            return list(self._calls)

    def count(self, path: str | None = None) -> int:
        with self._lock:
            return sum(1 for c in self._calls if path is None or c["path"] == path)

    def reset(self) -> None:
        with self._lock:
            self._calls.clear()
            self._served = 0
            self._seq_pos = 0
            self._rng = random.Random(self.behavior.seed)

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "MockService":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def _next(self, body: dict) -> tuple[int, Any, float]:
        b = self.behavior
        with self._lock:
            self._served += 1
            n = self._served
            delay = self._rng.uniform(*b.latency) if b.latency[1] > 0 else 0.0
            if n <= b.fail_first:
                return b.fail_status, {"error": {"message": "injected fault"}}, delay
            key = body_hash(body)
            if key in b.script:
                reply = b.script[key]
            elif self._seq_pos < len(b.sequence):
                reply = b.sequence[self._seq_pos]
                self._seq_pos += 1
            elif b.responder is not None:
                reply = None
            else:
                return 500, {"error": {"message": "mock has no response for this request"}}, delay
        if reply is None:
            reply = b.responder(body)
        if isinstance(reply, MockReply):
            return reply.status, reply.body, delay
        return 200, self._wrap(body, reply), delay

    def _wrap(self, body: dict, reply: Any) -> dict:
        if self.kind == "chat":
            if isinstance(reply, dict):
                return reply
            return {
                "object": "chat.completion",
                "model": body.get("model", ""),
                "choices": [{"index": 0, "message": {"role": "assistant", "content": reply}, "finish_reason": "stop"}],
            }
        return reply if isinstance(reply, dict) else {"scores": list(reply)}

    def _handler_class(self):
        service = self
        expected_path = "/v1/chat/completions" if self.kind == "chat" else "/rerank"

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args) -> None:
                pass

            def _send(self, status: int, payload: Any) -> None:
                raw = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

            def do_GET(self) -> None:
                if self.path.rstrip("/") == "/calls":
                    calls = service.calls
                    self._send(200, {"count": len(calls), "calls": calls})
                else:
                    self._send(404, {"error": {"message": "not found"}})

            def do_POST(self) -> None:
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    body = json.loads(raw or b"{}")
                except json.JSONDecodeError:
                    self._send(400, {"error": {"message": "invalid JSON"}})
                    return
                if self.path != expected_path:
                    self._send(404, {"error": {"message": f"unknown path {self.path}"}})
                    return
                status, payload, delay = service._next(body)
                with service._lock:
                    service._calls.append({"path": self.path, "body": body, "status": status})
                if delay:
                    time.sleep(delay)
                self._send(status, payload)

        return Handler


def start_mock_chat_service(behavior: MockBehavior, port: int = 0) -> MockService:
    return MockService("chat", behavior, port=port)


def start_mock_rerank_service(behavior: MockBehavior, port: int = 0) -> MockService:
    return MockService("rerank", behavior, port=port)


# chat responders

def _user_message(body: dict) -> str:
    users = [m.get("content", "") for m in body.get("messages", []) if m.get("role") == "user"]
    return users[-1] if users else ""


def echo() -> Callable[[dict], str]:
    """Reply with the last user message."""
    return _user_message


def constant(text: str) -> Callable[[dict], str]:
    return lambda body: text


_BACKGROUND = re.compile(r"Background:\n(.*?)\n\nQuestion:", re.DOTALL)


def extractive(pattern: str, fallback: str = "I don't know.") -> Callable[[dict], str]:
    """Reply with the first match of ``pattern`` inside the prompt's Background block."""
    rx = re.compile(pattern)

    def respond(body: dict) -> str:
        block = _BACKGROUND.search(_user_message(body))
        hit = rx.search(block.group(1)) if block else None
        return hit.group(0) if hit else fallback

    return respond


def context_too_long(limit_chars: int, inner: Callable[[dict], Any]) -> Callable[[dict], Any]:
    """Reject prompts longer than ``limit_chars`` the way OpenAI-style servers do."""

    def respond(body: dict) -> Any:
        size = sum(len(m.get("content", "")) for m in body.get("messages", []))
        if size > limit_chars:
            return MockReply(400, {"error": {"code": "context_length_exceeded", "message": "maximum context length exceeded"}})
        return inner(body)

    return respond


# rerank responders

def score_by_index() -> Callable[[dict], list[float]]:
    """Score = position of the passage inside the request batch."""
    return lambda body: [float(i) for i in range(len(body["passages"]))]


def score_from_mapping(scores: Mapping[str, float]) -> Callable[[dict], list[float]]:
    return lambda body: [float(scores[p["id"]]) for p in body["passages"]]


def score_by_overlap() -> Callable[[dict], list[float]]:
    """Fraction of distinct lowercase query words that occur in the passage text."""

    def respond(body: dict) -> list[float]:
        q = set(re.findall(r"\w+", body["query"].lower()))
        out = []
        for p in body["passages"]:
            words = set(re.findall(r"\w+", p["text"].lower()))
            out.append(len(q & words) / len(q) if q else 0.0)
        return out

    return respond
