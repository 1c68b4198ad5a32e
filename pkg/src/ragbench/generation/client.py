"""OpenAI-compatible chat-completions client.

Requests go to ``POST {base_url}/v1/chat/completions`` with role-tagged
messages; chat templates are left to the serving layer.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import httpx

from ..errors import ConfigError, MalformedResponse, RagbenchError
from ..http import RetryPolicy, auth_headers, post_json
from .prompts import PromptBundle


def canonical_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode()).hexdigest()


@dataclass(frozen=True)
class ChatEndpoint:
    base_url: str
    api_key: str | None = None
    timeout: float = 120.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    max_in_flight: int = 8

    @property
    def url(self) -> str:
        base = self.base_url.rstrip("/")
        if base.endswith("/v1"):
            base = base[:-3]
        return base + "/v1/chat/completions"

    @classmethod
    def from_env(cls, prefix: str = "RAGBENCH_LLM", **overrides) -> "ChatEndpoint":
        url = overrides.pop("base_url", None) or os.environ.get(f"{prefix}_URL")
        if not url:
            raise ConfigError(f"no chat endpoint configured (set {prefix}_URL)")
        overrides.setdefault("api_key", os.environ.get(f"{prefix}_KEY"))
        return cls(url, **overrides)


@dataclass(frozen=True)
class DecodeConfig:
    model_id: str
    max_new_tokens: int = 128
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def hash(self) -> str:
        return canonical_hash(asdict(self))[:16]


@dataclass
class GenerationRecord:
    query_id: str
    prompt: PromptBundle
    response: str
    model_id: str
    config_hash: str
    upstream: dict[str, str]
    wall_time: float = 0.0
    failed: bool = False
    error: str | None = None

    def to_record(self) -> dict:
        """Persistable form; wall time is left out so artifacts stay reproducible."""
        return {
            "query_id": self.query_id,
            "prompt": self.prompt.to_record(),
            "response": self.response,
            "model_id": self.model_id,
            "config_hash": self.config_hash,
            "upstream": dict(sorted(self.upstream.items())),
            "failed": self.failed,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "GenerationRecord":
        return cls(
            query_id=record["query_id"],
            prompt=PromptBundle.from_record(record["prompt"]),
            response=record["response"],
            model_id=record["model_id"],
            config_hash=record["config_hash"],
            upstream=dict(record["upstream"]),
            wall_time=record.get("wall_time", 0.0),
            failed=record.get("failed", False),
            error=record.get("error"),
        )


def chat_completion(
    client: httpx.Client,
    endpoint: ChatEndpoint,
    messages: list[dict],
    *,
    model: str,
    temperature: float,
    max_tokens: int,
    query_id: str | None = None,
) -> str:
    body = {"model": model, "messages": messages, "temperature": temperature, "max_tokens": max_tokens}
    reply = post_json(
        client, endpoint.url, body, retry=endpoint.retry, headers=auth_headers(endpoint.api_key), query_id=query_id
    )
    try:
        content = reply["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse("chat reply lacks choices[0].message.content", query_id=query_id) from None
    if content is None:
        return ""
    if not isinstance(content, str):
        raise MalformedResponse(f"chat content is {type(content).__name__}, not a string", query_id=query_id)
    return content


def generate(
    endpoint: ChatEndpoint,
    bundle: PromptBundle,
    config: DecodeConfig,
    *,
    query_id: str = "",
    upstream: Mapping[str, str] | None = None,
    client: httpx.Client | None = None,
) -> GenerationRecord:
    own = client is None
    client = client or httpx.Client(timeout=endpoint.timeout)
    start = time.perf_counter()
    try:
        text = chat_completion(
            client,
            endpoint,
            bundle.messages(),
            model=config.model_id,
            temperature=config.temperature,
            max_tokens=config.max_new_tokens,
            query_id=query_id,
        )
    finally:
        if own:
            client.close()
    return GenerationRecord(
        query_id=query_id,
        prompt=bundle,
        response=text,
        model_id=config.model_id,
        config_hash=config.hash(),
        upstream=dict(upstream or {}),
        wall_time=time.perf_counter() - start,
    )


def generate_batch(
    endpoint: ChatEndpoint,
    items: Sequence[tuple[str, PromptBundle]],
    config: DecodeConfig,
    *,
    upstream: Mapping[str, str] | None = None,
    fail_fast: bool = False,
) -> list[GenerationRecord]:
    """Generate for ``(query_id, bundle)`` pairs; results keep the input order.

    A failing item yields a record with ``failed=True`` unless ``fail_fast``
    is set, in which case the first error is raised.
    """
    if not items:
        return []

    with httpx.Client(timeout=endpoint.timeout) as client:

        def one(item: tuple[str, PromptBundle]) -> GenerationRecord:
            qid, bundle = item
            try:
                return generate(endpoint, bundle, config, query_id=qid, upstream=upstream, client=client)
            except RagbenchError as exc:
                if fail_fast:
                    raise
                return GenerationRecord(
                    query_id=qid,
                    prompt=bundle,
                    response="",
                    model_id=config.model_id,
                    config_hash=config.hash(),
                    upstream=dict(upstream or {}),
                    failed=True,
                    error=f"{type(exc).__name__}: {exc}",
                )

        with ThreadPoolExecutor(max_workers=max(1, min(endpoint.max_in_flight, len(items)))) as pool:
            futures = [pool.submit(one, item) for item in items]
            try:
                return [f.result() for f in futures]
            except BaseException:
                for f in futures:
                    f.cancel()
                raise
