"""LLM-as-judge answer equivalence (LLMeval)."""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import httpx

from ..errors import ConfigError, NoReferences, ServiceError
from ..generation.client import ChatEndpoint, chat_completion
from ..http import RetryPolicy

LLMEVAL_TEMPLATE = (
    "You are an evaluation tool. Just answer by {{Yes}} or {{No}}. Here is a question, a golden answer "
    "and an AI-generated answer. Judge whether the AI-generated answer is correct according to the "
    "question and golden answer, answer with {{Yes}} or {{No}}.\n"
    "Question: {question}.\n"
    "Golden answer: {answer}\n"
    "Generated answer: {prediction} Response: {{"
)

_VERDICT = re.compile(r"\b(yes|true|no|false)\b", re.IGNORECASE)
_ACCEPT = frozenset({"yes", "true"})


@dataclass(frozen=True)
class JudgeEndpoint:
    base_url: str
    model_id: str
    timeout: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    api_key: str | None = None
    max_in_flight: int = 8
    max_tokens: int = 16

    def chat(self) -> ChatEndpoint:
        return ChatEndpoint(self.base_url, self.api_key, self.timeout, self.retry, self.max_in_flight)

    @classmethod
    def from_env(cls, model_id: str, **overrides) -> "JudgeEndpoint":
        url = overrides.pop("base_url", None) or os.environ.get("RAGBENCH_JUDGE_URL")
        if not url:
            raise ConfigError("no judge endpoint configured (set RAGBENCH_JUDGE_URL)")
        overrides.setdefault("api_key", os.environ.get("RAGBENCH_JUDGE_KEY"))
        return cls(url, model_id, **overrides)


@dataclass(frozen=True)
class JudgeVerdict:
    score: int
    raw: str


def llmeval_prompt(question: str, reference: str, prediction: str) -> str:
    return LLMEVAL_TEMPLATE.format(question=question, answer=reference, prediction=prediction)


def parse_verdict(text: str) -> int:
    """1 if the first yes/true/no/false word is an acceptance, else 0 (including no verdict at all)."""
    m = _VERDICT.search(text)
    return int(m is not None and m.group(1).lower() in _ACCEPT)


def llmeval(
    endpoint: JudgeEndpoint,
    question: str,
    references: Sequence[str],
    response: str,
    *,
    client: httpx.Client | None = None,
    query_id: str | None = None,
) -> JudgeVerdict:
    """Ask the judge whether ``response`` answers ``question``; only the first reference is shown."""
    if isinstance(references, str):
        references = [references]
    if not references:
        raise NoReferences("llmeval needs a reference answer")
    prompt = llmeval_prompt(question, references[0], response)
    own = client is None
    client = client or httpx.Client(timeout=endpoint.timeout)
    try:
        raw = chat_completion(
            client,
            endpoint.chat(),
            [{"role": "user", "content": prompt}],
            model=endpoint.model_id,
            temperature=0.0,
            max_tokens=endpoint.max_tokens,
            query_id=query_id,
        )
    finally:
        if own:
            client.close()
    return JudgeVerdict(parse_verdict(raw), raw)


def llmeval_batch(
    endpoint: JudgeEndpoint, items: Sequence[tuple[str, str, Sequence[str], str]]
) -> list[JudgeVerdict | None]:
    """Judge ``(example_id, question, references, response)`` items in order.

    Items whose request fails after retries come back as None (unscored).
    """
    if not items:
        return []
    with httpx.Client(timeout=endpoint.timeout) as client:

        def one(item):
            example_id, question, refs, response = item
            try:
                return llmeval(endpoint, question, refs, response, client=client, query_id=example_id)
            except ServiceError:
                return None

        with ThreadPoolExecutor(max_workers=max(1, min(endpoint.max_in_flight, len(items)))) as pool:
            return list(pool.map(one, items))
