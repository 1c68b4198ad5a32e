"""Client for an external cross-encoder scoring service.

Protocol: ``POST {base_url}/rerank`` with
``{"query": str, "passages": [{"id": str, "text": str}, ...]}``; the reply is
``{"scores": [float, ...]}`` aligned with the request passages.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import httpx

from .corpus import CorpusStore
from .errors import ConfigError, MalformedResponse
from .http import RetryPolicy, auth_headers, post_json
from .retrieval.ranking import Producer, RankedList


@dataclass(frozen=True)
class RerankerEndpoint:
    base_url: str
    timeout: float = 60.0
    max_batch_size: int = 64
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    api_key: str | None = None
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.max_batch_size < 1:
            raise ConfigError("reranker max_batch_size must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigError("reranker max_in_flight must be >= 1")

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + "/rerank"

    @classmethod
    def from_env(cls, **overrides) -> "RerankerEndpoint":
        url = overrides.pop("base_url", None) or os.environ.get("RAGBENCH_RERANKER_URL")
        if not url:
            raise ConfigError("no reranker URL configured (set RAGBENCH_RERANKER_URL)")
        overrides.setdefault("api_key", os.environ.get("RAGBENCH_RERANKER_KEY"))
        return cls(url, **overrides)


@dataclass(frozen=True)
class RerankRequest:
    query: str
    passages: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "passages", tuple((str(i), str(t)) for i, t in self.passages))
        if not self.passages:
            raise ValueError("rerank request needs at least one passage")
        ids = [pid for pid, _ in self.passages]
        if len(set(ids)) != len(ids):
            raise ValueError("rerank request has duplicate passage ids")


def _score_batch(client: httpx.Client, endpoint: RerankerEndpoint, query: str, batch: Sequence[tuple[str, str]]) -> list[float]:
    body = {"query": query, "passages": [{"id": pid, "text": text} for pid, text in batch]}
    reply = post_json(client, endpoint.url, body, retry=endpoint.retry, headers=auth_headers(endpoint.api_key))
    scores = reply.get("scores") if isinstance(reply, dict) else None
    if not isinstance(scores, list) or len(scores) != len(batch):
        got = len(scores) if isinstance(scores, list) else "no"
        raise MalformedResponse(f"reranker returned {got} scores for {len(batch)} passages")
    out = []
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
            raise MalformedResponse(f"reranker returned a non-finite or non-numeric score: {s!r}")
        out.append(float(s))
    return out


def score_pairs(endpoint: RerankerEndpoint, request: RerankRequest, *, client: httpx.Client | None = None) -> list[float]:
    """One score per passage, in input order, however the work was batched."""
    m = endpoint.max_batch_size
    batches = [request.passages[i : i + m] for i in range(0, len(request.passages), m)]
    own = client is None
    client = client or httpx.Client(timeout=endpoint.timeout)
    try:
        if len(batches) == 1 or endpoint.max_in_flight == 1:
            results = [_score_batch(client, endpoint, request.query, b) for b in batches]
        else:
            with ThreadPoolExecutor(max_workers=min(endpoint.max_in_flight, len(batches))) as pool:
                results = list(pool.map(lambda b: _score_batch(client, endpoint, request.query, b), batches))
    finally:
        if own:
            client.close()
    return [s for batch in results for s in batch]


def rerank(
    endpoint: RerankerEndpoint,
    ranked: RankedList,
    store: CorpusStore,
    keep: int,
    query: str,
    *,
    client: httpx.Client | None = None,
) -> RankedList:
    """Rescore every entry of ``ranked`` against ``query`` and keep the best ``keep``."""
    if keep < 1:
        raise ValueError("keep must be >= 1")
    if not ranked.entries:
        raise ValueError(f"nothing to rerank for {ranked.query_id!r}")
    ids = ranked.passage_ids
    request = RerankRequest(query, tuple((pid, store.get_passage(pid).prompt_text) for pid in ids))
    scores = score_pairs(endpoint, request, client=client)
    return RankedList.from_scores(ranked.query_id, zip(ids, scores), Producer.RERANKED, keep)
