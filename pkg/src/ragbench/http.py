"""JSON-over-HTTP plumbing shared by the reranker, generator and judge clients."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import httpx

from .errors import ContextTooLong, MalformedResponse, ServiceError, ServiceUnavailable

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 425, 429, 500, 502, 503, 504})
_CONTEXT_MARKERS = ("context_length_exceeded", "context length", "maximum context", "too many tokens", "prompt is too long")


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 4
    backoff: float = 0.5
    max_backoff: float = 8.0

    def delay(self, attempt: int) -> float:
        return min(self.backoff * (2**attempt), self.max_backoff)


def post_json(
    client: httpx.Client,
    url: str,
    body: dict,
    *,
    retry: RetryPolicy = RetryPolicy(),
    headers: dict | None = None,
    query_id: str | None = None,
) -> dict:
    """POST ``body`` and return the decoded JSON reply.

    Connection errors, timeouts and retryable statuses are retried up to
    ``retry.attempts`` times in total before ServiceUnavailable is raised.
    """
    last = ""
    for attempt in range(retry.attempts):
        if attempt:
            time.sleep(retry.delay(attempt - 1))
        try:
            resp = client.post(url, json=body, headers=headers)
        except httpx.TransportError as exc:
            last = f"{type(exc).__name__}: {exc}"
            log.debug("POST %s attempt %d failed: %s", url, attempt + 1, last)
            continue
        if resp.status_code in RETRYABLE_STATUS:
            last = f"HTTP {resp.status_code}"
            log.debug("POST %s attempt %d got %s", url, attempt + 1, last)
            continue
        if resp.status_code >= 400:
            text = resp.text
            if any(marker in text.lower() for marker in _CONTEXT_MARKERS):
                raise ContextTooLong(f"service rejected prompt as too long: {text[:200]}", query_id=query_id, status=resp.status_code)
            raise ServiceError(f"{url} returned HTTP {resp.status_code}: {text[:200]}", query_id=query_id, status=resp.status_code)
        try:
            return resp.json()
        except ValueError:
            raise MalformedResponse(f"{url} returned non-JSON body", query_id=query_id) from None
    raise ServiceUnavailable(f"{url} unavailable after {retry.attempts} attempts ({last})", query_id=query_id)


def auth_headers(key: str | None) -> dict:
    return {"Authorization": f"Bearer {key}"} if key else {}
