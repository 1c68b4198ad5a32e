from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..errors import SchemaError


class Producer(str, enum.Enum):
    BM25 = "bm25"
    SPARSE = "sparse"
    DENSE = "dense"
    RERANKED = "reranked"
    ORACLE = "oracle"


def ranking_key(entry: tuple[str, float]) -> tuple[float, str]:
    return (-entry[1], entry[0])


@dataclass(frozen=True)
class RankedList:
    """Passages for one query, best first; equal scores are ordered by passage id."""

    query_id: str
    entries: tuple[tuple[str, float], ...]
    producer: Producer

    def __post_init__(self) -> None:
        object.__setattr__(self, "producer", Producer(self.producer))
        entries = tuple((str(pid), float(score)) for pid, score in self.entries)
        object.__setattr__(self, "entries", entries)
        seen = set()
        for i, (pid, score) in enumerate(entries):
            if pid in seen:
                raise ValueError(f"duplicate passage id {pid!r} in ranking for {self.query_id!r}")
            seen.add(pid)
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {pid!r}")
            if i and ranking_key(entries[i - 1]) > ranking_key((pid, score)):
                raise ValueError(f"ranking for {self.query_id!r} is not sorted at position {i}")

    @classmethod
    def from_scores(
        cls, query_id: str, scores: Iterable[tuple[str, float]], producer: Producer | str, k: int | None = None
    ) -> "RankedList":
        ordered = sorted(((pid, float(s)) for pid, s in scores), key=ranking_key)
        if k is not None:
            ordered = ordered[:k]
        return cls(query_id, tuple(ordered), producer)

    @property
    def passage_ids(self) -> list[str]:
        return [pid for pid, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def head(self, k: int) -> "RankedList":
        return RankedList(self.query_id, self.entries[:k], self.producer)

    def to_record(self) -> dict:
        return {"query_id": self.query_id, "entries": [[pid, s] for pid, s in self.entries], "producer": self.producer.value}

    @classmethod
    def from_record(cls, record: dict) -> "RankedList":
        return cls(record["query_id"], tuple((pid, s) for pid, s in record["entries"]), record["producer"])


@dataclass(frozen=True)
class RelevanceJudgment:
    query_id: str
    relevant_doc_ids: frozenset[str] = field(default_factory=frozenset)
    relevant_passage_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "relevant_doc_ids", frozenset(self.relevant_doc_ids))
        object.__setattr__(self, "relevant_passage_ids", frozenset(self.relevant_passage_ids or ()))

    def __bool__(self) -> bool:
        return bool(self.relevant_doc_ids or self.relevant_passage_ids)


def top_k(
    candidates: np.ndarray, scores: np.ndarray, id_rank: np.ndarray, passage_ids: Sequence[str], k: int
) -> list[tuple[str, float]]:
    """Top ``k`` of ``candidates`` (passage indices) by score, ties by passage id.

    ``id_rank[i]`` is the position of passage ``i`` in lexicographic id order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(candidates) == 0:
        return []
    cand_scores = scores[candidates]
    if len(candidates) > k:
        # keep everything tied with the k-th best so the id tie-break sees all of them
        kth = np.partition(cand_scores, len(cand_scores) - k)[len(cand_scores) - k]
        keep = cand_scores >= kth
        candidates, cand_scores = candidates[keep], cand_scores[keep]
    order = np.lexsort((id_rank[candidates], -cand_scores))[:k]
    return [(passage_ids[candidates[j]], float(cand_scores[j])) for j in order]


def lexicographic_rank(passage_ids: Sequence[str]) -> np.ndarray:
    rank = np.empty(len(passage_ids), dtype=np.int64)
    rank[sorted(range(len(passage_ids)), key=passage_ids.__getitem__)] = np.arange(len(passage_ids))
    return rank


def runs_to_jsonl(runs: Iterable[RankedList]) -> str:
    return "".join(json.dumps(run.to_record(), ensure_ascii=False) + "\n" for run in runs)


def parse_runs(lines: Iterable[str]) -> Iterator[RankedList]:
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield RankedList.from_record(json.loads(line))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad ranked run record: {exc}", line=lineno) from None


def write_runs(path: str | os.PathLike, runs: Iterable[RankedList]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(runs_to_jsonl(runs))


def read_runs(path: str | os.PathLike) -> Iterator[RankedList]:
    with open(path, encoding="utf-8") as fh:
        yield from parse_runs(fh)
