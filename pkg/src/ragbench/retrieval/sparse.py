"""Learned-sparse retrieval: dot products over term -> weight maps via an inverted index."""

from __future__ import annotations

import json
import math
import os
from typing import Iterable, Iterator, Mapping

import numpy as np

from ..errors import MissingVectors, SchemaError
from .ranking import Producer, RankedList, lexicographic_rank, top_k

SparseVector = dict[str, float]


def clean_vector(weights: Mapping[str, float]) -> SparseVector:
    """Drop zero weights; reject negative or non-finite ones."""
    out = {}
    for term, w in weights.items():
        w = float(w)
        if not math.isfinite(w) or w < 0:
            raise ValueError(f"invalid weight {w!r} for term {term!r}")
        if w:
            out[str(term)] = w
    return out


class SparseIndex:
    def __init__(self, vectors: Mapping[str, Mapping[str, float]]):
        self.passage_ids = list(vectors)
        self._id_rank = lexicographic_rank(self.passage_ids)
        postings: dict[str, tuple[list[int], list[float]]] = {}
        for idx, pid in enumerate(self.passage_ids):
            for term, w in clean_vector(vectors[pid]).items():
                docs, ws = postings.setdefault(term, ([], []))
                docs.append(idx)
                ws.append(w)
        self._postings = {t: (np.asarray(d, dtype=np.int64), np.asarray(w, dtype=np.float64)) for t, (d, w) in postings.items()}

    def __len__(self) -> int:
        return len(self.passage_ids)

    def search(self, query: Mapping[str, float], k: int, query_id: str = "") -> RankedList:
        if k < 1:
            raise ValueError("k must be >= 1")
        scores = np.zeros(len(self.passage_ids), dtype=np.float64)
        # terms are visited in sorted order so every passage accumulates its sum in a fixed order
        for term, qw in sorted(clean_vector(query).items()):
            hit = self._postings.get(term)
            if hit is not None:
                docs, ws = hit
                scores[docs] += qw * ws
        entries = top_k(np.flatnonzero(scores > 0), scores, self._id_rank, self.passage_ids, k)
        return RankedList(query_id, tuple(entries), Producer.SPARSE)


def build_sparse_index(
    vectors: Mapping[str, Mapping[str, float]], expected_ids: Iterable[str] | None = None
) -> SparseIndex:
    if expected_ids is not None:
        missing = [pid for pid in expected_ids if pid not in vectors]
        if missing:
            shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
            raise MissingVectors(f"{len(missing)} passages have no sparse vector: {shown}")
    return SparseIndex(vectors)


def search_sparse(index: SparseIndex, query_vec: Mapping[str, float], k: int, query_id: str = "") -> RankedList:
    return index.search(query_vec, k, query_id)


def read_sparse_vectors(path: str | os.PathLike) -> Iterator[tuple[str, SparseVector]]:
    """Read line-delimited ``{id, weights: {term: weight}}`` records."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                yield str(rec["id"]), clean_vector(rec["weights"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"bad sparse vector record: {exc}", line=lineno) from None


def write_sparse_vectors(path: str | os.PathLike, vectors: Mapping[str, Mapping[str, float]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pid, weights in vectors.items():
            fh.write(json.dumps({"id": pid, "weights": dict(weights)}, ensure_ascii=False, sort_keys=True) + "\n")
