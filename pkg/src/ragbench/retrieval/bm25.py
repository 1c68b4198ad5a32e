"""BM25 over an inverted index held as CSR arrays.

Scoring follows the Lucene convention::

    idf(t)   = ln(1 + (N - df + 0.5) / (df + 0.5))
    score(p) = sum_t qtf(t) * idf(t) * tf / (tf + k1 * (1 - b + b * len / avglen))

Lengths are counted in analyzed terms of the passage prompt text.
"""

from __future__ import annotations

import json
import math
import os
import re
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import CorpusStore
from ..errors import CorruptStore, EmptyCorpus
from .ranking import Producer, RankedList, lexicographic_rank, top_k

_TERM = re.compile(r"[^\W_]+")
_MAGIC = b"RGBM25\x01\n"


def analyze(text: str) -> list[str]:
    """Lowercased runs of Unicode letters and digits."""
    return _TERM.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self) -> None:
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


class Bm25Index:
    def __init__(
        self,
        params: Bm25Params,
        passage_ids: list[str],
        lengths: np.ndarray,
        terms: list[str],
        ptr: np.ndarray,
        postings: np.ndarray,
        tfs: np.ndarray,
        store_checksum: str = "",
    ):
        self.params = params
        self.passage_ids = passage_ids
        self.lengths = lengths
        self.terms = terms
        self.ptr = ptr
        self.postings = postings
        self.tfs = tfs
        self.store_checksum = store_checksum
        self._term_ids = {t: i for i, t in enumerate(terms)}
        self._id_rank = lexicographic_rank(passage_ids)
        self.avg_length = float(lengths.mean()) if len(lengths) else 0.0

    @property
    def num_passages(self) -> int:
        return len(self.passage_ids)

    def df(self, term: str) -> int:
        i = self._term_ids.get(term)
        return 0 if i is None else int(self.ptr[i + 1] - self.ptr[i])

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.num_passages - df + 0.5) / (df + 0.5))

    def score_all(self, query: str) -> tuple[np.ndarray, np.ndarray]:
        """Scores for every passage, plus a mask of passages sharing a term with the query."""
        k1, b = self.params.k1, self.params.b
        scores = np.zeros(self.num_passages, dtype=np.float64)
        touched = np.zeros(self.num_passages, dtype=bool)
        if self.avg_length == 0:
            return scores, touched
        norm = k1 * (1.0 - b + b * self.lengths / self.avg_length)
        for term, qtf in sorted(Counter(analyze(query)).items()):
            i = self._term_ids.get(term)
            if i is None:
                continue
            lo, hi = self.ptr[i], self.ptr[i + 1]
            docs = self.postings[lo:hi]
            tf = self.tfs[lo:hi].astype(np.float64)
            scores[docs] += qtf * self.idf(term) * tf / (tf + norm[docs])
            touched[docs] = True
        return scores, touched

    def search(self, query: str, k: int, query_id: str = "") -> RankedList:
        if k < 1:
            raise ValueError("k must be >= 1")
        scores, touched = self.score_all(query)
        entries = top_k(np.flatnonzero(touched), scores, self._id_rank, self.passage_ids, k)
        return RankedList(query_id, tuple(entries), Producer.BM25)

    def to_bytes(self) -> bytes:
        header = {
            "params": {"k1": self.params.k1, "b": self.params.b},
            "passage_ids": self.passage_ids,
            "terms": self.terms,
            "store_checksum": self.store_checksum,
        }
        head = json.dumps(header, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return b"".join(
            [
                _MAGIC,
                struct.pack("<QQ", len(head), len(self.postings)),
                head,
                self.lengths.astype("<i4").tobytes(),
                self.ptr.astype("<i8").tobytes(),
                self.postings.astype("<i4").tobytes(),
                self.tfs.astype("<i4").tobytes(),
            ]
        )

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Bm25Index":
        return cls.from_bytes(Path(path).read_bytes(), str(path))

    @classmethod
    def from_bytes(cls, raw: bytes, source: str = "<bytes>") -> "Bm25Index":
        path = source
        if not raw.startswith(_MAGIC):
            raise CorruptStore(f"{path} is not a BM25 index")
        pos = len(_MAGIC)
        head_len, n_post = struct.unpack_from("<QQ", raw, pos)
        pos += 16
        header = json.loads(raw[pos : pos + head_len].decode("utf-8"))
        pos += head_len
        n, v = len(header["passage_ids"]), len(header["terms"])

        def take(dtype: str, count: int) -> np.ndarray:
            nonlocal pos
            arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
            pos += arr.nbytes
            return arr.astype(dtype[1:])

        try:
            lengths = take("<i4", n)
            ptr = take("<i8", v + 1)
            postings = take("<i4", n_post)
            tfs = take("<i4", n_post)
        except ValueError as exc:
            raise CorruptStore(f"truncated BM25 index {path}: {exc}") from exc
        return cls(
            Bm25Params(**header["params"]),
            header["passage_ids"],
            lengths,
            header["terms"],
            ptr,
            postings,
            tfs,
            header.get("store_checksum", ""),
        )


def build_bm25_index(store: CorpusStore, params: Bm25Params = Bm25Params()) -> Bm25Index:
    if len(store) == 0:
        raise EmptyCorpus(f"passage store {store.path} is empty")
    passage_ids: list[str] = []
    lengths: list[int] = []
    inverted: dict[str, list[tuple[int, int]]] = {}
    for idx, passage in enumerate(store):
        terms = analyze(passage.prompt_text)
        passage_ids.append(passage.passage_id)
        lengths.append(len(terms))
        for term, tf in Counter(terms).items():
            inverted.setdefault(term, []).append((idx, tf))
    return _from_inverted(params, passage_ids, lengths, inverted, store.checksum)


def build_bm25_from_texts(texts: dict[str, str] | list[tuple[str, str]], params: Bm25Params = Bm25Params()) -> Bm25Index:
    """Index raw ``(passage_id, text)`` pairs without a passage store."""
    items = list(texts.items()) if isinstance(texts, dict) else list(texts)
    if not items:
        raise EmptyCorpus("no passages to index")
    passage_ids, lengths = [], []
    inverted: dict[str, list[tuple[int, int]]] = {}
    for idx, (pid, text) in enumerate(items):
        terms = analyze(text)
        passage_ids.append(pid)
        lengths.append(len(terms))
        for term, tf in Counter(terms).items():
            inverted.setdefault(term, []).append((idx, tf))
    return _from_inverted(params, passage_ids, lengths, inverted, "")


def _from_inverted(params, passage_ids, lengths, inverted, checksum) -> Bm25Index:
    terms = sorted(inverted)
    ptr = np.zeros(len(terms) + 1, dtype=np.int64)
    for i, term in enumerate(terms):
        ptr[i + 1] = ptr[i] + len(inverted[term])
    postings = np.empty(int(ptr[-1]), dtype=np.int32)
    tfs = np.empty(int(ptr[-1]), dtype=np.int32)
    for i, term in enumerate(terms):
        plist = inverted[term]
        postings[ptr[i] : ptr[i + 1]] = [d for d, _ in plist]
        tfs[ptr[i] : ptr[i + 1]] = [tf for _, tf in plist]
    return Bm25Index(params, passage_ids, np.asarray(lengths, dtype=np.int32), terms, ptr, postings, tfs, checksum)


def search_bm25(index: Bm25Index, query: str, k: int, query_id: str = "") -> RankedList:
    return index.search(query, k, query_id)
