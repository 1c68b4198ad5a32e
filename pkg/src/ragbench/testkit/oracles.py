"""Brute-force reference implementations.

These evaluate the defining formulas directly and deliberately import
nothing from the production modules they are used to check.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence


def _terms(text: str) -> list[str]:
    out, cur = [], []
    for ch in text.lower():
        if ch.isalnum():
            cur.append(ch)
        elif cur:
            out.append("".join(cur))
            cur = []
    if cur:
        out.append("".join(cur))
    return out


def brute_force_bm25(
    corpus: Sequence[tuple[str, str]], query: str, k1: float = 0.9, b: float = 0.4
) -> list[tuple[str, float, bool]]:
    """``(passage_id, score, matched)`` for every passage, in corpus order."""
    docs = [(pid, _terms(text)) for pid, text in corpus]
    n = len(docs)
    avg = sum(len(t) for _, t in docs) / n
    q = _terms(query)
    vocab = [set(terms) for _, terms in docs]
    df = {term: sum(1 for v in vocab if term in v) for term in set(q)}
    out = []
    for pid, terms in docs:
        score = 0.0
        matched = False
        for term in q:
            tf = terms.count(term)
            if tf == 0:
                continue
            matched = True
            idf = math.log(1 + (n - df[term] + 0.5) / (df[term] + 0.5))
            score += idf * tf / (tf + k1 * (1 - b + b * len(terms) / avg))
        out.append((pid, score, matched))
    return out


def brute_force_bm25_topk(
    corpus: Sequence[tuple[str, str]], query: str, k: int, k1: float = 0.9, b: float = 0.4
) -> list[tuple[str, float]]:
    scored = [(pid, s) for pid, s, hit in brute_force_bm25(corpus, query, k1, b) if hit]
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:k]


def brute_force_topk_dot(
    vectors: Mapping[str, Mapping[str, float] | Sequence[float]],
    query: Mapping[str, float] | Sequence[float],
    k: int,
    *,
    drop_zero: bool | None = None,
) -> list[tuple[str, float]]:
    """Exact top-k by dot product for sparse (dict) or dense (sequence) vectors.

    Sparse inputs drop zero scores by default; dense inputs keep every row.
    Sparse sums run over terms in sorted order.
    """
    sparse = isinstance(query, Mapping)
    if drop_zero is None:
        drop_zero = sparse
    scored = []
    for pid, vec in vectors.items():
        s = 0.0
        if sparse:
            for term in sorted(query):
                if query[term] and term in vec and vec[term]:
                    s += query[term] * vec[term]
        else:
            for a, c in zip(vec, query):
                s += float(a) * float(c)
        if drop_zero and s == 0:
            continue
        scored.append((pid, s))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:k]


def brute_force_tau(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Kendall tau-b by enumerating all pairs."""
    n = len(xs)
    concordant = discordant = ties_x_only = ties_y_only = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = (xs[i] > xs[j]) - (xs[i] < xs[j])
            dy = (ys[i] > ys[j]) - (ys[i] < ys[j])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                ties_x_only += 1
            elif dy == 0:
                ties_y_only += 1
            elif dx == dy:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / math.sqrt(
        (concordant + discordant + ties_x_only) * (concordant + discordant + ties_y_only)
    )
