"""Surface metrics comparing a generated response with reference answers.

Match, EM and token P/R/F1 compare SQuAD-normalized text. ROUGE lowercases
and strips punctuation but keeps articles. Character 3-gram recall only
lowercases. Every metric takes the best score over the references.
"""

from __future__ import annotations

import re
import string
import unicodedata
from collections import Counter
from typing import Sequence

from ..errors import NoReferences

_ARTICLES = re.compile(r"\b(a|an|the)\b", re.UNICODE)
_ASCII_PUNCT = frozenset(string.punctuation)


def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


def _strip_punct(text: str) -> str:
    return "".join(ch for ch in text if not _is_punct(ch))


def normalize(text: str) -> str:
    """Lowercase, drop punctuation and the articles a/an/the, collapse whitespace."""
    text = _strip_punct(text.lower())
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def rouge_tokens(text: str) -> list[str]:
    return _strip_punct(text.lower()).split()


def _check(references: Sequence[str]) -> Sequence[str]:
    if isinstance(references, str):
        references = [references]
    if not references:
        raise NoReferences("at least one reference answer is required")
    return references


def match(references: Sequence[str], response: str) -> int:
    """1 if some normalized reference occurs inside the normalized response."""
    resp = normalize(response)
    return int(any(normalize(ref) in resp for ref in _check(references)))


def exact_match(references: Sequence[str], response: str) -> int:
    resp = normalize(response)
    return int(any(normalize(ref) == resp for ref in _check(references)))


def _prf(ref_tokens: list[str], resp_tokens: list[str]) -> tuple[float, float, float]:
    if not ref_tokens or not resp_tokens:
        same = float(ref_tokens == resp_tokens)
        return same, same, same
    overlap = sum((Counter(ref_tokens) & Counter(resp_tokens)).values())
    if overlap == 0:
        return 0.0, 0.0, 0.0
    p = overlap / len(resp_tokens)
    r = overlap / len(ref_tokens)
    return p, r, 2 * p * r / (p + r)


def token_prf(references: Sequence[str], response: str) -> tuple[float, float, float]:
    """(precision, recall, F1) of the reference with the highest F1."""
    resp = normalize(response).split()
    best = None
    for ref in _check(references):
        triple = _prf(normalize(ref).split(), resp)
        if best is None or triple[2] > best[2]:
            best = triple
    return best


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f(overlap: int, n_resp: int, n_ref: int) -> float:
    if overlap == 0:
        return 0.0
    p, r = overlap / n_resp, overlap / n_ref
    return 2 * p * r / (p + r)


def rouge_n(references: Sequence[str], response: str, n: int = 1) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    resp_tokens = rouge_tokens(response)
    resp = _ngrams(resp_tokens, n)
    best = 0.0
    for ref in _check(references):
        ref_tokens = rouge_tokens(ref)
        ref_grams = _ngrams(ref_tokens, n)
        if not ref_grams and not resp:
            # both too short to hold an n-gram: identical token sequences still agree fully
            score = float(bool(ref_tokens) and ref_tokens == resp_tokens)
        else:
            overlap = sum((ref_grams & resp).values())
            score = _f(overlap, sum(resp.values()), sum(ref_grams.values()))
        best = max(best, score)
    return best


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(references: Sequence[str], response: str) -> float:
    resp = rouge_tokens(response)
    best = 0.0
    for ref in _check(references):
        ref_tokens = rouge_tokens(ref)
        if ref_tokens and resp:
            best = max(best, _f(lcs_length(ref_tokens, resp), len(resp), len(ref_tokens)))
    return best


def char_ngrams(text: str, n: int = 3) -> set[str]:
    """Per-token character n-grams of the lowercased text; short tokens count whole."""
    grams = set()
    for token in text.lower().split():
        if len(token) < n:
            grams.add(token)
        else:
            grams.update(token[i : i + n] for i in range(len(token) - n + 1))
    return grams


def char3_recall(references: Sequence[str], response: str) -> float:
    """Share of a reference's character 3-grams that also occur in the response.

    A reference without any gram (empty or whitespace-only) scores 1 only
    against a non-empty response equal to it, and is skipped otherwise; if
    nothing is scored the result is 0.
    """
    resp = char_ngrams(response)
    best = 0.0
    for ref in _check(references):
        grams = char_ngrams(ref)
        if grams:
            best = max(best, len(grams & resp) / len(grams))
        elif response and response == ref:
            best = 1.0
    return best
