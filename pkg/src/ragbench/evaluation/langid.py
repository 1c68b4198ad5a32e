"""Language identification and the correct-language rate."""

from __future__ import annotations

import json
import math
from collections import Counter
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Protocol

from ..errors import UnsupportedLanguage

MIN_CLR_LENGTH = 20


class LanguageDetector(Protocol):
    supported_languages: frozenset[str]

    def detect(self, text: str) -> str: ...


def _trigrams(text: str) -> Counter:
    padded = " " + " ".join(text.lower().split()) + " "
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


class TrigramDetector:
    """Cosine similarity between character-trigram profiles."""

    def __init__(self, samples: Mapping[str, str]):
        self._profiles = {}
        for lang, text in samples.items():
            counts = _trigrams(text)
            self._profiles[lang] = (counts, math.sqrt(sum(v * v for v in counts.values())))
        self.supported_languages = frozenset(self._profiles)

    def scores(self, text: str) -> dict[str, float]:
        query = _trigrams(text)
        qnorm = math.sqrt(sum(v * v for v in query.values()))
        out = {}
        for lang, (profile, pnorm) in self._profiles.items():
            dot = sum(c * profile.get(g, 0) for g, c in query.items())
            out[lang] = dot / (qnorm * pnorm) if qnorm and pnorm else 0.0
        return out

    def detect(self, text: str) -> str:
        scores = self.scores(text)
        # ties resolve to the alphabetically first language
        return min(scores, key=lambda lang: (-scores[lang], lang))


@lru_cache(maxsize=1)
def default_detector() -> TrigramDetector:
    raw = resources.files("ragbench").joinpath("resources/langid_samples.json").read_text(encoding="utf-8")
    return TrigramDetector(json.loads(raw))


def correct_language_rate(
    responses: Iterable, expected_language: str, detector: LanguageDetector | None = None
) -> tuple[float, int]:
    """Share of responses longer than 20 characters that are in ``expected_language``.

    ``responses`` may hold strings or generation records. Returns
    ``(nan, 0)`` when no response is long enough.
    """
    detector = detector or default_detector()
    if expected_language not in detector.supported_languages:
        raise UnsupportedLanguage(f"detector does not support {expected_language!r}")
    included = hits = 0
    for item in responses:
        if getattr(item, "failed", False):
            continue
        text = item if isinstance(item, str) else item.response
        if len(text) <= MIN_CLR_LENGTH:
            continue
        included += 1
        hits += detector.detect(text) == expected_language
    return (hits / included if included else math.nan), included
