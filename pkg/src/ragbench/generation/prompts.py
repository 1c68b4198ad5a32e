from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

from ..errors import MissingTranslation, NoContext

RAG_SYSTEM_PROMPT = (
    "You are a helpful assistant. Your task is to extract relevant information from provided documents "
    "and to answer to questions as briefly as possible."
)
CLOSED_BOOK_SYSTEM_PROMPT = "You are a helpful assistant. Answer the questions as briefly as possible."


class PromptKind(str, enum.Enum):
    RAG = "rag"
    CLOSED_BOOK = "closed_book"


class Variant(str, enum.Enum):
    BASIC = "basic"
    REPLY_IN_UL = "reply_in_ul"
    BASIC_TRANSLATED = "basic_translated"
    REPLY_IN_UL_TRANSLATED = "reply_in_ul_translated"


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    language: str = "en"
    variant: Variant = Variant.BASIC
    kind: PromptKind = PromptKind.RAG

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "kind", PromptKind(self.kind))
        if not self.system or not self.user:
            raise ValueError("prompt bundle needs non-empty system and user strings")

    def messages(self) -> list[dict]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user}]

    def to_record(self) -> dict:
        return {
            "system": self.system,
            "user": self.user,
            "language": self.language,
            "variant": self.variant.value,
            "kind": self.kind.value,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "PromptBundle":
        return cls(**record)


def build_rag_prompt(question: str, passages: Sequence[str], language: str = "en") -> PromptBundle:
    if not passages:
        raise NoContext("RAG prompt needs at least one passage; use build_closed_book_prompt instead")
    docs = "\n".join(passages)
    return PromptBundle(RAG_SYSTEM_PROMPT, f"Background:\n{docs}\n\nQuestion: {question}", language, kind=PromptKind.RAG)


def build_closed_book_prompt(question: str, language: str = "en") -> PromptBundle:
    return PromptBundle(CLOSED_BOOK_SYSTEM_PROMPT, f"Question: {question}", language, kind=PromptKind.CLOSED_BOOK)


@lru_cache(maxsize=1)
def default_translations() -> dict:
    """Reply-in-language sentences and translated system prompts shipped with the package."""
    text = resources.files("ragbench").joinpath("resources/languages.json").read_text(encoding="utf-8")
    return json.loads(text)


def apply_language_variant(
    bundle: PromptBundle,
    language: str,
    variant: Variant | str,
    translations: Mapping | None = None,
    *,
    allow_english: bool = False,
) -> PromptBundle:
    """Adapt the system prompt so the model answers in ``language``.

    ``reply_in_ul`` appends the English reply-in-language sentence; the
    translated variants swap in the translated system prompt, and
    ``reply_in_ul_translated`` also appends the translated sentence.
    """
    variant = Variant(variant)
    if variant is Variant.BASIC:
        return replace(bundle, language=language, variant=variant)
    primary = language.split("-")[0].lower()
    if primary == "en" and not allow_english:
        raise ValueError("language variants target non-English users; pass allow_english=True to override")
    table = default_translations() if translations is None else translations
    entry = table.get(language) or table.get(primary)
    if entry is None:
        raise MissingTranslation(f"no prompt translations for language {language!r}")
    try:
        if variant is Variant.REPLY_IN_UL:
            system = f"{bundle.system} {entry['reply_en']}"
        elif variant is Variant.BASIC_TRANSLATED:
            system = entry["system"][bundle.kind.value]
        else:
            system = f"{entry['system'][bundle.kind.value]} {entry['reply']}"
    except KeyError as exc:
        raise MissingTranslation(f"translation table for {language!r} lacks {exc.args[0]!r}") from None
    return replace(bundle, system=system, language=language, variant=variant)
