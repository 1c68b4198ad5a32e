"""The normalized QA dataset format and adapters from common public layouts.

One JSON object per line::

    {"id": "q1", "question": "...", "references": ["..."],
     "relevant_doc_ids": ["..."], "relevant_passage_ids": ["..."], "lang": "en"}

Only ``id``, ``question`` and ``references`` are required.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..errors import DuplicateExampleId, IoFailure, SchemaError
from ..retrieval.ranking import RelevanceJudgment


@dataclass(frozen=True)
class QAExample:
    example_id: str
    question: str
    references: tuple[str, ...]
    relevant_doc_ids: tuple[str, ...] = ()
    relevant_passage_ids: tuple[str, ...] = ()
    language: str = "en"

    def __post_init__(self) -> None:
        object.__setattr__(self, "references", tuple(self.references))
        object.__setattr__(self, "relevant_doc_ids", tuple(self.relevant_doc_ids))
        object.__setattr__(self, "relevant_passage_ids", tuple(self.relevant_passage_ids))

    @property
    def has_judgments(self) -> bool:
        return bool(self.relevant_doc_ids or self.relevant_passage_ids)

    def judgment(self) -> RelevanceJudgment:
        return RelevanceJudgment(self.example_id, frozenset(self.relevant_doc_ids), frozenset(self.relevant_passage_ids))

    def to_record(self) -> dict:
        rec = {"id": self.example_id, "question": self.question, "references": list(self.references), "lang": self.language}
        if self.relevant_doc_ids:
            rec["relevant_doc_ids"] = list(self.relevant_doc_ids)
        if self.relevant_passage_ids:
            rec["relevant_passage_ids"] = list(self.relevant_passage_ids)
        return rec


def _str_list(value, name: str, line: int) -> list[str]:
    if isinstance(value, str):
        return [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{name} must be a string or a list of strings", line=line)
    return value


def example_from_record(rec: Mapping, line: int = 0) -> QAExample:
    if not isinstance(rec, Mapping):
        raise SchemaError("record is not a JSON object", line=line)
    for key in ("id", "question", "references"):
        if key not in rec:
            raise SchemaError(f"missing required field {key!r}", line=line)
    question = rec["question"]
    if not isinstance(question, str) or not question.strip():
        raise SchemaError("question must be a non-empty string", line=line)
    refs = _str_list(rec["references"], "references", line)
    if not refs or not any(r.strip() for r in refs):
        raise SchemaError("references must hold at least one non-empty answer", line=line)
    return QAExample(
        example_id=str(rec["id"]),
        question=question,
        references=tuple(refs),
        relevant_doc_ids=tuple(_str_list(rec.get("relevant_doc_ids", []), "relevant_doc_ids", line)),
        relevant_passage_ids=tuple(_str_list(rec.get("relevant_passage_ids", []), "relevant_passage_ids", line)),
        language=str(rec.get("lang") or rec.get("language") or "en"),
    )


def load_dataset(path: str | os.PathLike) -> list[QAExample]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
    examples, seen = [], set()
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None
            ex = example_from_record(rec, lineno)
            if ex.example_id in seen:
                raise DuplicateExampleId(f"line {lineno}: duplicate example id {ex.example_id!r}")
            seen.add(ex.example_id)
            examples.append(ex)
    return examples


def write_dataset(path: str | os.PathLike, examples: Iterable[QAExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_record(), ensure_ascii=False) + "\n")


def file_checksum(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        while chunk := fh.read(1 << 20):
            digest.update(chunk)
    return digest.hexdigest()


# adapters

def from_kilt(rec: Mapping, language: str = "en") -> QAExample:
    """KILT task record: ``{id, input, output: [{answer, provenance: [{wikipedia_id}]}]}``."""
    answers, docs = [], []
    for out in rec.get("output", []):
        if out.get("answer"):
            answers.append(out["answer"])
        for prov in out.get("provenance", []) or []:
            if prov.get("wikipedia_id") is not None:
                docs.append(str(prov["wikipedia_id"]))
    return QAExample(
        str(rec["id"]), rec["input"], tuple(dict.fromkeys(answers)), tuple(dict.fromkeys(docs)), (), language
    )


def from_nq_open(rec: Mapping, index: int, language: str = "en") -> QAExample:
    """NQ-open / TriviaQA-style record: ``{question, answer: [..]}`` with an optional ``id``."""
    answers = rec.get("answer") or rec.get("answers") or []
    if isinstance(answers, str):
        answers = [answers]
    return QAExample(str(rec.get("id", index)), rec["question"], tuple(answers), (), (), language)


def from_mkqa(rec: Mapping, language: str) -> QAExample:
    """MKQA record: ``{example_id, queries: {lang: q}, answers: {lang: [{text, aliases}]}}``."""
    answers = []
    for ans in rec["answers"].get(language, []):
        if ans.get("text"):
            answers.append(ans["text"])
        answers.extend(ans.get("aliases", []) or [])
    return QAExample(str(rec["example_id"]), rec["queries"][language], tuple(dict.fromkeys(answers)), (), (), language)
