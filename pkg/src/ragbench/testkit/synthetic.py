"""Seeded synthetic documents and QA datasets for tests, acceptance checks and demos."""

from __future__ import annotations

import json
import os
import random
import string
from dataclasses import dataclass
from pathlib import Path

from ..corpus import Document, write_collection

ANSWER_PATTERN = r"\bans[a-z]{6}\b"

_CJK = [chr(c) for c in range(0x4E00, 0x4E00 + 400)]
_THAI = [chr(c) for c in range(0x0E01, 0x0E2F)]


def pseudo_word(rng: random.Random, lo: int = 3, hi: int = 9) -> str:
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(lo, hi)))


def random_document(rng: random.Random, doc_id: str, *, mode: str = "words", max_units: int = 450) -> Document:
    """A document whose length straddles chunk boundaries, with messy whitespace."""
    n = rng.randint(1, max_units)
    if mode == "words":
        vocab = [pseudo_word(rng, 1, 10) for _ in range(40)] + ["é", "naïve", "日本", "x-y", "3.14"]
        seps = [" ", " ", " ", "  ", "\n", "\t", "　", " "]
        words = [rng.choice(vocab) for _ in range(n)]
        text = rng.choice(["", " ", "\n"]) + "".join(w + rng.choice(seps) for w in words)
        return Document(doc_id, f"Title {doc_id}", text, "en")
    alphabet = _CJK + _THAI + ["。", "，", "a", " "]
    body = "".join(rng.choice(alphabet) for _ in range(n))
    if not body.strip():
        body = "字" + body
    return Document(doc_id, f"标题{doc_id}", body, rng.choice(["zh", "ja", "th"]))


@dataclass(frozen=True)
class SyntheticExample:
    example_id: str
    question: str
    references: list[str]
    relevant_doc_ids: list[str]
    gold_passage_id: str
    language: str = "en"


def qa_benchmark(n_questions: int = 50, seed: int = 0, filler_vocab: int = 300) -> tuple[list[Document], list[SyntheticExample]]:
    """One 150-word document per question.

    Each document is a first chunk of generic filler followed by a second
    chunk holding three topic keywords and a unique answer token
    ``ans??????``; the question repeats the keywords. Under a 100-word policy
    the answer lives only in chunk ``::1``.
    """
    rng = random.Random(seed)
    filler = sorted({pseudo_word(rng, 4, 8) for _ in range(filler_vocab)})
    used: set[str] = set()

    def fresh(prefix: str = "") -> str:
        while True:
            w = prefix + "".join(rng.choice(string.ascii_lowercase) for _ in range(6))
            if w not in used and w not in filler:
                used.add(w)
                return w

    docs, examples = [], []
    for i in range(n_questions):
        doc_id = f"doc{i:04d}"
        keys = [fresh("k") for _ in range(3)]
        answer = fresh("ans")
        first = [rng.choice(filler) for _ in range(100)]
        second = [rng.choice(filler) for _ in range(46)]
        pos = rng.randrange(0, 40)
        second[pos:pos] = [keys[0], keys[1], answer, keys[2]]
        docs.append(Document(doc_id, f"Topic {i}", " ".join(first + second)))
        examples.append(
            SyntheticExample(
                example_id=f"q{i:04d}",
                question=f"What is linked to {keys[0]} {keys[1]} {keys[2]}?",
                references=[answer],
                relevant_doc_ids=[doc_id],
                gold_passage_id=f"{doc_id}::1",
            )
        )
    return docs, examples


def write_benchmark(directory: str | os.PathLike, n_questions: int = 50, seed: int = 0) -> tuple[Path, Path]:
    """Write :func:`qa_benchmark` as ``collection.jsonl`` and ``dataset.jsonl``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    docs, examples = qa_benchmark(n_questions, seed)
    collection, dataset = out / "collection.jsonl", out / "dataset.jsonl"
    write_collection(collection, docs)
    with open(dataset, "w", encoding="utf-8") as fh:
        for ex in examples:
            rec = {
                "id": ex.example_id,
                "question": ex.question,
                "references": ex.references,
                "relevant_doc_ids": ex.relevant_doc_ids,
                "lang": ex.language,
            }
            fh.write(json.dumps(rec) + "\n")
    return collection, dataset
