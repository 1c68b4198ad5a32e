from __future__ import annotations

from typing import Protocol, Sequence

from ..corpus import CorpusStore, doc_id_of
from ..errors import EmptyJudgment, NoOracleAvailable
from ..evaluation.metrics import normalize
from .ranking import Producer, RankedList, RelevanceJudgment


class HasReferences(Protocol):
    example_id: str
    references: Sequence[str]


def oracle_context(example: HasReferences, judgment: RelevanceJudgment | None, store: CorpusStore, k: int) -> RankedList:
    """Context made of passages known to hold the answer.

    Preference order: explicitly judged passages; passages of judged
    documents whose text contains a reference answer; otherwise the leading
    passages of the judged documents.
    """
    if not judgment:
        raise NoOracleAvailable(f"no relevance judgments for {example.example_id!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    qid = example.example_id

    if judgment.relevant_passage_ids:
        ids = [pid for pid in judgment.relevant_passage_ids if pid in store]
        if ids:
            return RankedList.from_scores(qid, ((pid, 1.0) for pid in ids), Producer.ORACLE, k)

    candidates = [p for doc_id in sorted(judgment.relevant_doc_ids) for p in store.passages_of(doc_id)]
    answers = [a for a in (normalize(ref) for ref in example.references) if a]
    containing = [p for p in candidates if answers and any(a in normalize(p.prompt_text) for a in answers)]
    if containing:
        return RankedList.from_scores(qid, ((p.passage_id, 1.0) for p in containing), Producer.ORACLE, k)
    if not candidates:
        raise NoOracleAvailable(f"judged documents for {qid!r} are not in the passage store")
    # earlier chunks first
    return RankedList.from_scores(
        qid, ((p.passage_id, 1.0 / (1 + p.chunk_index)) for p in candidates), Producer.ORACLE, k
    )


def recall_at_k(ranked: RankedList, judgment: RelevanceJudgment, k: int) -> float:
    """Fraction of judged-relevant documents with at least one passage in the top ``k``.

    Judged passages whose document is not itself judged count as separate
    targets, hit only by retrieving that passage.
    """
    if not judgment:
        raise EmptyJudgment(f"no relevance judgments for {ranked.query_id!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    docs = set(judgment.relevant_doc_ids)
    loose = {pid for pid in judgment.relevant_passage_ids if doc_id_of(pid) not in docs}
    hit_docs, hit_passages = set(), set()
    for pid, _ in ranked.entries[:k]:
        doc = doc_id_of(pid)
        if doc in docs:
            hit_docs.add(doc)
        elif pid in loose:
            hit_passages.add(pid)
    return (len(hit_docs) + len(hit_passages)) / (len(docs) + len(loose))
