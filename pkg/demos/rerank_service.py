"""Rerank BM25 candidates through a reranking service (a loopback mock here).

    python demos/rerank_service.py
"""

import tempfile
from pathlib import Path

from ragbench.corpus import ChunkPolicy, Document, ingest_collection, open_store
from ragbench.rerank import RerankerEndpoint, rerank
from ragbench.retrieval import build_bm25_index
from ragbench.testkit import MockBehavior, score_by_overlap, start_mock_rerank_service

DOCS = [
    Document("alps", "Alps", "Mont Blanc is the highest mountain of the Alps at 4805 metres."),
    Document("blanc", "Blanc", "Blanc blanc blanc: the word blanc means white in French."),
    Document("everest", "Everest", "Everest is the highest mountain on Earth."),
    Document("rivers", "Rhone", "The Rhone river starts at a glacier in the Alps."),
    Document("cheese", "Cheese", "Mont d'Or is a cheese, not a mountain."),
]


def main() -> None:
    service = start_mock_rerank_service(MockBehavior(responder=score_by_overlap()))
    try:
        with tempfile.TemporaryDirectory() as tmp:
            ingest_collection(DOCS, ChunkPolicy(), Path(tmp) / "store")
            endpoint = RerankerEndpoint(service.url, max_batch_size=2)
            query = "how high is mont blanc mountain"
            with open_store(Path(tmp) / "store") as store:
                first = build_bm25_index(store).search(query, 5, "demo")
                second = rerank(endpoint, first, store, 3, query)
            print(query)
            print("bm25     :", "  ".join(f"{p}={s:.2f}" for p, s in first.entries))
            print("reranked :", "  ".join(f"{p}={s:.2f}" for p, s in second.entries))
            print(f"{len(first)} candidates scored in {service.count()} requests of at most 2")
    finally:
        service.stop()


if __name__ == "__main__":
    main()
