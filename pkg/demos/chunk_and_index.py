"""Chunk a small synthetic collection, build BM25 over it and search it.

    python demos/chunk_and_index.py
"""

import tempfile
from pathlib import Path

from ragbench.corpus import ChunkPolicy, get_passage, ingest_collection, open_store, read_collection
from ragbench.retrieval import build_bm25_index, recall_at_k
from ragbench.orchestrator import load_dataset
from ragbench.testkit.synthetic import write_benchmark


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        collection, dataset = write_benchmark(Path(tmp) / "data", n_questions=30, seed=1)
        summary = ingest_collection(read_collection(collection), ChunkPolicy(), Path(tmp) / "store", workers=2)
        print(f"ingested {summary.docs} docs into {summary.passages} passages (store {summary.checksum[:12]})")

        with open_store(Path(tmp) / "store") as store:
            first = get_passage(store, store.passage_ids()[0])
            print(f"{first.passage_id}: {len(first.body.split())} words, prompt text starts {first.prompt_text[:30]!r}")
            index = build_bm25_index(store)
            print(f"index: {index.num_passages} passages, {len(index.terms)} terms")

            examples = load_dataset(dataset)
            hits = []
            for ex in examples:
                ranked = index.search(ex.question, 5, ex.example_id)
                hits.append(recall_at_k(ranked, ex.judgment(), 1))
            ex = examples[0]
            print(f"\n{ex.question}")
            for pid, score in index.search(ex.question, 3).entries:
                print(f"  {score:7.3f}  {pid}")
            print(f"\nrecall@1 over {len(hits)} questions: {sum(hits) / len(hits):.3f}")


if __name__ == "__main__":
    main()
