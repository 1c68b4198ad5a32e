"""A whole experiment from a config: stages are content addressed, so reruns are free.

    python demos/experiment_cache.py
"""

import tempfile
from pathlib import Path

from ragbench.corpus import ChunkPolicy, ingest_collection, read_collection
from ragbench.orchestrator import RunStore, build_table, config_from_dict, run_experiment
from ragbench.testkit import MockBehavior, constant, extractive, score_by_overlap, start_mock_chat_service, start_mock_rerank_service
from ragbench.testkit.synthetic import ANSWER_PATTERN, write_benchmark


def main() -> None:
    llm = start_mock_chat_service(MockBehavior(responder=extractive(ANSWER_PATTERN)))
    judge = start_mock_chat_service(MockBehavior(responder=constant("yes")))
    reranker = start_mock_rerank_service(MockBehavior(responder=score_by_overlap()))
    try:
        with tempfile.TemporaryDirectory() as tmp:
            collection, dataset = write_benchmark(Path(tmp) / "data", n_questions=40, seed=7)
            ingest_collection(read_collection(collection), ChunkPolicy(), Path(tmp) / "store")
            runs = RunStore(Path(tmp) / "runs")
            base = {
                "dataset": str(dataset),
                "corpus": str(Path(tmp) / "store"),
                "top_retrieve": 20,
                "generator": {"model": "extractive", "url": llm.url},
                "judge": {"model": "yes", "url": judge.url},
                "metrics": ["match", "f1", "llmeval"],
            }
            settings = {
                "closed book": {"mode": "closed_book", "corpus": None},
                "bm25 top1": {"top_context": 1},
                "bm25+rerank top1": {"top_context": 1, "reranker": {"model": "overlap", "url": reranker.url}},
                "oracle": {"mode": "oracle", "top_context": 1},
            }
            evaluated = []
            for name, over in settings.items():
                result = run_experiment(config_from_dict({**base, **over}), runs, env={})
                evaluated.append(result.run_ids["evaluate"])
                print(f"{name:17} computed={','.join(result.computed) or '-'} cached={','.join(result.cached) or '-'}")

            llm.reset()
            again = run_experiment(config_from_dict({**base, **settings["bm25 top1"]}), runs, env={})
            print(f"\nrerun: computed={again.computed} llm calls={llm.count()}\n")
            print(build_table(runs, evaluated).to_text())
    finally:
        for service in (llm, judge, reranker):
            service.stop()


if __name__ == "__main__":
    main()
