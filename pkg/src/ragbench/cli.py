"""Command line interface.

Every stage command persists its output in the run store (``--runs``, default
``$RAGBENCH_RUNS`` or ``./runs``) and prints the resulting RunId, so stages
can be chained by hand::

    ragbench ingest --collection kilt.jsonl --policy words --size 100 --out store
    ragbench index --corpus store
    ragbench retrieve --corpus store --dataset nq.jsonl --retriever bm25 --k 50
    ragbench rerank --run retrieve-... --corpus store --dataset nq.jsonl --model minilm6
    ragbench generate --run rerank-... --corpus store --dataset nq.jsonl --mode rag --model SOLAR-10.7B
    ragbench evaluate --run generate-... --dataset nq.jsonl --metrics match,em,f1,rouge,llmeval --judge-model SOLAR-10.7B
    ragbench report evaluate-... evaluate-...

``ragbench run --config exp.yaml`` does all of it from one config file.
Exit codes: 0 success, 2 configuration, 3 service, 4 data.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from .corpus import ChunkMode, ChunkPolicy, ingest_collection, open_store, read_collection
from .errors import ConfigError, RagbenchError
from .evaluation.correlation import correlate_datasets
from .generation.client import DecodeConfig
from .generation.prompts import Variant
from .orchestrator import pipeline as pl
from .orchestrator.config import GeneratorSpec, JudgeSpec, LanguageSpec, RerankerSpec, RetrieverSpec, load_config, validate_config
from .orchestrator.datasets import file_checksum, load_dataset
from .orchestrator.runstore import RunStore
from .orchestrator.tables import build_table
from .retrieval.bm25 import Bm25Params


def _runs(args) -> RunStore:
    return RunStore(args.runs or os.environ.get("RAGBENCH_RUNS") or "runs")


def _emit(stage: pl.StageRun) -> None:
    state = "cached" if stage.cached else "computed"
    print(f"{stage.run_id}\t{state}")


def cmd_ingest(args) -> int:
    policy = ChunkPolicy(ChunkMode(args.policy), args.size)
    summary = ingest_collection(read_collection(args.collection), policy, args.out, workers=args.workers)
    print(json.dumps({"docs": summary.docs, "passages": summary.passages, "checksum": summary.checksum}))
    return 0


def cmd_index(args) -> int:
    runs = _runs(args)
    with runs.lock(), open_store(args.corpus) as store:
        _emit(pl.index_stage(runs, store, Bm25Params(args.k1, args.b)))
    return 0


def cmd_retrieve(args) -> int:
    runs = _runs(args)
    examples = load_dataset(args.dataset)
    spec = RetrieverSpec(args.retriever, args.k1, args.b, args.passage_vectors, args.query_vectors)
    with runs.lock(), open_store(args.corpus) as store:
        index_run = args.index_run
        if spec.kind == "bm25" and index_run is None:
            index_run = pl.index_stage(runs, store, Bm25Params(args.k1, args.b)).run_id
        stage = pl.retrieve_stage(runs, store, examples, file_checksum(args.dataset), spec, args.k, index_run=index_run)
    _emit(stage)
    if args.out:
        Path(args.out).write_bytes(runs.load_artifact(stage.run_id, pl.RUNS_ARTIFACT))
    return 0


def cmd_rerank(args) -> int:
    runs = _runs(args)
    examples = load_dataset(args.dataset)
    spec = RerankerSpec(args.model, args.url, args.batch_size)
    endpoint = pl.reranker_endpoint(spec, os.environ)
    with runs.lock(), open_store(args.corpus) as store:
        _emit(pl.rerank_stage(runs, store, examples, args.run, spec, endpoint))
    return 0


def cmd_generate(args) -> int:
    runs = _runs(args)
    examples = load_dataset(args.dataset)
    if args.mode != "closed_book" and not (args.run and args.corpus):
        raise ConfigError(f"--mode {args.mode} needs --run and --corpus")
    spec = GeneratorSpec(args.model, args.max_new_tokens, args.temperature, args.url)
    endpoint = pl.chat_endpoint(spec, os.environ)
    decode = DecodeConfig(args.model, args.max_new_tokens, args.temperature)
    language = LanguageSpec(args.language, args.variant, args.translations)
    with runs.lock():
        store = open_store(args.corpus) if args.mode != "closed_book" else None
        try:
            stage = pl.generate_stage(
                runs,
                examples,
                file_checksum(args.dataset),
                mode=args.mode,
                decode=decode,
                endpoint=endpoint,
                language=language,
                upstream_run=args.run if args.mode != "closed_book" else None,
                store=store,
                top_context=args.top_context,
            )
        finally:
            if store is not None:
                store.close()
    _emit(stage)
    return 0


def cmd_evaluate(args) -> int:
    runs = _runs(args)
    examples = load_dataset(args.dataset)
    metrics = args.metrics.split(",")
    judge = None
    if "llmeval" in metrics:
        if not args.judge_model:
            raise ConfigError("llmeval needs --judge-model")
        judge = pl.judge_endpoint(JudgeSpec(args.judge_model, args.judge_url), os.environ)
    with runs.lock():
        stage = pl.evaluate_stage(
            runs, examples, file_checksum(args.dataset), args.run, metrics, judge=judge, language=args.language
        )
    _emit(stage)
    summary = pl.load_report(runs, stage.run_id).summary()
    print(json.dumps({"means": summary["means"], "excluded": summary["excluded"]}, sort_keys=True))
    if args.out:
        Path(args.out).write_bytes(runs.load_artifact(stage.run_id, pl.REPORT_ARTIFACT))
    return 0


def cmd_correlate(args) -> int:
    runs = _runs(args)
    datasets = []
    for rid in args.run_ids:
        rep = pl.load_report(runs, rid)
        if args.against not in rep.metrics:
            raise ConfigError(f"run {rid} has no {args.against} scores")
        scores = {m: rep.per_example(m) for m in rep.metrics if m != args.against}
        datasets.append((scores, rep.per_example(args.against)))
    table = correlate_datasets(datasets, pooled=args.pooled)
    width = max(len(m) for m in table) if table else 0
    print(f"{'metric'.ljust(width)}  tau_vs_{args.against}")
    for metric, tau in table.items():
        print(f"{metric.ljust(width)}  {'n/a' if math.isnan(tau) else f'{tau:.4f}'}")
    return 0


def cmd_report(args) -> int:
    runs = _runs(args)
    metrics = args.metrics.split(",") if args.metrics else None
    table = build_table(runs, args.run_ids, metrics, gains=not args.no_gains)
    sys.stdout.write(table.to_text())
    if args.csv:
        Path(args.csv).write_text(table.to_csv(), encoding="utf-8")
    return 0


def cmd_validate(args) -> int:
    findings = validate_config(load_config(args.config))
    for finding in findings:
        print(finding)
    if findings:
        return ConfigError.exit_code
    print("ok")
    return 0


def cmd_run(args) -> int:
    result = pl.run_experiment(load_config(args.config), _runs(args))
    for stage in result.stages:
        print(f"{stage.kind}\t{stage.run_id}\t{'cached' if stage.cached else 'computed'}")
    print(json.dumps(result.report.summary()["means"], sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ragbench", description="Reproducible RAG benchmarking.")
    parser.add_argument("--runs", help="run store directory (default $RAGBENCH_RUNS or ./runs)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="chunk a collection into a passage store")
    p.add_argument("--collection", required=True)
    p.add_argument("--policy", choices=[m.value for m in ChunkMode], default="words")
    p.add_argument("--size", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build the BM25 index of a passage store")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k1", type=float, default=0.9)
    p.add_argument("--b", type=float, default=0.4)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("retrieve", help="rank passages for every dataset question")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--retriever", choices=["bm25", "sparse", "dense", "oracle"], default="bm25")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--k1", type=float, default=0.9)
    p.add_argument("--b", type=float, default=0.4)
    p.add_argument("--index-run")
    p.add_argument("--passage-vectors")
    p.add_argument("--query-vectors")
    p.add_argument("--out", help="also write the ranked runs file here")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("rerank", help="rescore a retrieval run with a reranking service")
    p.add_argument("--run", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, help="reranker label recorded in the RunId")
    p.add_argument("--url")
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("generate", help="prompt a chat-completion service")
    p.add_argument("--run", help="retrieval or rerank run (not for closed_book)")
    p.add_argument("--corpus")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=["rag", "closed_book", "oracle"], default="rag")
    p.add_argument("--model", required=True)
    p.add_argument("--max-new-tokens", type=int, default=128)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--top-context", type=int, default=5)
    p.add_argument("--language")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="basic")
    p.add_argument("--translations")
    p.add_argument("--url")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score a generation run")
    p.add_argument("--run", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--metrics", default="match,em,f1,rouge,char3")
    p.add_argument("--judge-model")
    p.add_argument("--judge-url")
    p.add_argument("--language", help="expected response language for clr")
    p.add_argument("--out", help="also write the metric records here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlate", help="Kendall tau of each metric against a judge metric")
    p.add_argument("run_ids", nargs="+", metavar="RUN")
    p.add_argument("--against", default="llmeval")
    p.add_argument("--pooled", action="store_true", help="pool samples instead of averaging per-run taus")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="tabulate evaluation runs")
    p.add_argument("run_ids", nargs="+", metavar="RUN")
    p.add_argument("--metrics")
    p.add_argument("--csv")
    p.add_argument("--no-gains", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check an experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a whole experiment from a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RagbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
