"""Pipeline stages persisted in a run store, and whole experiments.

Every stage computes its RunId from its own config, its parent RunIds and
the corpus checksum. If that run already exists it is loaded, otherwise it
is computed and saved. Changing ``top_context`` therefore only touches
generation and evaluation: retrieval and reranking keep the full candidate
list.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import httpx

from ..corpus import CorpusStore, open_store
from ..errors import ConfigError, MissingRun, MissingVectors, NoContext, ServiceError, StageError
from ..evaluation.judge import JudgeEndpoint
from ..evaluation.langid import LanguageDetector
from ..evaluation.report import MetricReport, evaluate_records, expand_metrics
from ..generation.client import ChatEndpoint, DecodeConfig, GenerationRecord, generate_batch
from ..generation.prompts import (
    RAG_SYSTEM_PROMPT,
    PromptBundle,
    Variant,
    apply_language_variant,
    build_closed_book_prompt,
    build_rag_prompt,
)
from ..rerank import RerankerEndpoint, rerank
from ..retrieval.bm25 import Bm25Index, Bm25Params, build_bm25_index
from ..retrieval.dense import DenseIndex, read_dense_vectors
from ..retrieval.oracle import oracle_context
from ..retrieval.ranking import Producer, RankedList, parse_runs, runs_to_jsonl
from ..retrieval.sparse import build_sparse_index, read_sparse_vectors
from .config import ExperimentConfig, GeneratorSpec, JudgeSpec, LanguageSpec, RerankerSpec, RetrieverSpec, validate_config
from .datasets import QAExample, file_checksum, load_dataset
from .runstore import RunStore

INDEX_ARTIFACT = "bm25.idx"
RUNS_ARTIFACT = "runs.jsonl"
GENERATIONS_ARTIFACT = "generations.jsonl"
REPORT_ARTIFACT = "report.jsonl"
JUDGE_ARTIFACT = "judge.jsonl"


@dataclass(frozen=True)
class StageRun:
    kind: str
    run_id: str
    cached: bool


@dataclass
class ExperimentResult:
    report: MetricReport
    stages: list[StageRun] = field(default_factory=list)

    @property
    def run_ids(self) -> dict[str, str]:
        return {s.kind: s.run_id for s in self.stages}

    @property
    def computed(self) -> list[str]:
        return [s.kind for s in self.stages if not s.cached]

    @property
    def cached(self) -> list[str]:
        return [s.kind for s in self.stages if s.cached]


def _run_stage(
    runs: RunStore,
    kind: str,
    config: Mapping,
    parents: Sequence[str],
    corpus_checksum: str | None,
    compute: Callable[[str], dict[str, bytes]],
) -> StageRun:
    run_id = runs.run_id(kind, config, parents, corpus_checksum)
    if runs.has(run_id):
        return StageRun(kind, run_id, True)
    start = time.perf_counter()
    try:
        artifacts = compute(run_id)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(kind, run_id, exc) from exc
    runs.save(
        run_id,
        kind,
        config,
        parents,
        artifacts,
        corpus_checksum=corpus_checksum,
        timings={"wall_time": time.perf_counter() - start},
    )
    return StageRun(kind, run_id, False)


def _checksum_or_none(path: str | None) -> str | None:
    return file_checksum(path) if path else None


# index


def index_stage(runs: RunStore, store: CorpusStore, params: Bm25Params = Bm25Params()) -> StageRun:
    config = {"index": "bm25", "k1": params.k1, "b": params.b}
    return _run_stage(
        runs, "index", config, (), store.checksum, lambda _: {INDEX_ARTIFACT: build_bm25_index(store, params).to_bytes()}
    )


def load_index(runs: RunStore, run_id: str) -> Bm25Index:
    return Bm25Index.from_bytes(runs.load_artifact(run_id, INDEX_ARTIFACT), run_id)


# retrieval


def _sparse_runs(store: CorpusStore, examples: Sequence[QAExample], spec: RetrieverSpec, k: int) -> list[RankedList]:
    index = build_sparse_index(dict(read_sparse_vectors(spec.passage_vectors)), expected_ids=store.passage_ids())
    queries = dict(read_sparse_vectors(spec.query_vectors))
    missing = [ex.example_id for ex in examples if ex.example_id not in queries]
    if missing:
        raise MissingVectors(f"{len(missing)} queries have no sparse vector (e.g. {missing[0]})")
    return [index.search(queries[ex.example_id], k, ex.example_id) for ex in examples]


def _dense_runs(store: CorpusStore, examples: Sequence[QAExample], spec: RetrieverSpec, k: int) -> list[RankedList]:
    ids, matrix = read_dense_vectors(spec.passage_vectors)
    known = set(ids)
    missing = [pid for pid in store.passage_ids() if pid not in known]
    if missing:
        raise MissingVectors(f"{len(missing)} passages have no dense vector (e.g. {missing[0]})")
    index = DenseIndex(ids, matrix)
    qids, qmatrix = read_dense_vectors(spec.query_vectors)
    rows = {qid: i for i, qid in enumerate(qids)}
    missing = [ex.example_id for ex in examples if ex.example_id not in rows]
    if missing:
        raise MissingVectors(f"{len(missing)} queries have no dense vector (e.g. {missing[0]})")
    return [index.search(qmatrix[rows[ex.example_id]], k, ex.example_id) for ex in examples]


def retrieve_stage(
    runs: RunStore,
    store: CorpusStore,
    examples: Sequence[QAExample],
    dataset_checksum: str,
    spec: RetrieverSpec,
    k: int,
    *,
    index_run: str | None = None,
) -> StageRun:
    """Rank passages for every example. BM25 needs the RunId of an index stage."""
    config: dict = {"retriever": spec.kind, "k": k, "dataset": dataset_checksum}
    parents: list[str] = []
    if spec.kind == "bm25":
        if index_run is None:
            raise ConfigError("bm25 retrieval needs an index run")
        parents.append(index_run)
    elif spec.kind in ("sparse", "dense"):
        config["passage_vectors"] = _checksum_or_none(spec.passage_vectors)
        config["query_vectors"] = _checksum_or_none(spec.query_vectors)
    elif spec.kind != "oracle":
        raise ConfigError(f"unknown retriever {spec.kind!r}")

    def compute(_: str) -> dict[str, bytes]:
        if spec.kind == "bm25":
            index = load_index(runs, index_run)
            ranked = [index.search(ex.question, k, ex.example_id) for ex in examples]
        elif spec.kind == "sparse":
            ranked = _sparse_runs(store, examples, spec, k)
        elif spec.kind == "dense":
            ranked = _dense_runs(store, examples, spec, k)
        else:
            ranked = [oracle_context(ex, ex.judgment(), store, k) for ex in examples]
        return {RUNS_ARTIFACT: runs_to_jsonl(ranked).encode("utf-8")}

    return _run_stage(runs, "retrieve", config, parents, store.checksum, compute)


def load_ranked(runs: RunStore, run_id: str) -> dict[str, RankedList]:
    text = runs.load_artifact(run_id, RUNS_ARTIFACT).decode("utf-8")
    return {r.query_id: r for r in parse_runs(text.splitlines())}


# rerank


def rerank_stage(
    runs: RunStore,
    store: CorpusStore,
    examples: Sequence[QAExample],
    retrieve_run: str,
    spec: RerankerSpec,
    endpoint: RerankerEndpoint,
) -> StageRun:
    """Rescore every retrieved candidate; the full reordered list is kept."""

    def compute(_: str) -> dict[str, bytes]:
        ranked = load_ranked(runs, retrieve_run)
        out = []
        with httpx.Client(timeout=endpoint.timeout) as client:
            for ex in examples:
                run = ranked.get(ex.example_id)
                if run is None:
                    raise MissingRun(f"retrieval run {retrieve_run} has no ranking for {ex.example_id!r}")
                if not run.entries:
                    out.append(RankedList(ex.example_id, (), Producer.RERANKED))
                    continue
                out.append(rerank(endpoint, run, store, len(run), ex.question, client=client))
        return {RUNS_ARTIFACT: runs_to_jsonl(out).encode("utf-8")}

    return _run_stage(runs, "rerank", {"reranker": spec.model}, [retrieve_run], store.checksum, compute)


# generation


def _upstream(runs: RunStore, run_id: str | None, mode: str) -> dict[str, str]:
    if run_id is None:
        return {"mode": mode, "retrieval": "closed_book"}
    manifest = runs.manifest(run_id)
    if manifest["kind"] == "rerank":
        return {"mode": mode, "retrieval": manifest["parents"][0], "rerank": run_id}
    if manifest["kind"] == "retrieve":
        return {"mode": mode, "retrieval": run_id}
    raise ConfigError(f"run {run_id} is a {manifest['kind']} run, not retrieval or rerank")


def _load_translations(path: str | None):
    if not path:
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def generate_stage(
    runs: RunStore,
    examples: Sequence[QAExample],
    dataset_checksum: str,
    *,
    mode: str,
    decode: DecodeConfig,
    endpoint: ChatEndpoint,
    language: LanguageSpec = LanguageSpec(),
    upstream_run: str | None = None,
    store: CorpusStore | None = None,
    top_context: int = 5,
) -> StageRun:
    """Prompt the generator for every example.

    ``rag`` and ``oracle`` modes read the top ``top_context`` passages of
    ``upstream_run``; ``closed_book`` has no parent. Failed requests are
    recorded with ``failed=True``; if every request fails the stage fails.
    """
    if mode not in ("rag", "closed_book", "oracle"):
        raise ConfigError(f"unknown generation mode {mode!r}")
    with_context = mode != "closed_book"
    if with_context and (upstream_run is None or store is None):
        raise ConfigError(f"{mode} generation needs an upstream run and a corpus store")
    variant = Variant(language.variant)
    config = {
        "mode": mode,
        "decode": asdict(decode),
        "top_context": top_context if with_context else None,
        "language": language.code,
        "variant": variant.value,
        "translations": _checksum_or_none(language.translations),
        "dataset": dataset_checksum,
    }
    parents = [upstream_run] if with_context else []
    corpus = store.checksum if with_context else None

    def compute(_: str) -> dict[str, bytes]:
        upstream = _upstream(runs, upstream_run if with_context else None, mode)
        ranked = load_ranked(runs, upstream_run) if with_context else {}
        translations = _load_translations(language.translations)
        items: list[tuple[str, PromptBundle]] = []
        early: dict[str, GenerationRecord] = {}
        for ex in examples:
            lang = language.code or ex.language
            if with_context:
                run = ranked.get(ex.example_id)
                ids = run.passage_ids[:top_context] if run else []
                passages = [store.get_passage(pid).prompt_text for pid in ids]
                if not passages:
                    early[ex.example_id] = GenerationRecord(
                        ex.example_id,
                        PromptBundle(RAG_SYSTEM_PROMPT, f"Question: {ex.question}", lang),
                        "",
                        decode.model_id,
                        decode.hash(),
                        upstream,
                        failed=True,
                        error=f"{NoContext.__name__}: nothing retrieved",
                    )
                    continue
                bundle = build_rag_prompt(ex.question, passages, lang)
            else:
                bundle = build_closed_book_prompt(ex.question, lang)
            bundle = apply_language_variant(bundle, lang, variant, translations)
            items.append((ex.example_id, bundle))
        generated = iter(generate_batch(endpoint, items, decode, upstream=upstream))
        slots = [early.get(ex.example_id) or next(generated) for ex in examples]
        if items and all(rec.failed for rec in slots):
            raise ServiceError(f"all {len(slots)} generations failed; first error: {slots[0].error}")
        lines = [json.dumps(rec.to_record(), ensure_ascii=False, sort_keys=True) for rec in slots]
        return {GENERATIONS_ARTIFACT: ("\n".join(lines) + "\n").encode("utf-8")}

    return _run_stage(runs, "generate", config, parents, corpus, compute)


def load_generations(runs: RunStore, run_id: str) -> list[GenerationRecord]:
    text = runs.load_artifact(run_id, GENERATIONS_ARTIFACT).decode("utf-8")
    return [GenerationRecord.from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


# evaluation


def _lineage(runs: RunStore, run_id: str) -> dict[str, str]:
    """kind -> RunId for ``run_id`` and all its ancestors."""
    out: dict[str, str] = {}
    todo = [run_id]
    while todo:
        rid = todo.pop()
        manifest = runs.manifest(rid)
        out.setdefault(manifest["kind"], rid)
        todo.extend(manifest["parents"])
    return dict(sorted(out.items()))


def evaluate_stage(
    runs: RunStore,
    examples: Sequence[QAExample],
    dataset_checksum: str,
    generation_run: str,
    metrics: Sequence[str],
    *,
    judge: JudgeEndpoint | None = None,
    detector: LanguageDetector | None = None,
    language: str | None = None,
) -> StageRun:
    metric_ids = expand_metrics(metrics)
    config = {
        "metrics": metric_ids,
        "judge": judge.model_id if judge and "llmeval" in metric_ids else None,
        "language": language if "clr" in metric_ids else None,
        "detector": type(detector).__name__ if detector and "clr" in metric_ids else None,
        "dataset": dataset_checksum,
    }

    def compute(run_id: str) -> dict[str, bytes]:
        records = load_generations(runs, generation_run)
        report = evaluate_records(
            examples, records, metric_ids, judge=judge, detector=detector, language=language, run_id=run_id
        )
        report.stages = {**_lineage(runs, generation_run), "evaluate": run_id}
        artifacts = {REPORT_ARTIFACT: report.to_jsonl().encode("utf-8")}
        if report.judge_raw:
            raw = [json.dumps({"example_id": k, "raw": v}, ensure_ascii=False) for k, v in report.judge_raw.items()]
            artifacts[JUDGE_ARTIFACT] = ("\n".join(raw) + "\n").encode("utf-8")
        return artifacts

    return _run_stage(runs, "evaluate", config, [generation_run], None, compute)


def load_report(runs: RunStore, run_id: str) -> MetricReport:
    manifest = runs.manifest(run_id)
    if manifest["kind"] != "evaluate":
        raise MissingRun(f"run {run_id} is a {manifest['kind']} run with no evaluation")
    return MetricReport.from_jsonl(runs.load_artifact(run_id, REPORT_ARTIFACT).decode("utf-8"), run_id)


# endpoints and experiments


def chat_endpoint(spec: GeneratorSpec, env: Mapping[str, str]) -> ChatEndpoint:
    url = spec.url or env.get("RAGBENCH_LLM_URL")
    if not url:
        raise ConfigError("no generator endpoint (generator.url or RAGBENCH_LLM_URL)")
    return ChatEndpoint(url, env.get("RAGBENCH_LLM_KEY"), timeout=spec.timeout, max_in_flight=spec.max_in_flight)


def reranker_endpoint(spec: RerankerSpec, env: Mapping[str, str]) -> RerankerEndpoint:
    url = spec.url or env.get("RAGBENCH_RERANKER_URL")
    if not url:
        raise ConfigError("no reranker endpoint (reranker.url or RAGBENCH_RERANKER_URL)")
    return RerankerEndpoint(
        url,
        timeout=spec.timeout,
        max_batch_size=spec.batch_size,
        api_key=env.get("RAGBENCH_RERANKER_KEY"),
        max_in_flight=spec.max_in_flight,
    )


def judge_endpoint(spec: JudgeSpec, env: Mapping[str, str]) -> JudgeEndpoint:
    url = spec.url or env.get("RAGBENCH_JUDGE_URL")
    if not url:
        raise ConfigError("no judge endpoint (judge.url or RAGBENCH_JUDGE_URL)")
    return JudgeEndpoint(
        url, spec.model, timeout=spec.timeout, api_key=env.get("RAGBENCH_JUDGE_KEY"), max_in_flight=spec.max_in_flight
    )


def run_experiment(
    config: ExperimentConfig,
    runs_root: str | os.PathLike | RunStore,
    *,
    detector: LanguageDetector | None = None,
    env: Mapping[str, str] | None = None,
) -> ExperimentResult:
    """retrieve -> (rerank) -> generate -> evaluate, reusing every stage already in the store."""
    env = os.environ if env is None else env
    findings = validate_config(config, env)
    if findings:
        raise ConfigError("; ".join(findings))
    runs = runs_root if isinstance(runs_root, RunStore) else RunStore(runs_root)
    examples = load_dataset(config.dataset)
    dataset_checksum = file_checksum(config.dataset)
    generator = chat_endpoint(config.generator, env)
    judge = judge_endpoint(config.judge, env) if config.judge and "llmeval" in config.metric_ids else None
    stages: list[StageRun] = []

    with runs.lock():
        store = open_store(config.corpus) if config.mode != "closed_book" else None
        try:
            upstream = None
            if config.mode == "rag":
                index_run = None
                if config.retriever.kind == "bm25":
                    params = Bm25Params(config.retriever.k1, config.retriever.b)
                    stages.append(index_stage(runs, store, params))
                    index_run = stages[-1].run_id
                stages.append(
                    retrieve_stage(
                        runs, store, examples, dataset_checksum, config.retriever, config.top_retrieve, index_run=index_run
                    )
                )
                if config.reranker:
                    endpoint = reranker_endpoint(config.reranker, env)
                    stages.append(rerank_stage(runs, store, examples, stages[-1].run_id, config.reranker, endpoint))
                upstream = stages[-1].run_id
            elif config.mode == "oracle":
                stages.append(
                    retrieve_stage(runs, store, examples, dataset_checksum, RetrieverSpec(kind="oracle"), config.top_retrieve)
                )
                upstream = stages[-1].run_id
            decode = DecodeConfig(config.generator.model, config.generator.max_new_tokens, config.generator.temperature)
            stages.append(
                generate_stage(
                    runs,
                    examples,
                    dataset_checksum,
                    mode=config.mode,
                    decode=decode,
                    endpoint=generator,
                    language=config.language,
                    upstream_run=upstream,
                    store=store,
                    top_context=config.top_context,
                )
            )
            stages.append(
                evaluate_stage(
                    runs,
                    examples,
                    dataset_checksum,
                    stages[-1].run_id,
                    config.metric_ids,
                    judge=judge,
                    detector=detector,
                    language=config.language.code,
                )
            )
        finally:
            if store is not None:
                store.close()
    return ExperimentResult(load_report(runs, stages[-1].run_id), stages)
