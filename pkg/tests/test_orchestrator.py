import json
import multiprocessing
from pathlib import Path

import pytest

from ragbench.corpus import ChunkPolicy, ingest_collection, read_collection
from ragbench.errors import ConfigError, CorruptStore, DuplicateExampleId, MissingRun, RagbenchError, SchemaError
from ragbench.orchestrator import (
    RunStore,
    build_table,
    compute_run_id,
    config_from_dict,
    load_config,
    load_dataset,
    report,
    run_experiment,
    validate_config,
)
from ragbench.orchestrator.datasets import QAExample, from_kilt, from_mkqa, from_nq_open, write_dataset
from ragbench.testkit import MockBehavior, constant, extractive, score_by_overlap
from ragbench.testkit.synthetic import ANSWER_PATTERN, write_benchmark

# datasets


def _lines(path, *records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def test_load_dataset(tmp_path):
    path = _lines(
        tmp_path / "d.jsonl",
        {"id": "a", "question": "q1", "references": ["x"]},
        {"id": "b", "question": "q2", "references": "y", "relevant_doc_ids": ["D"], "lang": "fr"},
    )
    a, b = load_dataset(path)
    assert a == QAExample("a", "q1", ("x",))
    assert b.references == ("y",) and b.language == "fr" and b.has_judgments


def test_missing_references_names_the_line(tmp_path):
    path = _lines(tmp_path / "d.jsonl", {"id": "a", "question": "q", "references": ["x"]}, {"id": "b", "question": "q"})
    with pytest.raises(SchemaError, match="line 2"):
        load_dataset(path)


def test_duplicate_example_ids(tmp_path):
    row = {"id": "a", "question": "q", "references": ["x"]}
    with pytest.raises(DuplicateExampleId):
        load_dataset(_lines(tmp_path / "d.jsonl", row, row))


def test_dataset_round_trip(tmp_path):
    examples = [QAExample("a", "q", ("x", "y"), ("D",), ("D::1",), "de")]
    write_dataset(tmp_path / "d.jsonl", examples)
    assert load_dataset(tmp_path / "d.jsonl") == examples


def test_adapters():
    kilt = from_kilt({"id": 1, "input": "q", "output": [{"answer": "A", "provenance": [{"wikipedia_id": 7}]}, {"answer": "A"}]})
    assert kilt.references == ("A",) and kilt.relevant_doc_ids == ("7",)
    assert from_nq_open({"question": "q", "answer": ["a", "b"]}, 4).example_id == "4"
    mkqa = from_mkqa({"example_id": 9, "queries": {"ja": "質問"}, "answers": {"ja": [{"text": "答", "aliases": ["こたえ"]}]}}, "ja")
    assert mkqa.question == "質問" and mkqa.references == ("答", "こたえ")


# configs


@pytest.fixture
def files(tmp_path):
    dataset = _lines(tmp_path / "d.jsonl", {"id": "a", "question": "q", "references": ["x"]})
    (tmp_path / "store").mkdir()
    (tmp_path / "store" / "header.json").write_text("{}")
    return dataset, tmp_path / "store"


def _config(dataset, store, **over):
    data = {"dataset": str(dataset), "corpus": str(store), "generator": {"model": "m", "url": "http://h:1"}}
    data.update(over)
    return config_from_dict(data)


def test_valid_config_has_no_findings(files):
    assert validate_config(_config(*files), env={}) == []


def test_top_context_above_top_retrieve(files):
    (finding,) = validate_config(_config(*files, top_retrieve=5, top_context=6), env={})
    assert "top_context (6) exceeds top_retrieve (5)" in finding


def test_oracle_without_judgments(files):
    (finding,) = validate_config(_config(*files, mode="oracle"), env={})
    assert "judgments" in finding


def test_missing_endpoints_and_files(files, tmp_path):
    findings = validate_config(
        config_from_dict(
            {
                "dataset": str(tmp_path / "none.jsonl"),
                "generator": "m",
                "reranker": "r",
                "metrics": ["match", "llmeval"],
                "judge": "j",
            }
        ),
        env={},
    )
    text = "\n".join(findings)
    for needle in ("dataset file not found", "needs a corpus", "reranker configured", "no generator endpoint", "no judge endpoint"):
        assert needle in text
    env = {"RAGBENCH_LLM_URL": "u", "RAGBENCH_JUDGE_URL": "u", "RAGBENCH_RERANKER_URL": "u"}
    assert validate_config(_config(*files, reranker="r", metrics=["llmeval"], judge="j"), env=env) == []


def test_config_rejects_unknown_keys(files):
    with pytest.raises(ConfigError, match="topk"):
        _config(*files, topk=5)
    with pytest.raises(ConfigError):
        _config(*files, retriever={"kind": "bm25", "k2": 1})


def test_yaml_paths_are_relative_to_the_file(tmp_path):
    (tmp_path / "exp.yaml").write_text("dataset: data/d.jsonl\ncorpus: store\ngenerator: {model: m}\nmetrics: match,em\n")
    config = load_config(tmp_path / "exp.yaml")
    assert config.dataset == str(tmp_path / "data" / "d.jsonl")
    assert config.corpus == str(tmp_path / "store")
    assert config.metric_ids == ["match", "em"]
    (tmp_path / "bad.yaml").write_text("dataset: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


# run ids and the run store


def test_run_id_changes_with_any_field():
    base = compute_run_id("generate", {"a": 1, "b": [1, 2]}, ["p"], "c")
    assert base == compute_run_id("generate", {"b": [1, 2], "a": 1}, ["p"], "c")
    others = {
        compute_run_id("evaluate", {"a": 1, "b": [1, 2]}, ["p"], "c"),
        compute_run_id("generate", {"a": 2, "b": [1, 2]}, ["p"], "c"),
        compute_run_id("generate", {"a": 1, "b": [2, 1]}, ["p"], "c"),
        compute_run_id("generate", {"a": 1, "b": [1, 2]}, ["q"], "c"),
        compute_run_id("generate", {"a": 1, "b": [1, 2]}, ["p"], "d"),
        compute_run_id("generate", {"a": 1, "b": [1, 2]}, [], "c"),
    }
    assert base not in others and len(others) == 6
    assert base.startswith("generate-")


def test_store_save_and_load(tmp_path):
    runs = RunStore(tmp_path)
    rid = runs.run_id("index", {"k": 1})
    runs.save(rid, "index", {"k": 1}, [], {"a.bin": b"\x00\x01"}, timings={"seconds": 0.5})
    assert runs.has(rid) and runs.runs() == [rid]
    assert runs.load_artifact(rid, "a.bin") == b"\x00\x01"
    assert runs.manifest(rid)["kind"] == "index"
    assert runs.timings(rid) == {"seconds": 0.5}
    with pytest.raises(MissingRun):
        runs.load_artifact(rid, "other")
    with pytest.raises(MissingRun):
        runs.manifest("index-000")
    with pytest.raises(MissingRun):
        runs.path("../escape")


def test_corrupt_artifact(tmp_path):
    runs = RunStore(tmp_path)
    rid = runs.run_id("index", {})
    runs.save(rid, "index", {}, [], {"a.bin": b"abc"})
    (runs.path(rid) / "a.bin").write_bytes(b"abd")
    with pytest.raises(CorruptStore):
        runs.load_artifact(rid, "a.bin")


def _hold_lock(root, ready, release):
    with RunStore(root).lock():
        ready.set()
        release.wait(10)


def test_lock_excludes_other_processes(tmp_path):
    ctx = multiprocessing.get_context("fork")
    ready, release = ctx.Event(), ctx.Event()
    proc = ctx.Process(target=_hold_lock, args=(str(tmp_path), ready, release))
    proc.start()
    try:
        assert ready.wait(10)
        with pytest.raises(RagbenchError, match="locked"):
            with RunStore(tmp_path).lock():
                pass
    finally:
        release.set()
        proc.join(10)
    with RunStore(tmp_path).lock():
        pass


# experiments against the mocks


@pytest.fixture
def bench(tmp_path):
    collection, dataset = write_benchmark(tmp_path / "data", 20, seed=2)
    ingest_collection(read_collection(collection), ChunkPolicy(), tmp_path / "store")
    return dataset, tmp_path / "store"


@pytest.fixture
def services(chat_service, rerank_service):
    return (
        chat_service(MockBehavior(responder=extractive(ANSWER_PATTERN))),
        rerank_service(MockBehavior(responder=score_by_overlap())),
        chat_service(MockBehavior(responder=constant("Yes."))),
    )


def _experiment(bench, services, **over):
    dataset, store = bench
    chat, reranker, judge = services
    data = {
        "dataset": str(dataset),
        "corpus": str(store),
        "top_retrieve": 20,
        "top_context": 5,
        "reranker": {"model": "overlap", "url": reranker.url},
        "generator": {"model": "extractive", "url": chat.url},
        "judge": {"model": "yes-man", "url": judge.url},
        "metrics": ["match", "llmeval"],
    }
    data.update(over)
    return config_from_dict(data)


def test_top_context_change_reuses_upstream(tmp_path, bench, services):
    runs = RunStore(tmp_path / "runs")
    first = run_experiment(_experiment(bench, services), runs, env={})
    assert first.computed == ["index", "retrieve", "rerank", "generate", "evaluate"]
    reranker = services[1]
    reranker.reset()
    second = run_experiment(_experiment(bench, services, top_context=3), runs, env={})
    assert second.cached == ["index", "retrieve", "rerank"]
    assert second.computed == ["generate", "evaluate"]
    assert reranker.count() == 0
    assert second.run_ids["generate"] != first.run_ids["generate"]


def test_closed_book_has_no_retrieval(tmp_path, bench, services):
    result = run_experiment(_experiment(bench, services, mode="closed_book", corpus=None, reranker=None), tmp_path / "runs", env={})
    assert [s.kind for s in result.stages] == ["generate", "evaluate"]
    assert RunStore(tmp_path / "runs").manifest(result.run_ids["generate"])["parents"] == []
    assert result.report.mean("match") == 0.0
    assert result.report.mean("llmeval") == 1.0


def test_oracle_mode(tmp_path, bench, services):
    result = run_experiment(_experiment(bench, services, mode="oracle", reranker=None), tmp_path / "runs", env={})
    assert [s.kind for s in result.stages] == ["retrieve", "generate", "evaluate"]
    assert result.report.mean("match") == 1.0


def test_invalid_config_raises_before_any_call(tmp_path, bench, services):
    with pytest.raises(ConfigError, match="top_context"):
        run_experiment(_experiment(bench, services, top_context=30), tmp_path / "runs", env={})
    assert all(s.count() == 0 for s in services)


def test_report_table(tmp_path, bench, services):
    runs = RunStore(tmp_path / "runs")
    rag = run_experiment(_experiment(bench, services), runs, env={}).run_ids["evaluate"]
    closed = run_experiment(_experiment(bench, services, mode="closed_book", corpus=None, reranker=None), runs, env={}).run_ids["evaluate"]

    table = build_table(runs, [rag, closed], ["match", "llmeval"])
    assert table.columns == ["run", "dataset", "setting", "match", "llmeval", "match_gain", "llmeval_gain"]
    assert [r.run_id for r in table.rows] == [rag, closed]
    assert table.value(rag, "match") == 1.0 and table.value(closed, "match") == 0.0
    assert table.rows[0].gains == {"match": 1.0, "llmeval": 0.0}
    assert table.rows[0].label == "rag/bm25/overlap/top5/extractive"
    assert table.rows[1].label == "closed_book/extractive"

    text, csv_text = report(runs, [rag, closed], ["match", "llmeval"])
    assert report(runs, [rag, closed], ["match", "llmeval"]) == (text, csv_text)
    assert "1.0000" in text and "n/a" in text
    header, first, second = csv_text.splitlines()
    assert first.split(",")[3:] == ["1.000000", "1.000000", "1.000000", "0.000000"]
    assert second.split(",")[-2:] == ["n/a", "n/a"]

    plain = build_table(runs, [rag], ["match", "em"], gains=False)
    assert plain.columns == ["run", "dataset", "setting", "match", "em"]
    assert plain.value(rag, "em") is None


def test_table_needs_evaluation_runs(tmp_path, bench, services):
    runs = RunStore(tmp_path / "runs")
    result = run_experiment(_experiment(bench, services), runs, env={})
    with pytest.raises(MissingRun):
        build_table(runs, [result.run_ids["generate"]])
    with pytest.raises(MissingRun):
        build_table(runs, ["evaluate-" + "0" * 24])


def test_report_keeps_lineage(tmp_path, bench, services):
    result = run_experiment(_experiment(bench, services), tmp_path / "runs", env={})
    assert result.report.stages == result.run_ids
    assert Path(tmp_path / "runs" / result.run_ids["evaluate"] / "manifest.json").is_file()
