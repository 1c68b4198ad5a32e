import csv
import json
import subprocess
import sys

import pytest

from ragbench.cli import main
from ragbench.testkit import MockBehavior, constant, extractive, score_by_overlap
from ragbench.testkit.synthetic import ANSWER_PATTERN, write_benchmark


@pytest.fixture
def env(tmp_path, monkeypatch, chat_service, rerank_service):
    llm = chat_service(MockBehavior(responder=extractive(ANSWER_PATTERN)))
    judge = chat_service(MockBehavior(responder=constant("yes")))
    reranker = rerank_service(MockBehavior(responder=score_by_overlap()))
    monkeypatch.setenv("RAGBENCH_LLM_URL", llm.url)
    monkeypatch.setenv("RAGBENCH_JUDGE_URL", judge.url)
    monkeypatch.setenv("RAGBENCH_RERANKER_URL", reranker.url)
    monkeypatch.setenv("RAGBENCH_RUNS", str(tmp_path / "runs"))
    collection, dataset = write_benchmark(tmp_path / "data", 12, seed=5)
    return {"collection": collection, "dataset": dataset, "store": tmp_path / "store", "llm": llm, "tmp": tmp_path}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def last_id(stdout):
    return stdout.strip().splitlines()[-1].split("\t")[0]


def test_full_chain(env, capsys):
    code, out, _ = run(capsys, "ingest", "--collection", env["collection"], "--out", env["store"])
    assert code == 0 and json.loads(out)["docs"] == 12

    code, out, _ = run(capsys, "index", "--corpus", env["store"])
    index_run = last_id(out)
    assert code == 0 and out.endswith("computed\n") and index_run.startswith("index-")
    _, again, _ = run(capsys, "index", "--corpus", env["store"])
    assert again == f"{index_run}\tcached\n"

    ranked = env["tmp"] / "ranked.jsonl"
    code, out, _ = run(
        capsys, "retrieve", "--corpus", env["store"], "--dataset", env["dataset"], "--k", 10, "--index-run", index_run, "--out", ranked
    )
    retrieve_run = last_id(out)
    assert code == 0 and len(ranked.read_text().splitlines()) == 12

    code, out, _ = run(capsys, "rerank", "--run", retrieve_run, "--corpus", env["store"], "--dataset", env["dataset"], "--model", "overlap")
    rerank_run = last_id(out)
    assert code == 0 and rerank_run.startswith("rerank-")

    common = ("--dataset", env["dataset"], "--model", "extractive")
    code, out, _ = run(capsys, "generate", "--run", rerank_run, "--corpus", env["store"], "--top-context", 3, *common)
    rag_gen = last_id(out)
    code, out, _ = run(capsys, "generate", "--mode", "closed_book", *common)
    closed_gen = last_id(out)
    assert code == 0 and env["llm"].count() == 24

    evaluated = []
    for gen in (rag_gen, closed_gen):
        code, out, _ = run(capsys, "evaluate", "--run", gen, "--dataset", env["dataset"], "--metrics", "match,em,llmeval", "--judge-model", "j")
        assert code == 0
        rid, _ = out.splitlines()[0].split("\t")
        evaluated.append(rid)
    assert json.loads(out.splitlines()[1])["means"]["match"] == 0.0

    table_csv = env["tmp"] / "table.csv"
    code, out, _ = run(capsys, "report", *evaluated, "--csv", table_csv)
    assert code == 0 and evaluated[0] in out and "match_gain" in out
    rows = list(csv.DictReader(table_csv.open()))
    assert rows[0]["match"] == "1.000000" and rows[0]["match_gain"] == "1.000000"

    code, out, _ = run(capsys, "correlate", *evaluated, "--pooled")
    assert code == 0 and out.splitlines()[0].split() == ["metric", "tau_vs_llmeval"]


def test_run_command_and_validate(env, capsys):
    run(capsys, "ingest", "--collection", env["collection"], "--out", env["store"])
    config = env["tmp"] / "exp.yaml"
    config.write_text(
        "dataset: data/dataset.jsonl\ncorpus: store\ntop_retrieve: 10\ntop_context: 2\n"
        "generator: {model: extractive}\nmetrics: [match, f1]\n"
    )
    assert run(capsys, "validate", "--config", config)[:2] == (0, "ok\n")
    code, out, _ = run(capsys, "run", "--config", config)
    assert code == 0
    assert [line.split("\t")[0] for line in out.splitlines()[:4]] == ["index", "retrieve", "generate", "evaluate"]
    assert json.loads(out.splitlines()[-1])["match"] == 1.0
    _, out, _ = run(capsys, "run", "--config", config)
    assert all(line.endswith("cached") for line in out.splitlines()[:4])


def test_exit_code_config(env, capsys):
    config = env["tmp"] / "exp.yaml"
    config.write_text("dataset: missing.jsonl\ngenerator: {model: m}\ntop_context: 9\ntop_retrieve: 3\n")
    code, out, _ = run(capsys, "validate", "--config", config)
    assert code == 2 and "exceeds top_retrieve" in out
    assert run(capsys, "run", "--config", config)[0] == 2
    assert run(capsys, "generate", "--dataset", env["dataset"], "--model", "m")[0] == 2


def test_exit_code_service(env, capsys, monkeypatch):
    monkeypatch.setenv("RAGBENCH_LLM_URL", "http://127.0.0.1:9")
    code, _, err = run(capsys, "generate", "--mode", "closed_book", "--dataset", env["dataset"], "--model", "m")
    assert code == 3 and "error:" in err


def test_exit_code_data(env, capsys):
    bad = env["tmp"] / "bad.jsonl"
    bad.write_text('{"id": "a", "question": "q"}\n')
    code, _, err = run(capsys, "generate", "--mode", "closed_book", "--dataset", bad, "--model", "m")
    assert code == 4 and "line 1" in err
    assert run(capsys, "report", "evaluate-" + "0" * 24)[0] == 4


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "ragbench.cli", "--help"], capture_output=True, text=True, check=True)
    for command in ("ingest", "index", "retrieve", "rerank", "generate", "evaluate", "correlate", "report", "validate", "run"):
        assert command in out.stdout
