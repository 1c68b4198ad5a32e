import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragbench.errors import ConfigError, DegenerateInput, InsufficientSamples, LengthMismatch, NoReferences, UnsupportedLanguage
from ragbench.evaluation import (
    JudgeEndpoint,
    MetricReport,
    TrigramDetector,
    char3_recall,
    correct_language_rate,
    correlate_datasets,
    correlate_metrics,
    default_detector,
    evaluate_records,
    exact_match,
    expand_metrics,
    kendall_tau,
    llmeval,
    match,
    normalize,
    parse_verdict,
    rouge_l,
    rouge_n,
    token_prf,
)
from ragbench.generation import GenerationRecord, build_closed_book_prompt
from ragbench.http import RetryPolicy
from ragbench.orchestrator.datasets import QAExample
from ragbench.testkit import MockBehavior, brute_force_tau, constant

# surface metrics


@pytest.mark.parametrize(
    "raw, clean",
    [
        ("The  Eiffel Tower!", "eiffel tower"),
        ("an apple, a pear", "apple pear"),
        ("«Bonjour»…dit-il", "bonjourditil"),
        ("theatre", "theatre"),
        ("", ""),
    ],
)
def test_normalize(raw, clean):
    assert normalize(raw) == clean


def test_match_and_exact_match():
    assert match(["Paris"], "It is Paris, France.") == 1
    assert exact_match(["Paris"], "It is Paris, France.") == 0
    assert exact_match(["the Paris"], "paris!") == 1
    assert match(["Lyon", "Paris"], "paris") == 1
    assert match(["Rome"], "paris") == 0


def test_no_references():
    with pytest.raises(NoReferences):
        match([], "x")


def test_token_prf():
    p, r, f = token_prf(["barack obama"], "president barack obama")
    assert (p, r) == (pytest.approx(2 / 3), 1.0)
    assert f == pytest.approx(0.8)
    assert token_prf(["x"], "") == (0.0, 0.0, 0.0)
    # both sides normalize to nothing: treated as agreement
    assert token_prf(["the"], "a") == (1.0, 1.0, 1.0)


def test_token_prf_picks_best_reference():
    assert token_prf(["nothing shared", "red car"], "a red car")[2] == 1.0


def test_rouge():
    assert rouge_l(["a b c d"], "a b c e") == pytest.approx(0.75)
    assert rouge_n(["a b c d"], "a b c e", 1) == pytest.approx(0.75)
    assert rouge_n(["a b c d"], "a b c e", 2) == pytest.approx(2 / 3)
    assert rouge_n(["word"], "word", 2) == 1.0
    assert rouge_n(["word"], "other", 2) == 0.0
    assert rouge_l(["x"], "") == 0.0
    with pytest.raises(ValueError):
        rouge_n(["a"], "a", 0)


def test_rouge_keeps_articles():
    assert rouge_l(["the cat"], "cat") < 1.0
    assert match(["the cat"], "cat") == 1


def test_char3():
    assert char3_recall(["ab"], "ab") == 1.0
    assert char3_recall(["ab"], "abc") == 0.0
    assert char3_recall(["Tokyo"], "tokyo!") == 1.0
    assert char3_recall(["abcd"], "xbcd") == 0.5
    assert char3_recall([""], "") == 0.0
    assert char3_recall(["  "], "  ") == 1.0


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40), st.text(max_size=40))
def test_scores_stay_in_unit_interval(ref, resp):
    for value in (*token_prf([ref], resp), rouge_n([ref], resp, 1), rouge_n([ref], resp, 2), rouge_l([ref], resp), char3_recall([ref], resp)):
        assert 0.0 <= value <= 1.0


# judge


@pytest.mark.parametrize(
    "completion, score",
    [("Yes}", 1), ("TRUE.", 1), ("No", 0), ("I cannot decide.", 0), ("", 0), ("yesterday, yes", 1), ("no, yes", 0)],
)
def test_parse_verdict(completion, score):
    assert parse_verdict(completion) == score


def test_llmeval_shows_first_reference_only(chat_service):
    svc = chat_service(MockBehavior(responder=constant("yes")))
    judge = JudgeEndpoint(svc.url, "judge-m", retry=RetryPolicy(attempts=2, backoff=0.01))
    verdict = llmeval(judge, "q?", ["first", "second"], "resp")
    assert (verdict.score, verdict.raw) == (1, "yes")
    body = svc.calls[0]["body"]
    assert body["model"] == "judge-m" and body["temperature"] == 0.0
    prompt = body["messages"][0]["content"]
    assert "first" in prompt and "second" not in prompt


def test_judge_from_env(monkeypatch):
    monkeypatch.delenv("RAGBENCH_JUDGE_URL", raising=False)
    with pytest.raises(ConfigError):
        JudgeEndpoint.from_env("m")
    monkeypatch.setenv("RAGBENCH_JUDGE_URL", "http://h:1")
    assert JudgeEndpoint.from_env("m").base_url == "http://h:1"


# language id


class StubDetector:
    supported_languages = frozenset({"en", "fr"})

    def detect(self, text):
        return "fr" if "le" in text.split() else "en"


def test_clr_with_stub_detector():
    responses = [
        "short",
        "le chat est sur le tapis ici",
        "the cat sat on the mat over there",
        "le chien dort dans le jardin",
    ]
    assert correct_language_rate(responses, "fr", StubDetector()) == (pytest.approx(2 / 3), 3)
    assert math.isnan(correct_language_rate(["tiny"], "fr", StubDetector())[0])
    with pytest.raises(UnsupportedLanguage):
        correct_language_rate(responses, "de", StubDetector())


def test_default_detector_separates_scripts():
    detector = default_detector()
    assert detector.detect("Der Hund schläft im Garten und die Katze auch.") == "de"
    assert detector.detect("El perro duerme en el jardín con los niños.") == "es"
    assert detector.detect("東京は日本の首都であり、多くの人が住んでいます。") == "ja"
    assert detector.detect("The quick brown fox jumps over the lazy dog.") == "en"


def test_trigram_detector_tie_goes_alphabetical():
    assert TrigramDetector({"b": "xyz", "a": "xyz"}).detect("qqq") == "a"


# correlation


def test_tau_extremes():
    xs = [1, 2, 3, 4, 5]
    assert kendall_tau(xs, xs) == pytest.approx(1.0)
    assert kendall_tau(xs, xs[::-1]) == pytest.approx(-1.0)


def test_tau_errors():
    with pytest.raises(LengthMismatch):
        kendall_tau([1, 2], [1])
    with pytest.raises(InsufficientSamples):
        kendall_tau([1], [1])
    with pytest.raises(DegenerateInput):
        kendall_tau([1, 1, 1], [1, 2, 3])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3)), min_size=2, max_size=60))
def test_tau_matches_pairwise_oracle(pairs):
    xs, ys = zip(*pairs)
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    assert kendall_tau(xs, ys) == pytest.approx(brute_force_tau(xs, ys), abs=1e-12)


def test_tau_symmetry():
    rng = random.Random(4)
    xs = [rng.randint(0, 5) for _ in range(80)]
    ys = [rng.random() for _ in range(80)]
    assert kendall_tau(xs, ys) == pytest.approx(kendall_tau(ys, xs))
    assert kendall_tau(xs, ys) == pytest.approx(-kendall_tau(xs, [-y for y in ys]))


def test_correlate_metrics():
    judge = {"a": 0, "b": 1, "c": 1, "d": 0}
    scores = {
        "same": {"a": 0.1, "b": 0.9, "c": 0.9, "d": 0.1},
        "flip": {"a": 0.9, "b": 0.1, "c": 0.1, "d": 0.9},
        "flat": {"a": 0.5, "b": 0.5, "c": 0.5, "d": 0.5},
        "gappy": {"a": 0.0, "b": None, "c": 1.0, "e": 1.0},
    }
    table = correlate_metrics(scores, judge)
    assert table["same"] == pytest.approx(1.0)
    assert table["flip"] == pytest.approx(-1.0)
    assert math.isnan(table["flat"])
    assert table["gappy"] == pytest.approx(1.0)


def test_correlate_needs_two_aligned_samples():
    with pytest.raises(InsufficientSamples):
        correlate_metrics({"m": {"a": 1.0}}, {"a": 1})


def test_correlate_datasets_mean_and_pooled():
    up = ({"m": {"a": 0.0, "b": 1.0}}, {"a": 0, "b": 1})
    down = ({"m": {"a": 0.0, "b": 1.0}}, {"a": 1, "b": 0})
    assert correlate_datasets([up, down])["m"] == pytest.approx(0.0)
    assert correlate_datasets([up, up], pooled=True)["m"] == pytest.approx(1.0)


# reports


def _rec(qid, response, failed=False):
    return GenerationRecord(qid, build_closed_book_prompt("q"), response, "m", "h", {}, failed=failed, error="x" if failed else None)


EXAMPLES = [
    QAExample("e1", "capital of france?", ("Paris",)),
    QAExample("e2", "largest planet?", ("Jupiter",)),
    QAExample("e3", "who?", ("Ada",)),
]


def test_expand_metrics():
    assert expand_metrics(["match", "f1", "rouge", "match"]) == ["match", "precision", "recall", "f1", "rouge1", "rouge2", "rougeL"]
    with pytest.raises(ConfigError):
        expand_metrics(["bleu"])


def test_failed_generations_are_excluded():
    records = [_rec("e1", "Paris."), _rec("e2", "", failed=True), _rec("e3", "no idea")]
    report = evaluate_records(EXAMPLES, records, ["match", "em"])
    assert report.per_example("match") == {"e1": 1.0, "e3": 0.0}
    assert report.mean("match") == 0.5
    assert report.summary()["excluded"] == {"match": 1, "em": 1}


def test_llmeval_without_judge():
    with pytest.raises(ConfigError):
        evaluate_records(EXAMPLES, [_rec("e1", "x")], ["llmeval"])


def test_clr_in_report_uses_detector():
    records = [_rec("e1", "le chat est sur le tapis ici"), _rec("e2", "ok"), _rec("e3", "the dog sleeps in the garden")]
    report = evaluate_records(EXAMPLES, records, ["clr"], detector=StubDetector(), language="fr")
    assert report.per_example("clr") == {"e1": 1.0, "e3": 0.0}
    assert report.excluded["clr"] == 1


def test_report_round_trip(tmp_path):
    records = [_rec("e1", "Paris"), _rec("e2", "Saturn"), _rec("e3", "Ada Lovelace")]
    report = evaluate_records(EXAMPLES, records, ["match", "f1", "char3"], run_id="evaluate-x")
    report.stages = {"generate": "generate-y"}
    report.save(tmp_path / "r.jsonl")
    loaded = MetricReport.load(tmp_path / "r.jsonl")
    assert loaded.scores() == report.scores()
    assert loaded.summary() == report.summary()
    # means are recomputed from the per-sample lines, not copied from the summary
    for metric in report.metrics:
        vals = [s.value for s in loaded.scores() if s.metric_id == metric]
        assert loaded.mean(metric) == pytest.approx(sum(vals) / len(vals))


def test_report_rejects_out_of_range():
    report = MetricReport("r", ["match"], ["e1"])
    with pytest.raises(ValueError):
        report.add("e1", "match", 1.5)
