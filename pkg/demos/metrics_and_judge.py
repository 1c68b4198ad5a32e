"""Surface metrics, the LLM judge, language checks and rank correlation with the judge.

    python demos/metrics_and_judge.py
"""

from ragbench.evaluation import (
    JudgeEndpoint,
    char3_recall,
    correct_language_rate,
    correlate_metrics,
    exact_match,
    llmeval,
    match,
    rouge_l,
    token_prf,
)
from ragbench.testkit import MockBehavior, constant, start_mock_chat_service

PAIRS = [
    ("q1", ["Charles Darwin"], "It was written by Charles Darwin."),
    ("q2", ["1859"], "1859"),
    ("q3", ["Marie Curie"], "Curie, I believe."),
    ("q4", ["Tokyo"], "The capital is Kyoto."),
    ("q5", ["Tchaikovsky"], "Pyotr Chaikovsky"),
]


def main() -> None:
    print(f"{'id':4} {'match':>5} {'em':>4} {'f1':>6} {'rougeL':>7} {'char3':>6}")
    table = {"match": {}, "f1": {}, "char3": {}}
    for qid, refs, resp in PAIRS:
        f1 = token_prf(refs, resp)[2]
        c3 = char3_recall(refs, resp)
        table["match"][qid], table["f1"][qid], table["char3"][qid] = match(refs, resp), f1, c3
        print(f"{qid:4} {match(refs, resp):5d} {exact_match(refs, resp):4d} {f1:6.3f} {rouge_l(refs, resp):7.3f} {c3:6.3f}")

    # a judge that accepts everything except the Kyoto answer
    judge_service = start_mock_chat_service(
        MockBehavior(responder=lambda body: "No." if "Kyoto" in body["messages"][0]["content"] else "Yes, correct.")
    )
    try:
        judge = JudgeEndpoint(judge_service.url, "demo-judge")
        verdicts = {qid: llmeval(judge, "question", refs, resp).score for qid, refs, resp in PAIRS}
    finally:
        judge_service.stop()
    print("\nllmeval:", verdicts)
    print("kendall tau vs llmeval:", {m: round(t, 3) for m, t in correlate_metrics(table, verdicts).items()})

    responses = ["Die Hauptstadt von Frankreich ist Paris.", "The capital of France is Paris.", "Paris"]
    rate, n = correct_language_rate(responses, "de")
    print(f"\ncorrect language rate (de): {rate:.2f} over {n} responses long enough to judge")


if __name__ == "__main__":
    main()
