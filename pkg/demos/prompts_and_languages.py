"""Prompt construction, multilingual variants and batched chat completions.

    python demos/prompts_and_languages.py
"""

from ragbench.generation import (
    ChatEndpoint,
    DecodeConfig,
    Variant,
    apply_language_variant,
    build_closed_book_prompt,
    build_rag_prompt,
    generate_batch,
)
from ragbench.testkit import MockBehavior, echo, start_mock_chat_service


def show(title, bundle) -> None:
    print(f"--- {title}")
    print(f"[system] {bundle.system}")
    print(f"[user]   {bundle.user!r}\n")


def main() -> None:
    passages = ["Mont Blanc is the highest mountain in the Alps.", "It rises to 4,805 metres."]
    rag = build_rag_prompt("quelle est la hauteur du mont blanc", passages, "fr")
    show("rag", rag)
    show("closed book", build_closed_book_prompt("quelle est la hauteur du mont blanc", "fr"))
    for variant in (Variant.REPLY_IN_UL, Variant.BASIC_TRANSLATED, Variant.REPLY_IN_UL_TRANSLATED):
        show(variant.value, apply_language_variant(rag, "fr", variant))

    service = start_mock_chat_service(MockBehavior(responder=echo(), latency=(0.0, 0.02), seed=1))
    try:
        items = [(f"q{i}", build_closed_book_prompt(f"question {i}")) for i in range(8)]
        records = generate_batch(ChatEndpoint(service.url, max_in_flight=4), items, DecodeConfig("demo-model"))
        for rec in records:
            print(f"{rec.query_id}: {rec.response!r}")
        print(f"\ndecode config hash {records[0].config_hash}, {service.count()} calls, order preserved")
    finally:
        service.stop()


if __name__ == "__main__":
    main()
