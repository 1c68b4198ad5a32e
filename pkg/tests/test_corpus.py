import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragbench.corpus import (
    ChunkMode,
    ChunkPolicy,
    Document,
    Passage,
    chunk_document,
    doc_id_of,
    get_passage,
    ingest_collection,
    open_store,
    read_collection,
    write_collection,
)
from ragbench.errors import CorruptStore, DuplicateDocId, EmptyDocument, SchemaError, UnknownPassageId
from ragbench.testkit.synthetic import random_document

WORDS = ChunkPolicy(ChunkMode.WORDS, 100)
CHARS = ChunkPolicy(ChunkMode.CHARACTERS, 100)


def words(n, prefix="w"):
    return " ".join(f"{prefix}{i}" for i in range(n))


def test_250_words_make_three_passages():
    passages = chunk_document(Document("D", "T", words(250)), WORDS)
    assert [len(p.body.split()) for p in passages] == [100, 100, 50]
    assert all(p.prompt_text.startswith("T ") for p in passages)
    assert [p.passage_id for p in passages] == ["D::0", "D::1", "D::2"]


def test_exactly_100_words_is_one_passage():
    text = words(100)
    (p,) = chunk_document(Document("D", "T", text), WORDS)
    assert p.body == text


def test_205_chinese_characters():
    text = "".join(chr(0x4E00 + i) for i in range(205))
    passages = chunk_document(Document("Z", "标题", text, "zh"), CHARS)
    assert [len(p.body) for p in passages] == [100, 100, 5]
    assert "".join(p.body for p in passages) == text


def test_short_document_gives_one_passage():
    assert len(chunk_document(Document("D", "", "just three words"), WORDS)) == 1


def test_blank_document_rejected():
    with pytest.raises(EmptyDocument):
        chunk_document(Document("D", "T", " \n\t "), WORDS)


def test_prompt_text_without_title():
    (p,) = chunk_document(Document("D", "", "body text"), WORDS)
    assert p.prompt_text == "body text"


def test_policy_for_language():
    assert ChunkPolicy.for_language("ja").mode is ChunkMode.CHARACTERS
    assert ChunkPolicy.for_language("th").mode is ChunkMode.CHARACTERS
    assert ChunkPolicy.for_language("fr").mode is ChunkMode.WORDS


def test_passage_bytes_round_trip():
    p = Passage("D::1", "D", 1, "Tïtle", "bödy 日本", "en")
    assert Passage.from_bytes(p.to_bytes()) == p


def test_doc_id_of_keeps_inner_separators():
    assert doc_id_of("a::b::3") == "a::b"


def test_ingest_summary_counts(tmp_path):
    docs = [Document(f"D{i}", "T", words(150)) for i in range(3)]
    summary = ingest_collection(docs, WORDS, tmp_path / "s")
    assert (summary.docs, summary.passages) == (3, 6)


def test_empty_stream_gives_valid_empty_store(tmp_path):
    summary = ingest_collection([], WORDS, tmp_path / "s")
    assert (summary.docs, summary.passages) == (0, 0)
    with open_store(tmp_path / "s") as store:
        assert len(store) == 0 and store.passage_ids() == []


def test_duplicate_doc_id(tmp_path):
    docs = [Document("D1", "", "a"), Document("D1", "", "b")]
    with pytest.raises(DuplicateDocId, match="D1"):
        ingest_collection(docs, WORDS, tmp_path / "s")
    assert not list((tmp_path / "s").glob("*.tmp"))


def test_get_passage_round_trip(tmp_path):
    ingest_collection([Document("D1", "Title", "some words here")], WORDS, tmp_path / "s")
    with open_store(tmp_path / "s") as store:
        p = get_passage(store, "D1::0")
        assert (p.doc_id, p.body, p.title) == ("D1", "some words here", "Title")
        with pytest.raises(UnknownPassageId):
            get_passage(store, "absent::0")
        assert "D1::0" in store and "absent::0" not in store


def test_reopen_reads_identical_content(tmp_path):
    rng = random.Random(1)
    docs = [random_document(rng, f"d{i}") for i in range(40)]
    ingest_collection(docs, WORDS, tmp_path / "s")
    with open_store(tmp_path / "s") as a:
        first = [a.read_raw(pid) for pid in a.passage_ids()]
        doc_ids = a.doc_ids()
    with open_store(tmp_path / "s") as b:
        assert [b.read_raw(pid) for pid in b.passage_ids()] == first
        assert b.doc_ids() == doc_ids
        assert [p.passage_id for p in b.passages_of("d3")] == [f"d3::{i}" for i in range(len(b.passages_of("d3")))]


def test_two_ingests_are_byte_identical(tmp_path):
    rng = random.Random(2)
    docs = [random_document(rng, f"d{i}", mode="chars") for i in range(30)]
    ingest_collection(docs, CHARS, tmp_path / "a")
    ingest_collection(docs, CHARS, tmp_path / "b")
    for name in ("passages.bin", "offsets.jsonl", "header.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_tampered_store_detected(tmp_path):
    ingest_collection([Document("D", "", words(10))], WORDS, tmp_path / "s")
    data = tmp_path / "s" / "passages.bin"
    raw = bytearray(data.read_bytes())
    raw[-3] ^= 1
    data.write_bytes(bytes(raw))
    with pytest.raises(CorruptStore):
        open_store(tmp_path / "s")


def test_collection_file_round_trip(tmp_path):
    docs = [Document("a", "T", "x y", "en"), Document("b", "", "日本語", "ja")]
    write_collection(tmp_path / "c.jsonl", docs)
    assert list(read_collection(tmp_path / "c.jsonl")) == docs


def test_collection_missing_field(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps({"id": "a", "title": "t"}) + "\n")
    with pytest.raises(SchemaError):
        list(read_collection(path))


@settings(max_examples=150, deadline=None)
@given(st.text(min_size=1, max_size=400).filter(str.strip), st.integers(1, 30))
def test_word_chunks_cover_text_without_overlap(text, size):
    passages = chunk_document(Document("D", "T", text), ChunkPolicy(ChunkMode.WORDS, size))
    pieces = [p.body.split() for p in passages]
    assert [w for piece in pieces for w in piece] == text.split()
    assert all(1 <= len(piece) <= size for piece in pieces)


@settings(max_examples=150, deadline=None)
@given(st.text(min_size=1, max_size=400).filter(str.strip), st.integers(1, 30))
def test_char_chunks_cover_trimmed_text(text, size):
    passages = chunk_document(Document("D", "T", text, "zh"), ChunkPolicy(ChunkMode.CHARACTERS, size))
    assert "".join(p.body for p in passages) == text.strip()
    assert all(1 <= len(p.body) <= size for p in passages)
