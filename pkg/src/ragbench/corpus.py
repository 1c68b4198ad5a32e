"""Document chunking and the on-disk passage store.

A store is a directory holding three files:

``passages.bin``
    length-prefixed records (little-endian uint32 byte count followed by a
    compact, key-sorted JSON object) in (document order, chunk index) order.
``offsets.jsonl``
    one ``[passage_id, doc_id, offset, length]`` row per record.
``header.json``
    format version, chunk policy, counts and a SHA-256 over the two files
    above.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import CorruptStore, DuplicateDocId, EmptyDocument, IoFailure, SchemaError, UnknownPassageId

FORMAT_NAME = "ragbench-passages"
FORMAT_VERSION = 1
PASSAGES_FILE = "passages.bin"
OFFSETS_FILE = "offsets.jsonl"
HEADER_FILE = "header.json"

_LEN = struct.Struct("<I")

# languages written without whitespace between words
CHARACTER_LANGUAGES = frozenset({"zh", "ja", "th"})


class ChunkMode(str, enum.Enum):
    WORDS = "words"
    CHARACTERS = "chars"


@dataclass(frozen=True)
class ChunkPolicy:
    mode: ChunkMode = ChunkMode.WORDS
    size: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", ChunkMode(self.mode))
        if not isinstance(self.size, int) or self.size < 1:
            raise ValueError(f"chunk size must be a positive integer, got {self.size!r}")

    @classmethod
    def for_language(cls, language: str, size: int = 100) -> "ChunkPolicy":
        primary = language.split("-")[0].lower()
        mode = ChunkMode.CHARACTERS if primary in CHARACTER_LANGUAGES else ChunkMode.WORDS
        return cls(mode, size)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "size": self.size}


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    text: str
    language: str = "en"


@dataclass(frozen=True)
class Passage:
    passage_id: str
    doc_id: str
    chunk_index: int
    title: str
    body: str
    language: str = "en"

    @property
    def prompt_text(self) -> str:
        """Title and body joined by one space; this is what gets indexed and prompted."""
        return f"{self.title} {self.body}" if self.title else self.body

    def to_bytes(self) -> bytes:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Passage":
        return cls(**json.loads(raw.decode("utf-8")))


def passage_id_for(doc_id: str, chunk_index: int) -> str:
    return f"{doc_id}::{chunk_index}"


def doc_id_of(passage_id: str) -> str:
    return passage_id.rsplit("::", 1)[0]


def chunk_units(text: str, mode: ChunkMode) -> list[str]:
    """The unit sequence a policy counts: words, or scalar values of the trimmed text."""
    if ChunkMode(mode) is ChunkMode.WORDS:
        return text.split()
    return list(text.strip())


def chunk_document(doc: Document, policy: ChunkPolicy = ChunkPolicy()) -> list[Passage]:
    if not doc.text.strip():
        raise EmptyDocument(f"document {doc.doc_id!r} has no text")
    units = chunk_units(doc.text, policy.mode)
    joiner = " " if policy.mode is ChunkMode.WORDS else ""
    passages = []
    for index, start in enumerate(range(0, len(units), policy.size)):
        body = joiner.join(units[start : start + policy.size])
        passages.append(
            Passage(
                passage_id=passage_id_for(doc.doc_id, index),
                doc_id=doc.doc_id,
                chunk_index=index,
                title=doc.title,
                body=body,
                language=doc.language,
            )
        )
    return passages


def document_from_record(record: Mapping, *, line: int | None = None, default_language: str = "en") -> Document:
    try:
        return Document(
            doc_id=str(record["id"]),
            title=str(record.get("title", "")),
            text=str(record["text"]),
            language=str(record.get("lang") or default_language),
        )
    except KeyError as exc:
        raise SchemaError(f"collection record missing field {exc.args[0]!r}", line=line) from None


def read_collection(path: str | os.PathLike, default_language: str = "en") -> Iterator[Document]:
    """Stream documents from a line-delimited ``{id, title, text, lang?}`` file."""
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
    with handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from None
            yield document_from_record(record, line=lineno, default_language=default_language)


def write_collection(path: str | os.PathLike, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {"id": doc.doc_id, "title": doc.title, "text": doc.text, "lang": doc.language}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class IngestSummary:
    docs: int
    passages: int
    checksum: str


def _chunk_batch(args: tuple[list[Document], ChunkPolicy]) -> list[tuple[str, str, bytes]]:
    docs, policy = args
    return [(p.passage_id, p.doc_id, p.to_bytes()) for doc in docs for p in chunk_document(doc, policy)]


def _batches(docs: Iterable[Document], size: int) -> Iterator[list[Document]]:
    it = iter(docs)
    while batch := list(islice(it, size)):
        yield batch


def ingest_collection(
    source: Iterable[Document],
    policy: ChunkPolicy,
    store_path: str | os.PathLike,
    *,
    workers: int = 1,
    batch_size: int = 256,
) -> IngestSummary:
    """Chunk every document of ``source`` and write a passage store at ``store_path``.

    With ``workers > 1`` chunking fans out to a process pool; records are
    still written in input order, so the store bytes do not depend on it.
    """
    out = Path(store_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(out, exc.strerror or str(exc)) from exc

    seen: set[str] = set()

    def checked(docs: Iterable[Document]) -> Iterator[list[Document]]:
        for batch in _batches(docs, batch_size):
            for doc in batch:
                if doc.doc_id in seen:
                    raise DuplicateDocId(doc.doc_id)
                seen.add(doc.doc_id)
            yield batch

    data_tmp = out / (PASSAGES_FILE + ".tmp")
    offsets_tmp = out / (OFFSETS_FILE + ".tmp")
    digest = hashlib.sha256()
    n_passages = 0
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        with open(data_tmp, "wb") as data, open(offsets_tmp, "w", encoding="utf-8") as offsets:
            jobs = ((batch, policy) for batch in checked(source))
            results = executor.map(_chunk_batch, jobs) if executor else map(_chunk_batch, jobs)
            offset = 0
            index_lines = []
            for batch in results:
                for pid, doc_id, raw in batch:
                    blob = _LEN.pack(len(raw)) + raw
                    data.write(blob)
                    digest.update(blob)
                    index_lines.append(json.dumps([pid, doc_id, offset, len(blob)], ensure_ascii=False) + "\n")
                    offset += len(blob)
                    n_passages += 1
                offsets.writelines(index_lines)
                index_lines.clear()
    except BaseException as exc:
        data_tmp.unlink(missing_ok=True)
        offsets_tmp.unlink(missing_ok=True)
        if isinstance(exc, OSError):
            raise IoFailure(getattr(exc, "filename", None) or out, exc.strerror or str(exc)) from exc
        raise
    finally:
        if executor:
            executor.shutdown(cancel_futures=True)

    digest.update(offsets_tmp.read_bytes())
    checksum = digest.hexdigest()
    os.replace(data_tmp, out / PASSAGES_FILE)
    os.replace(offsets_tmp, out / OFFSETS_FILE)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "policy": policy.to_dict(),
        "docs": len(seen),
        "passages": n_passages,
        "checksum": checksum,
    }
    (out / HEADER_FILE).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return IngestSummary(docs=len(seen), passages=n_passages, checksum=checksum)


class CorpusStore:
    """Read-only view of a passage store. Safe to share between threads."""

    def __init__(self, path: Path, header: dict, entries: dict[str, tuple[int, int]], doc_passages: dict[str, list[str]]):
        self.path = path
        self.header = header
        self._entries = entries
        self._doc_passages = doc_passages
        self._order = list(entries)
        self._fd = os.open(path / PASSAGES_FILE, os.O_RDONLY)

    @property
    def checksum(self) -> str:
        return self.header["checksum"]

    @property
    def policy(self) -> ChunkPolicy:
        return ChunkPolicy(**self.header["policy"])

    @property
    def doc_count(self) -> int:
        return len(self._doc_passages)

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, passage_id: object) -> bool:
        return passage_id in self._entries

    def __iter__(self) -> Iterator[Passage]:
        for pid in self._order:
            yield self.get_passage(pid)

    def __del__(self) -> None:
        self.close()

    def __enter__(self) -> "CorpusStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        fd = getattr(self, "_fd", None)
        if fd is not None:
            os.close(fd)
            self._fd = None

    def passage_ids(self) -> list[str]:
        return list(self._order)

    def doc_ids(self) -> list[str]:
        return list(self._doc_passages)

    def passages_of(self, doc_id: str) -> list[Passage]:
        return [self.get_passage(pid) for pid in self._doc_passages.get(doc_id, ())]

    def read_raw(self, passage_id: str) -> bytes:
        try:
            offset, length = self._entries[passage_id]
        except KeyError:
            raise UnknownPassageId(f"unknown passage id {passage_id!r}") from None
        blob = os.pread(self._fd, length, offset)
        (size,) = _LEN.unpack_from(blob)
        if size != length - _LEN.size:
            raise CorruptStore(f"record length mismatch for {passage_id!r} in {self.path}")
        return blob[_LEN.size :]

    def get_passage(self, passage_id: str) -> Passage:
        return Passage.from_bytes(self.read_raw(passage_id))

    def summary(self) -> IngestSummary:
        return IngestSummary(docs=self.doc_count, passages=len(self), checksum=self.checksum)


def open_store(path: str | os.PathLike, *, verify: bool = True) -> CorpusStore:
    root = Path(path)
    try:
        header = json.loads((root / HEADER_FILE).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise IoFailure(exc.filename, "no passage store here") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptStore(f"unreadable store header in {root}: {exc}") from exc
    if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
        raise CorruptStore(f"unsupported store format in {root}: {header.get('format')} v{header.get('version')}")

    try:
        offsets_raw = (root / OFFSETS_FILE).read_bytes()
        if verify:
            digest = hashlib.sha256()
            with open(root / PASSAGES_FILE, "rb") as fh:
                while chunk := fh.read(1 << 20):
                    digest.update(chunk)
            digest.update(offsets_raw)
            if digest.hexdigest() != header.get("checksum"):
                raise CorruptStore(f"checksum mismatch in {root}")
    except OSError as exc:
        raise IoFailure(getattr(exc, "filename", None) or root, exc.strerror or str(exc)) from exc

    entries: dict[str, tuple[int, int]] = {}
    doc_passages: dict[str, list[str]] = {}
    for line in offsets_raw.decode("utf-8").splitlines():
        pid, doc_id, offset, length = json.loads(line)
        entries[pid] = (offset, length)
        doc_passages.setdefault(doc_id, []).append(pid)
    if len(entries) != header.get("passages"):
        raise CorruptStore(f"passage count mismatch in {root}")
    return CorpusStore(root, header, entries, doc_passages)


def get_passage(store: CorpusStore, passage_id: str) -> Passage:
    return store.get_passage(passage_id)
