"""Content-addressed persistence for pipeline stages.

Layout::

    <root>/.lock
    <root>/<run_id>/manifest.json   {run_id, kind, config, parents, corpus, artifacts: {name: sha256}}
    <root>/<run_id>/<artifact>...
    <root>/<run_id>/timings.json    wall times; not checksummed, not part of the identity

A run directory is written under a temporary name and renamed into place,
so a crashed stage never leaves a half-written run behind. Garbage
collection is manual: delete directories.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from ..errors import CorruptStore, MissingRun, RagbenchError

MANIFEST = "manifest.json"
TIMINGS = "timings.json"


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def compute_run_id(kind: str, config: Mapping, parents: Sequence[str] = (), corpus_checksum: str | None = None) -> str:
    """Stable id of a stage: same kind, config, parents and corpus give the same id."""
    payload = {"kind": kind, "config": config, "parents": list(parents), "corpus": corpus_checksum}
    return f"{kind}-{hashlib.sha256(canonical_json(payload)).hexdigest()[:24]}"


class RunStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    run_id = staticmethod(compute_run_id)

    def path(self, run_id: str) -> Path:
        if not run_id or "/" in run_id or run_id.startswith("."):
            raise MissingRun(f"invalid run id {run_id!r}")
        return self.root / run_id

    def has(self, run_id: str) -> bool:
        return (self.path(run_id) / MANIFEST).is_file()

    def runs(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / MANIFEST).is_file())

    @contextmanager
    def lock(self) -> Iterator[None]:
        """Advisory exclusive lock; one experiment process owns the store at a time."""
        fh = open(self.root / ".lock", "a+")
        try:
            try:
                fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
            except BlockingIOError:
                raise RagbenchError(f"run store {self.root} is locked by another process") from None
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)
            fh.close()

    def save(
        self,
        run_id: str,
        kind: str,
        config: Mapping,
        parents: Sequence[str],
        artifacts: Mapping[str, bytes],
        *,
        corpus_checksum: str | None = None,
        timings: Mapping[str, float] | None = None,
    ) -> Path:
        final = self.path(run_id)
        if self.has(run_id):
            return final
        tmp = Path(tempfile.mkdtemp(prefix=f".{run_id}.", dir=self.root))
        try:
            sums = {}
            for name, data in sorted(artifacts.items()):
                if name in (MANIFEST, TIMINGS) or "/" in name:
                    raise ValueError(f"reserved or invalid artifact name {name!r}")
                (tmp / name).write_bytes(data)
                sums[name] = hashlib.sha256(data).hexdigest()
            manifest = {
                "run_id": run_id,
                "kind": kind,
                "config": config,
                "parents": list(parents),
                "corpus": corpus_checksum,
                "artifacts": sums,
            }
            (tmp / MANIFEST).write_bytes(json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=1).encode())
            if timings:
                (tmp / TIMINGS).write_text(json.dumps(dict(timings), sort_keys=True))
            if final.exists():  # leftover without a manifest
                shutil.rmtree(final)
            os.replace(tmp, final)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        return final

    def manifest(self, run_id: str) -> dict:
        try:
            return json.loads((self.path(run_id) / MANIFEST).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MissingRun(f"no run {run_id!r} in {self.root}") from None

    def load_artifact(self, run_id: str, name: str) -> bytes:
        manifest = self.manifest(run_id)
        if manifest.get("run_id") != run_id:
            raise CorruptStore(f"manifest in {run_id} names run {manifest.get('run_id')!r}")
        expected = manifest["artifacts"].get(name)
        if expected is None:
            raise MissingRun(f"run {run_id} has no artifact {name!r}")
        data = (self.path(run_id) / name).read_bytes()
        if hashlib.sha256(data).hexdigest() != expected:
            raise CorruptStore(f"artifact {name!r} of run {run_id} fails its checksum")
        return data

    def timings(self, run_id: str) -> dict:
        try:
            return json.loads((self.path(run_id) / TIMINGS).read_text())
        except FileNotFoundError:
            return {}
