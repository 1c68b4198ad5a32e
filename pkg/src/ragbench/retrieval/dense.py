"""Exact inner-product search over an in-memory embedding matrix.

Vector file layout: one JSON header line ``{"count": N, "dim": D}`` followed by
N rows, each a little-endian uint32 id byte-length, the UTF-8 id, and D
little-endian float32 values.
"""

from __future__ import annotations

import json
import os
import struct
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch, SchemaError
from .ranking import Producer, RankedList, lexicographic_rank, top_k

_U32 = struct.Struct("<I")


class DenseIndex:
    def __init__(self, passage_ids: Sequence[str], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(passage_ids):
            raise DimensionMismatch(f"expected a {len(passage_ids)} x D matrix, got shape {matrix.shape}")
        if not np.isfinite(matrix).all():
            raise ValueError("embedding matrix has non-finite values")
        self.passage_ids = list(passage_ids)
        self.matrix = matrix
        self._id_rank = lexicographic_rank(self.passage_ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def search(self, query: Sequence[float], k: int, query_id: str = "") -> RankedList:
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimensionMismatch(f"query has shape {q.shape}, index dimension is {self.dim}")
        if not np.isfinite(q).all():
            raise ValueError("query vector has non-finite values")
        scores = self.matrix @ q
        entries = top_k(np.arange(len(scores)), scores, self._id_rank, self.passage_ids, k)
        return RankedList(query_id, tuple(entries), Producer.DENSE)


def search_dense(index: DenseIndex, query_vec: Sequence[float], k: int, query_id: str = "") -> RankedList:
    return index.search(query_vec, k, query_id)


def write_dense_vectors(path: str | os.PathLike, ids: Sequence[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype="<f4")
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise DimensionMismatch(f"{len(ids)} ids for a matrix of shape {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(json.dumps({"count": len(ids), "dim": int(matrix.shape[1])}).encode() + b"\n")
        for pid, row in zip(ids, matrix):
            raw = pid.encode("utf-8")
            fh.write(_U32.pack(len(raw)) + raw + row.tobytes())


def read_dense_vectors(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    with open(path, "rb") as fh:
        try:
            header = json.loads(fh.readline())
            count, dim = int(header["count"]), int(header["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad dense vector header in {path}: {exc}", line=1) from None
        ids = []
        matrix = np.empty((count, dim), dtype=np.float32)
        for i in range(count):
            head = fh.read(_U32.size)
            if len(head) < _U32.size:
                raise SchemaError(f"{path}: expected {count} rows, found {i}")
            (n,) = _U32.unpack(head)
            ids.append(fh.read(n).decode("utf-8"))
            row = fh.read(4 * dim)
            if len(row) < 4 * dim:
                raise SchemaError(f"{path}: truncated row {i}")
            matrix[i] = np.frombuffer(row, dtype="<f4")
    return ids, matrix
