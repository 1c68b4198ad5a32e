from .bm25 import Bm25Index, Bm25Params, analyze, build_bm25_from_texts, build_bm25_index, search_bm25
from .dense import DenseIndex, read_dense_vectors, search_dense, write_dense_vectors
from .oracle import oracle_context, recall_at_k
from .ranking import Producer, RankedList, RelevanceJudgment, parse_runs, read_runs, runs_to_jsonl, write_runs
from .sparse import SparseIndex, build_sparse_index, read_sparse_vectors, search_sparse, write_sparse_vectors

__all__ = [
    "Bm25Index",
    "Bm25Params",
    "DenseIndex",
    "Producer",
    "RankedList",
    "RelevanceJudgment",
    "SparseIndex",
    "analyze",
    "build_bm25_from_texts",
    "build_bm25_index",
    "build_sparse_index",
    "oracle_context",
    "parse_runs",
    "read_dense_vectors",
    "read_runs",
    "read_sparse_vectors",
    "recall_at_k",
    "runs_to_jsonl",
    "search_bm25",
    "search_dense",
    "search_sparse",
    "write_dense_vectors",
    "write_runs",
    "write_sparse_vectors",
]
