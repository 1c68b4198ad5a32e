from .mocks import (
    MockBehavior,
    MockReply,
    MockService,
    body_hash,
    constant,
    context_too_long,
    echo,
    extractive,
    score_by_index,
    score_by_overlap,
    score_from_mapping,
    start_mock_chat_service,
    start_mock_rerank_service,
)
from .oracles import brute_force_bm25, brute_force_bm25_topk, brute_force_tau, brute_force_topk_dot

__all__ = [
    "MockBehavior",
    "MockReply",
    "MockService",
    "body_hash",
    "brute_force_bm25",
    "brute_force_bm25_topk",
    "brute_force_tau",
    "brute_force_topk_dot",
    "constant",
    "context_too_long",
    "echo",
    "extractive",
    "score_by_index",
    "score_by_overlap",
    "score_from_mapping",
    "start_mock_chat_service",
    "start_mock_rerank_service",
]
