from .client import ChatEndpoint, DecodeConfig, GenerationRecord, chat_completion, generate, generate_batch
from .prompts import (
    CLOSED_BOOK_SYSTEM_PROMPT,
    RAG_SYSTEM_PROMPT,
    PromptBundle,
    PromptKind,
    Variant,
    apply_language_variant,
    build_closed_book_prompt,
    build_rag_prompt,
    default_translations,
)

__all__ = [
    "CLOSED_BOOK_SYSTEM_PROMPT",
    "RAG_SYSTEM_PROMPT",
    "ChatEndpoint",
    "DecodeConfig",
    "GenerationRecord",
    "PromptBundle",
    "PromptKind",
    "Variant",
    "apply_language_variant",
    "build_closed_book_prompt",
    "build_rag_prompt",
    "chat_completion",
    "default_translations",
    "generate",
    "generate_batch",
]
