"""Experiment configuration (YAML) and pre-flight validation.

Example::

    name: nq-bm25-minilm
    dataset: data/nq.jsonl
    corpus: stores/kilt-100w
    mode: rag                  # rag | closed_book | oracle
    top_retrieve: 50
    top_context: 5
    retriever:
      kind: bm25               # bm25 | sparse | dense | oracle
      k1: 0.9
      b: 0.4
    reranker:
      model: minilm6           # label that enters the RunId
      url: http://localhost:8001
    generator:
      model: SOLAR-10.7B
      max_new_tokens: 128
      temperature: 0.0
    metrics: [match, em, f1, rouge, char3, llmeval]
    judge:
      model: SOLAR-10.7B
    language:
      code: en
      variant: basic
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..errors import ConfigError
from ..evaluation.report import expand_metrics
from ..generation.prompts import Variant

MODES = ("rag", "closed_book", "oracle")
RETRIEVERS = ("bm25", "sparse", "dense", "oracle")


@dataclass(frozen=True)
class RetrieverSpec:
    kind: str = "bm25"
    k1: float = 0.9
    b: float = 0.4
    passage_vectors: str | None = None
    query_vectors: str | None = None


@dataclass(frozen=True)
class RerankerSpec:
    model: str
    url: str | None = None
    batch_size: int = 64
    timeout: float = 60.0
    max_in_flight: int = 4


@dataclass(frozen=True)
class GeneratorSpec:
    model: str
    max_new_tokens: int = 128
    temperature: float = 0.0
    url: str | None = None
    timeout: float = 120.0
    max_in_flight: int = 8


@dataclass(frozen=True)
class JudgeSpec:
    model: str
    url: str | None = None
    timeout: float = 60.0
    max_in_flight: int = 8


@dataclass(frozen=True)
class LanguageSpec:
    code: str | None = None
    variant: str = Variant.BASIC.value
    translations: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    generator: GeneratorSpec
    corpus: str | None = None
    name: str = ""
    mode: str = "rag"
    retriever: RetrieverSpec = field(default_factory=RetrieverSpec)
    reranker: RerankerSpec | None = None
    top_retrieve: int = 50
    top_context: int = 5
    metrics: tuple[str, ...] = ("match", "em", "f1", "rouge", "char3")
    judge: JudgeSpec | None = None
    language: LanguageSpec = field(default_factory=LanguageSpec)
    workers: int = 1

    @property
    def metric_ids(self) -> list[str]:
        return expand_metrics(self.metrics)


def _build(cls, data: Any, where: str):
    if data is None:
        return None
    if isinstance(data, str) and cls in (RerankerSpec, GeneratorSpec, JudgeSpec):
        data = {"model": data}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where} must be a mapping")
    known = cls.__dataclass_fields__
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: Mapping, base_dir: str | os.PathLike | None = None) -> ExperimentConfig:
    """Build a config; relative paths are resolved against ``base_dir``."""
    if not isinstance(data, Mapping):
        raise ConfigError("configuration must be a mapping")
    data = dict(data)
    for key in ("dataset", "generator"):
        if key not in data:
            raise ConfigError(f"configuration lacks required key {key!r}")
    if base_dir is not None:
        base = Path(base_dir)
        for key in ("dataset", "corpus"):
            if data.get(key) and not os.path.isabs(data[key]):
                data[key] = str(base / data[key])
        for section, keys in (("retriever", ("passage_vectors", "query_vectors")), ("language", ("translations",))):
            if isinstance(data.get(section), Mapping):
                data[section] = dict(data[section])
                for key in keys:
                    value = data[section].get(key)
                    if value and not os.path.isabs(value):
                        data[section][key] = str(base / value)
    data["generator"] = _build(GeneratorSpec, data["generator"], "generator")
    data["retriever"] = _build(RetrieverSpec, data.get("retriever") or {}, "retriever")
    data["reranker"] = _build(RerankerSpec, data.get("reranker"), "reranker")
    data["judge"] = _build(JudgeSpec, data.get("judge"), "judge")
    data["language"] = _build(LanguageSpec, data.get("language") or {}, "language")
    if "metrics" in data:
        metrics = data["metrics"]
        data["metrics"] = tuple(metrics.split(",") if isinstance(metrics, str) else metrics)
    unknown = set(data) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    return ExperimentConfig(**data)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(raw or {}, Path(path).parent)


def validate_config(config: ExperimentConfig, env: Mapping[str, str] | None = None) -> list[str]:
    """Problems that would stop ``config`` from running; empty means runnable."""
    env = os.environ if env is None else env
    findings: list[str] = []
    if config.mode not in MODES:
        findings.append(f"mode must be one of {', '.join(MODES)}, got {config.mode!r}")
    if config.top_context < 1 or config.top_retrieve < 1:
        findings.append("top_context and top_retrieve must be positive")
    if config.top_context > config.top_retrieve:
        findings.append(f"top_context ({config.top_context}) exceeds top_retrieve ({config.top_retrieve})")
    if config.retriever.kind not in RETRIEVERS:
        findings.append(f"retriever.kind must be one of {', '.join(RETRIEVERS)}, got {config.retriever.kind!r}")
    try:
        config.metric_ids
    except ConfigError as exc:
        findings.append(str(exc))
    try:
        Variant(config.language.variant)
    except ValueError:
        findings.append(f"unknown language variant {config.language.variant!r}")

    if not os.path.isfile(config.dataset):
        findings.append(f"dataset file not found: {config.dataset}")
    elif config.mode == "oracle":
        from .datasets import load_dataset

        try:
            lacking = [ex.example_id for ex in load_dataset(config.dataset) if not ex.has_judgments]
        except Exception as exc:  # reported as a finding, never raised
            findings.append(f"dataset unreadable: {exc}")
        else:
            if lacking:
                findings.append(f"oracle mode needs relevance judgments; {len(lacking)} examples have none (e.g. {lacking[0]})")

    needs_corpus = config.mode in ("rag", "oracle")
    if needs_corpus:
        if not config.corpus:
            findings.append(f"mode {config.mode} needs a corpus store")
        elif not os.path.isfile(os.path.join(config.corpus, "header.json")):
            findings.append(f"corpus store not found: {config.corpus}")
    if config.mode == "rag":
        if config.retriever.kind in ("sparse", "dense"):
            for key in ("passage_vectors", "query_vectors"):
                path = getattr(config.retriever, key)
                if not path or not os.path.isfile(path):
                    findings.append(f"retriever.{key} file missing for {config.retriever.kind} retrieval")
        if config.retriever.kind == "oracle":
            findings.append("use mode: oracle instead of retriever.kind: oracle")
        if config.reranker and not (config.reranker.url or env.get("RAGBENCH_RERANKER_URL")):
            findings.append("reranker configured but no URL (reranker.url or RAGBENCH_RERANKER_URL)")
    if not (config.generator.url or env.get("RAGBENCH_LLM_URL")):
        findings.append("no generator endpoint (generator.url or RAGBENCH_LLM_URL)")
    if "llmeval" in _metric_ids_or_empty(config):
        if config.judge is None:
            findings.append("llmeval requested but no judge section configured")
        elif not (config.judge.url or env.get("RAGBENCH_JUDGE_URL")):
            findings.append("no judge endpoint (judge.url or RAGBENCH_JUDGE_URL)")
    return findings


def _metric_ids_or_empty(config: ExperimentConfig) -> list[str]:
    try:
        return config.metric_ids
    except ConfigError:
        return []
