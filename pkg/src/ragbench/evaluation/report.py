from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import ConfigError, SchemaError, UnsupportedLanguage
from . import metrics as m
from .judge import JudgeEndpoint, llmeval_batch
from .langid import MIN_CLR_LENGTH, LanguageDetector, default_detector

METRIC_IDS = ("match", "em", "precision", "recall", "f1", "rouge1", "rouge2", "rougeL", "char3", "llmeval", "clr")

METRIC_GROUPS = {
    "f1": ("precision", "recall", "f1"),
    "prf": ("precision", "recall", "f1"),
    "rouge": ("rouge1", "rouge2", "rougeL"),
}


def expand_metrics(names: Iterable[str]) -> list[str]:
    """Resolve group names (``f1``, ``rouge``) into metric ids, keeping first-seen order."""
    out: list[str] = []
    for name in names:
        name = name.strip()
        if not name:
            continue
        group = METRIC_GROUPS.get(name, (name,))
        for metric in group:
            if metric not in METRIC_IDS:
                raise ConfigError(f"unknown metric {metric!r}; choose from {', '.join(METRIC_IDS)}")
            if metric not in out:
                out.append(metric)
    return out


def surface_scores(references: Sequence[str], response: str, wanted: Sequence[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    if "match" in wanted:
        out["match"] = float(m.match(references, response))
    if "em" in wanted:
        out["em"] = float(m.exact_match(references, response))
    if {"precision", "recall", "f1"} & set(wanted):
        p, r, f = m.token_prf(references, response)
        out.update(precision=p, recall=r, f1=f)
    if "rouge1" in wanted:
        out["rouge1"] = m.rouge_n(references, response, 1)
    if "rouge2" in wanted:
        out["rouge2"] = m.rouge_n(references, response, 2)
    if "rougeL" in wanted:
        out["rougeL"] = m.rouge_l(references, response)
    if "char3" in wanted:
        out["char3"] = m.char3_recall(references, response)
    return {k: v for k, v in out.items() if k in wanted}


@dataclass(frozen=True)
class MetricScore:
    example_id: str
    metric_id: str
    value: float


@dataclass
class MetricReport:
    """Per-sample scores plus per-metric means over the scored samples."""

    run_id: str
    metrics: list[str]
    example_ids: list[str]
    values: dict[str, dict[str, float]] = field(default_factory=dict)
    excluded: dict[str, int] = field(default_factory=dict)
    judge_raw: dict[str, str] = field(default_factory=dict)
    stages: dict[str, str] = field(default_factory=dict)

    def add(self, example_id: str, metric_id: str, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{metric_id} value {value} for {example_id!r} outside [0, 1]")
        self.values.setdefault(metric_id, {})[example_id] = float(value)

    def exclude(self, metric_id: str, count: int = 1) -> None:
        self.excluded[metric_id] = self.excluded.get(metric_id, 0) + count

    def scores(self) -> list[MetricScore]:
        return [
            MetricScore(ex, metric, self.values[metric][ex])
            for ex in self.example_ids
            for metric in self.metrics
            if ex in self.values.get(metric, {})
        ]

    def per_example(self, metric_id: str) -> dict[str, float]:
        return dict(self.values.get(metric_id, {}))

    def count(self, metric_id: str) -> int:
        return len(self.values.get(metric_id, {}))

    def mean(self, metric_id: str) -> float:
        vals = self.values.get(metric_id, {})
        return math.fsum(vals.values()) / len(vals) if vals else math.nan

    def aggregates(self) -> dict[str, float]:
        return {metric: self.mean(metric) for metric in self.metrics}

    def summary(self) -> dict:
        return {
            "run_id": self.run_id,
            "samples": len(self.example_ids),
            "example_ids": list(self.example_ids),
            "metrics": list(self.metrics),
            "means": {k: (None if math.isnan(v) else v) for k, v in self.aggregates().items()},
            "counts": {metric: self.count(metric) for metric in self.metrics},
            "excluded": {metric: self.excluded.get(metric, 0) for metric in self.metrics},
            "stages": dict(self.stages),
        }

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"example_id": s.example_id, "metric_id": s.metric_id, "value": s.value}, ensure_ascii=False)
            for s in self.scores()
        ]
        lines.append(json.dumps({"summary": self.summary()}, ensure_ascii=False, sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "MetricReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read(), str(path))

    @classmethod
    def from_jsonl(cls, text: str, source: str = "<report>") -> "MetricReport":
        rows, summary = [], None
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "summary" in rec:
                summary = rec["summary"]
            elif {"example_id", "metric_id", "value"} <= rec.keys():
                rows.append(rec)
            else:
                raise SchemaError("unrecognised metric record", line=lineno)
        if summary is None:
            raise SchemaError(f"{source} has no summary record")
        report = cls(
            summary["run_id"],
            list(summary["metrics"]),
            list(summary["example_ids"]),
            excluded=dict(summary.get("excluded", {})),
            stages=dict(summary.get("stages", {})),
        )
        for r in rows:
            report.add(r["example_id"], r["metric_id"], r["value"])
        return report


def evaluate_records(
    examples: Sequence,
    records: Sequence,
    metrics: Sequence[str],
    *,
    judge: JudgeEndpoint | None = None,
    detector: LanguageDetector | None = None,
    language: str | None = None,
    run_id: str = "",
) -> MetricReport:
    """Score generation records against their examples.

    ``examples`` need ``example_id``, ``question``, ``references`` and
    ``language``; ``records`` need ``query_id``, ``response`` and ``failed``.
    Failed generations are excluded from every metric and counted.
    """
    metrics = expand_metrics(metrics)
    by_id = {ex.example_id: ex for ex in examples}
    report = MetricReport(run_id, metrics, [r.query_id for r in records])
    ok = []
    for rec in records:
        if rec.query_id not in by_id:
            raise SchemaError(f"generation record for unknown example {rec.query_id!r}")
        if rec.failed:
            for metric in metrics:
                report.exclude(metric)
            continue
        ok.append(rec)
        ex = by_id[rec.query_id]
        for metric, value in surface_scores(ex.references, rec.response, metrics).items():
            report.add(rec.query_id, metric, value)

    if "llmeval" in metrics:
        if judge is None:
            raise ConfigError("llmeval requested but no judge endpoint configured")
        verdicts = llmeval_batch(
            judge, [(r.query_id, by_id[r.query_id].question, by_id[r.query_id].references, r.response) for r in ok]
        )
        for rec, verdict in zip(ok, verdicts):
            if verdict is None:
                report.exclude("llmeval")
                continue
            report.add(rec.query_id, "llmeval", verdict.score)
            report.judge_raw[rec.query_id] = verdict.raw

    if "clr" in metrics:
        detector = detector or default_detector()
        for rec in ok:
            expected = language or by_id[rec.query_id].language
            if expected not in detector.supported_languages:
                raise UnsupportedLanguage(f"detector does not support {expected!r}")
            if len(rec.response) <= MIN_CLR_LENGTH:
                report.exclude("clr")
                continue
            report.add(rec.query_id, "clr", float(detector.detect(rec.response) == expected))
    return report
