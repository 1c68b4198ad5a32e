"""Result tables: one row per evaluated run, one column per metric.

Rows with context (rag, oracle) get a gain column per metric: their mean
minus the mean of the closed-book run in the same table that used the same
dataset and generator model.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .pipeline import load_report
from .runstore import RunStore

MISSING = "n/a"


@dataclass(frozen=True)
class TableRow:
    run_id: str
    label: str
    dataset: str
    generator: str
    mode: str
    values: dict[str, float | None]
    gains: dict[str, float | None] = field(default_factory=dict)


@dataclass(frozen=True)
class ReportTable:
    metrics: list[str]
    rows: list[TableRow]
    with_gains: bool

    @property
    def columns(self) -> list[str]:
        cols = ["run", "dataset", "setting", *self.metrics]
        if self.with_gains:
            cols += [f"{m}_gain" for m in self.metrics]
        return cols

    def _cells(self, fmt: str) -> list[list[str]]:
        def cell(v: float | None) -> str:
            return MISSING if v is None else format(v, fmt)

        out = []
        for row in self.rows:
            cells = [row.run_id, row.dataset, row.label] + [cell(row.values.get(m)) for m in self.metrics]
            if self.with_gains:
                cells += [cell(row.gains.get(m)) for m in self.metrics]
            out.append(cells)
        return out

    def to_text(self) -> str:
        header = self.columns
        body = self._cells(".4f")
        widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
        lines = []
        for r in [header, *body]:
            parts = [r[i].ljust(widths[i]) if i < 3 else r[i].rjust(widths[i]) for i in range(len(r))]
            lines.append("  ".join(parts).rstrip())
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self._cells(".6f"))
        return buf.getvalue()

    def value(self, run_id: str, metric: str) -> float | None:
        for row in self.rows:
            if row.run_id == run_id:
                return row.values.get(metric)
        raise KeyError(run_id)


def _describe(runs: RunStore, stages: Mapping[str, str]) -> tuple[str, str, str, str]:
    gen = runs.manifest(stages["generate"])["config"]
    mode = gen["mode"]
    model = gen["decode"]["model_id"]
    parts = [mode]
    if mode == "rag" and "retrieve" in stages:
        parts.append(runs.manifest(stages["retrieve"])["config"]["retriever"])
    if "rerank" in stages:
        parts.append(runs.manifest(stages["rerank"])["config"]["reranker"])
    if mode != "closed_book":
        parts.append(f"top{gen['top_context']}")
    if gen.get("language"):
        parts.append(f"{gen['language']}:{gen['variant']}")
    parts.append(model)
    return "/".join(parts), gen["dataset"][:12], model, mode


def build_table(
    runs: RunStore,
    run_ids: Sequence[str],
    metrics: Sequence[str] | None = None,
    *,
    gains: bool = True,
    labels: Mapping[str, str] | None = None,
) -> ReportTable:
    """Table over evaluation runs; raises MissingRun for unknown or unevaluated ids."""
    reports = [load_report(runs, rid) for rid in run_ids]
    if metrics is None:
        metrics = list(dict.fromkeys(m for rep in reports for m in rep.metrics))
    rows = []
    for rid, rep in zip(run_ids, reports):
        label, dataset, model, mode = _describe(runs, rep.stages)
        if labels and rid in labels:
            label = labels[rid]
        values = {}
        for m in metrics:
            mean = rep.mean(m) if m in rep.metrics else math.nan
            values[m] = None if math.isnan(mean) else mean
        rows.append(TableRow(rid, label, dataset, model, mode, values))

    baselines = {(r.dataset, r.generator): r for r in rows if r.mode == "closed_book"}
    with_gains = gains and any(r.mode != "closed_book" and (r.dataset, r.generator) in baselines for r in rows)
    if with_gains:
        final = []
        for r in rows:
            base = baselines.get((r.dataset, r.generator)) if r.mode != "closed_book" else None
            diff = {}
            for m in metrics:
                a, b = r.values.get(m), base.values.get(m) if base else None
                diff[m] = None if a is None or b is None else a - b
            final.append(TableRow(r.run_id, r.label, r.dataset, r.generator, r.mode, r.values, diff))
        rows = final
    return ReportTable(list(metrics), rows, with_gains)


def report(runs: RunStore, run_ids: Sequence[str], metrics: Sequence[str] | None = None, **kwargs) -> tuple[str, str]:
    """Plain-text and CSV renderings of :func:`build_table`."""
    table = build_table(runs, run_ids, metrics, **kwargs)
    return table.to_text(), table.to_csv()
