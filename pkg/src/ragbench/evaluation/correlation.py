"""Kendall's tau-b and metric-versus-judge correlation tables."""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

from ..errors import DegenerateInput, InsufficientSamples, LengthMismatch


def _tied_pairs(values: Sequence) -> int:
    return sum(c * (c - 1) // 2 for c in Counter(values).values())


def _count_inversions(seq: list) -> int:
    """Strict inversions (i < j, seq[i] > seq[j]) via merge sort."""
    n = len(seq)
    if n < 2:
        return 0
    buf = list(seq)
    tmp = [None] * n
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid, hi = min(lo + width, n), min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[j] < buf[i]:
                    tmp[k] = buf[j]
                    swaps += mid - i
                    j += 1
                else:
                    tmp[k] = buf[i]
                    i += 1
                k += 1
            tmp[k : k + mid - i] = buf[i:mid]
            k += mid - i
            tmp[k : k + hi - j] = buf[j:hi]
            buf[lo:hi] = tmp[lo:hi]
        width *= 2
    return swaps


def kendall_tau(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Tie-corrected Kendall tau-b in O(n log n).

    Raises DegenerateInput when either sequence is constant (tau-b undefined).
    """
    if len(xs) != len(ys):
        raise LengthMismatch(f"sequences differ in length: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise InsufficientSamples("kendall_tau needs at least two pairs")
    pairs = sorted(zip(xs, ys))
    total = n * (n - 1) // 2
    tied_x = _tied_pairs(x for x, _ in pairs)
    tied_y = _tied_pairs(ys)
    tied_xy = _tied_pairs(pairs)
    # within runs of equal x the y values are sorted, so inversions count discordant pairs only
    discordant = _count_inversions([y for _, y in pairs])
    if tied_x == total or tied_y == total:
        raise DegenerateInput("kendall tau-b is undefined for a constant sequence")
    numerator = total - tied_x - tied_y + tied_xy - 2 * discordant
    return numerator / math.sqrt((total - tied_x) * (total - tied_y))


def correlate_metrics(
    scores: Mapping[str, Mapping[str, float | None]],
    judge_scores: Mapping[str, float | None],
) -> dict[str, float]:
    """Tau between each metric's per-example values and the judge's.

    ``scores`` maps metric id -> {example id -> value}. Examples missing on
    either side, or valued None/NaN, are dropped pairwise. Metrics whose
    vectors are constant map to NaN.
    """
    table = {}
    for metric, per_example in scores.items():
        xs, ys = [], []
        for example_id, value in per_example.items():
            judged = judge_scores.get(example_id)
            if _usable(value) and _usable(judged):
                xs.append(float(value))
                ys.append(float(judged))
        if len(xs) < 2:
            raise InsufficientSamples(f"metric {metric!r} has {len(xs)} aligned samples")
        try:
            table[metric] = kendall_tau(xs, ys)
        except DegenerateInput:
            table[metric] = math.nan
    return table


def correlate_datasets(
    datasets: Sequence[tuple[Mapping[str, Mapping[str, float | None]], Mapping[str, float | None]]],
    *,
    pooled: bool = False,
) -> dict[str, float]:
    """Combine several datasets: mean of per-dataset taus, or one tau over the pooled samples."""
    if pooled:
        merged: dict[str, dict[str, float | None]] = {}
        judge: dict[str, float | None] = {}
        for i, (scores, judged) in enumerate(datasets):
            for metric, per_example in scores.items():
                merged.setdefault(metric, {}).update({(i, ex): v for ex, v in per_example.items()})
            judge.update({(i, ex): v for ex, v in judged.items()})
        return correlate_metrics(merged, judge)
    per = [correlate_metrics(scores, judged) for scores, judged in datasets]
    metrics = list(dict.fromkeys(m for table in per for m in table))
    out = {}
    for metric in metrics:
        vals = [t[metric] for t in per if metric in t and not math.isnan(t[metric])]
        out[metric] = sum(vals) / len(vals) if vals else math.nan
    return out


def _usable(value) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))
