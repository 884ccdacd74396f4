"""Confusion matrices, per-class and aggregate metrics, report rendering.

The human-readable table mirrors the usual benchmark layout (one row per
model/test-set/system with precision, recall, F1, accuracy at two decimals)
and prints weighted aggregates; the CSV carries full precision together with
per-class rows and both macro and weighted aggregates.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .base import DataError
from .corpus import CLASS_ORDER, SentimentLabel

logger = logging.getLogger(__name__)

AGG_MACRO = "__macro__"
AGG_WEIGHTED = "__weighted__"
AGG_ACCURACY = "__accuracy__"

CSV_COLUMNS = (
    "model",
    "test_set",
    "system",
    "emoji_mode",
    "seed",
    "class",
    "precision",
    "recall",
    "f1",
    "support",
)


@dataclass
class ConfusionMatrix:
    """Rows are reference classes, columns are predicted classes."""

    counts: np.ndarray
    class_order: tuple[SentimentLabel, ...] = CLASS_ORDER

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(
    refs: Sequence[SentimentLabel],
    preds: Sequence[SentimentLabel],
    class_order: tuple[SentimentLabel, ...] = CLASS_ORDER,
) -> ConfusionMatrix:
    if len(refs) != len(preds):
        raise DataError(f"length mismatch: {len(refs)} references vs {len(preds)} predictions")
    index = {label: i for i, label in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    for ref, pred in zip(refs, preds):
        counts[index[ref], index[pred]] += 1
    return ConfusionMatrix(counts=counts, class_order=class_order)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvaluationReport:
    per_class: dict[SentimentLabel, ClassMetrics]
    macro: tuple[float, float, float]
    weighted: tuple[float, float, float]
    accuracy: float
    confusion: Optional[ConfusionMatrix]
    tags: dict[str, object] = field(default_factory=dict)


def metrics(cm: ConfusionMatrix, tags: Optional[dict[str, object]] = None) -> EvaluationReport:
    """Per-class precision/recall/F1 plus macro and support-weighted means.

    Empty rows or columns score zero (logged); weighted recall coincides with
    accuracy by construction.
    """
    total = cm.total
    if total == 0:
        raise DataError("cannot compute metrics for an empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    per_class: dict[SentimentLabel, ClassMetrics] = {}
    precisions, recalls, f1s, supports = [], [], [], []
    for i, label in enumerate(cm.class_order):
        tp = counts[i, i]
        col = counts[:, i].sum()
        row = counts[i, :].sum()
        if col == 0.0 or row == 0.0:
            logger.warning("class %s has an empty %s; its metric is reported as 0",
                           label.value, "prediction column" if col == 0.0 else "reference row")
        precision = float(tp / col) if col > 0.0 else 0.0
        recall = float(tp / row) if row > 0.0 else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0.0 else 0.0
        per_class[label] = ClassMetrics(precision, recall, f1, int(row))
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
        supports.append(row)
    supports_arr = np.asarray(supports)
    weight = supports_arr / supports_arr.sum()
    macro = (float(np.mean(precisions)), float(np.mean(recalls)), float(np.mean(f1s)))
    weighted = (
        float(np.dot(weight, precisions)),
        float(np.dot(weight, recalls)),
        float(np.dot(weight, f1s)),
    )
    accuracy = float(np.trace(counts) / total)
    return EvaluationReport(
        per_class=per_class,
        macro=macro,
        weighted=weighted,
        accuracy=accuracy,
        confusion=cm,
        tags=dict(tags or {}),
    )


def evaluate_predictions(
    refs: Sequence[SentimentLabel],
    preds: Sequence[SentimentLabel],
    tags: Optional[dict[str, object]] = None,
) -> EvaluationReport:
    return metrics(confusion(refs, preds), tags=tags)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_TABLE_HEADER = ("Model", "Test set", "System", "Precision", "Recall", "F1", "Accuracy")


def _tag(report: EvaluationReport, key: str) -> str:
    return str(report.tags.get(key, "-"))


def render_table(reports: Sequence[EvaluationReport]) -> str:
    """Aligned text table with weighted aggregates rounded to two decimals."""
    if not reports:
        raise DataError("nothing to render: empty report list")
    rows = [list(_TABLE_HEADER)]
    for rep in reports:
        p, r, f1 = rep.weighted
        rows.append(
            [
                _tag(rep, "model"),
                _tag(rep, "test_set"),
                _tag(rep, "system"),
                f"{p:.2f}",
                f"{r:.2f}",
                f"{f1:.2f}",
                f"{rep.accuracy:.2f}",
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(_TABLE_HEADER))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def render_csv(reports: Sequence[EvaluationReport], header: Optional[str] = None) -> str:
    """Machine-readable CSV: per-class rows plus macro/weighted/accuracy
    aggregate rows, full float precision."""
    if not reports:
        raise DataError("nothing to render: empty report list")
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        base = [_tag(rep, "model"), _tag(rep, "test_set"), _tag(rep, "system"),
                _tag(rep, "emoji_mode"), _tag(rep, "seed")]
        total = 0
        for label in (rep.confusion.class_order if rep.confusion else CLASS_ORDER):
            cm = rep.per_class[label]
            total += cm.support
            writer.writerow(base + [label.value, repr(float(cm.precision)), repr(float(cm.recall)),
                                    repr(float(cm.f1)), cm.support])
        mp, mr, mf = rep.macro
        wp, wr, wf = rep.weighted
        writer.writerow(base + [AGG_MACRO, repr(mp), repr(mr), repr(mf), total])
        writer.writerow(base + [AGG_WEIGHTED, repr(wp), repr(wr), repr(wf), total])
        acc = repr(rep.accuracy)
        writer.writerow(base + [AGG_ACCURACY, acc, acc, acc, total])
    return buf.getvalue()


def parse_csv(text: str) -> list[EvaluationReport]:
    """Rebuild reports from ``render_csv`` output (confusion matrices are not
    part of the CSV and come back as ``None``)."""
    label_by_value = {label.value: label for label in SentimentLabel}
    rows = [row for row in csv.reader(io.StringIO(text)) if row and not row[0].startswith("#")]
    if not rows or rows[0] != list(CSV_COLUMNS):
        raise DataError("unrecognized CSV header")
    reports: dict[tuple, EvaluationReport] = {}
    for row in rows[1:]:
        model, test_set, system, emoji_mode, seed, cls, p, r, f1, support = row
        key = (model, test_set, system, emoji_mode, seed)
        report = reports.get(key)
        if report is None:
            report = EvaluationReport(
                per_class={},
                macro=(0.0, 0.0, 0.0),
                weighted=(0.0, 0.0, 0.0),
                accuracy=0.0,
                confusion=None,
                tags={"model": model, "test_set": test_set, "system": system,
                      "emoji_mode": emoji_mode, "seed": seed},
            )
            reports[key] = report
        if cls == AGG_MACRO:
            report.macro = (float(p), float(r), float(f1))
        elif cls == AGG_WEIGHTED:
            report.weighted = (float(p), float(r), float(f1))
        elif cls == AGG_ACCURACY:
            report.accuracy = float(f1)
        elif cls in label_by_value:
            report.per_class[label_by_value[cls]] = ClassMetrics(float(p), float(r), float(f1), int(support))
        else:
            raise DataError(f"unknown class column value {cls!r}")
    return list(reports.values())


def render_sizes_csv(rows: Sequence[dict], header: Optional[str] = None) -> str:
    """Training-set-size versus F1 CSV (one row per model and system)."""
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "system", "total_size", "train_size", "f1"])
    for row in rows:
        writer.writerow([row["model"], row["system"], row["total_size"], row["train_size"], repr(float(row["f1"]))])
    return buf.getvalue()
