"""Multi-annotator judgments: aggregation and nominal Krippendorff's alpha.

Annotators first decide whether a unit is subjective, then pick one of five
sentiment values for subjective units. Reliability is measured with
Krippendorff's alpha over a caller-chosen projection of the labels onto
nominal values.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Hashable, Mapping, Optional, Sequence

import numpy as np

from .base import DataError
from .corpus import CLASS_ORDER, Dataset, Document, SentimentLabel

logger = logging.getLogger(__name__)


class Subjectivity(Enum):
    SUBJECTIVE = "subjective"
    OBJECTIVE = "objective"


class Sentiment(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    MIXED = "mixed"
    NEUTRAL = "neutral"
    NONE = "none"


@dataclass(frozen=True)
class AnnotationLabel:
    """Subjectivity gate plus, for subjective units, a five-way sentiment."""

    subjectivity: Subjectivity
    sentiment: Optional[Sentiment] = None

    def __post_init__(self) -> None:
        if self.subjectivity is Subjectivity.OBJECTIVE and self.sentiment is not None:
            raise DataError("objective labels carry no sentiment")
        if self.subjectivity is Subjectivity.SUBJECTIVE and self.sentiment is None:
            raise DataError("subjective labels require a sentiment")


OBJECTIVE = AnnotationLabel(Subjectivity.OBJECTIVE)


def subjective(sentiment: Sentiment) -> AnnotationLabel:
    return AnnotationLabel(Subjectivity.SUBJECTIVE, sentiment)


@dataclass(frozen=True)
class AnnotationRecord:
    unit_id: str
    annotator_id: str
    label: AnnotationLabel


# ---------------------------------------------------------------------------
# Label projections (the nominal value a reliability run is computed over)
# ---------------------------------------------------------------------------

Projection = Callable[[AnnotationLabel], Optional[Hashable]]


def value_subjectivity(label: AnnotationLabel) -> str:
    return label.subjectivity.value


def value_sentiment5(label: AnnotationLabel) -> Optional[str]:
    """Five-way sentiment; objective records are excluded from pairing."""
    return None if label.sentiment is None else label.sentiment.value


def value_classification3(label: AnnotationLabel) -> Optional[str]:
    """Three-way classification value; everything else is excluded."""
    if label.sentiment in (Sentiment.POSITIVE, Sentiment.NEGATIVE, Sentiment.NEUTRAL):
        return label.sentiment.value
    return None


PROJECTIONS: dict[str, Projection] = {
    "sentiment-5": value_sentiment5,
    "classification-3": value_classification3,
    "subjectivity": value_subjectivity,
}


# ---------------------------------------------------------------------------
# Krippendorff's alpha (nominal)
# ---------------------------------------------------------------------------


@dataclass
class AgreementResult:
    """Alpha with the coincidence matrix it was computed from.

    ``alpha`` is ``None`` when expected disagreement is zero (only one value
    occurs anywhere), which is reported explicitly rather than coerced to 1.
    """

    alpha: Optional[float]
    observed_disagreement: float
    expected_disagreement: float
    coincidences: np.ndarray
    values: tuple[Hashable, ...]
    n_total: float

    @property
    def defined(self) -> bool:
        return self.alpha is not None


def krippendorff_alpha(
    records: Sequence[AnnotationRecord], value_of: Projection
) -> AgreementResult:
    """Nominal Krippendorff's alpha over the projected label values.

    Only units with at least two codable annotations contribute; each unit's
    ordered value pairs enter the coincidence matrix weighted by
    ``1 / (m_u - 1)``.
    """
    units: dict[str, list[Hashable]] = {}
    seen_pairs: set[tuple[str, str]] = set()
    for rec in records:
        key = (rec.unit_id, rec.annotator_id)
        if key in seen_pairs:
            raise DataError(f"duplicate annotation for unit {rec.unit_id!r} by {rec.annotator_id!r}")
        seen_pairs.add(key)
        value = value_of(rec.label)
        if value is not None:
            units.setdefault(rec.unit_id, []).append(value)
    pairable = {u: vals for u, vals in units.items() if len(vals) >= 2}
    if not pairable:
        raise DataError("no unit has two or more codable annotations")

    values = tuple(sorted({v for vals in pairable.values() for v in vals}, key=str))
    index = {v: i for i, v in enumerate(values)}
    V = len(values)
    o = np.zeros((V, V), dtype=float)
    for vals in pairable.values():
        m = len(vals)
        counts = Counter(vals)
        for c, n_c in counts.items():
            for k, n_k in counts.items():
                pairs = n_c * (n_k - (1 if c == k else 0))
                if pairs:
                    o[index[c], index[k]] += pairs / (m - 1)

    n_c = o.sum(axis=1)
    n = float(n_c.sum())
    observed_sum = float(o.sum() - np.trace(o))
    expected_pairs = float(n * n - np.dot(n_c, n_c))
    observed = observed_sum / n
    expected = expected_pairs / (n * (n - 1))
    if expected_pairs == 0.0:
        return AgreementResult(
            alpha=None,
            observed_disagreement=observed,
            expected_disagreement=0.0,
            coincidences=o,
            values=values,
            n_total=n,
        )
    alpha = 1.0 - (n - 1.0) * observed_sum / expected_pairs
    return AgreementResult(
        alpha=alpha,
        observed_disagreement=observed,
        expected_disagreement=expected,
        coincidences=o,
        values=values,
        n_total=n,
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def records_by_unit(records: Sequence[AnnotationRecord]) -> dict[str, list[AnnotationRecord]]:
    per_unit: dict[str, list[AnnotationRecord]] = {}
    seen: set[tuple[str, str]] = set()
    for rec in records:
        key = (rec.unit_id, rec.annotator_id)
        if key in seen:
            raise DataError(f"duplicate annotation for unit {rec.unit_id!r} by {rec.annotator_id!r}")
        seen.add(key)
        per_unit.setdefault(rec.unit_id, []).append(rec)
    return per_unit


def aggregate(
    per_unit: Mapping[str, Sequence[AnnotationRecord]],
    tie_policy: Sentiment = Sentiment.MIXED,
    overrides: Optional[Mapping[str, AnnotationLabel]] = None,
) -> dict[str, AnnotationLabel]:
    """Resolve per-unit annotations to one final label each.

    Unanimous labels pass through. A subjective/objective conflict becomes
    subjective+mixed; a sentiment conflict between subjective labels gets the
    ``tie_policy`` sentiment. ``overrides`` (manual rectification) wins over
    everything.
    """
    out: dict[str, AnnotationLabel] = {}
    for unit_id, recs in per_unit.items():
        if overrides and unit_id in overrides:
            out[unit_id] = overrides[unit_id]
            continue
        if not recs:
            raise DataError(f"unit {unit_id!r} has no annotations")
        labels = {rec.label for rec in recs}
        if len(labels) == 1:
            out[unit_id] = next(iter(labels))
            continue
        subjectivities = {label.subjectivity for label in labels}
        if len(subjectivities) > 1:
            out[unit_id] = subjective(Sentiment.MIXED)
        else:
            out[unit_id] = subjective(tie_policy)
    return out


_TO_CLASSIFICATION = {
    Sentiment.POSITIVE: SentimentLabel.POSITIVE,
    Sentiment.NEGATIVE: SentimentLabel.NEGATIVE,
    Sentiment.NEUTRAL: SentimentLabel.NEUTRAL,
}


def to_classification_dataset(
    aggregated: Mapping[str, AnnotationLabel], documents: Dataset
) -> Dataset:
    """Keep only positive/negative/neutral units and attach their labels.

    Mixed, none, and objective units are dropped; the heavy skew of those
    labels is why classification is restricted to three classes.
    """
    kept: list[Document] = []
    for doc in documents:
        if doc.id not in aggregated:
            raise DataError(f"no aggregated annotation for document {doc.id!r}")
        final = aggregated[doc.id]
        label = _TO_CLASSIFICATION.get(final.sentiment) if final.sentiment else None
        if label is None:
            continue
        copy = Document(
            id=doc.id,
            raw_text=doc.raw_text,
            normalized_text=doc.normalized_text,
            label=label,
            source=doc.source,
            has_emoji=doc.has_emoji,
            annotations=list(doc.annotations),
            meta=dict(doc.meta),
        )
        kept.append(copy)
    if not kept:
        logger.warning("no document survived the three-class filter; dataset is empty")
    return Dataset(kept)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _label_from_strings(subj: str, sent: Optional[str], where: str) -> AnnotationLabel:
    try:
        subjectivity = Subjectivity(subj)
    except ValueError:
        raise DataError(f"{where}: unknown subjectivity {subj!r}") from None
    sentiment: Optional[Sentiment] = None
    if sent is not None:
        try:
            sentiment = Sentiment(sent)
        except ValueError:
            raise DataError(f"{where}: unknown sentiment {sent!r}") from None
    try:
        return AnnotationLabel(subjectivity, sentiment)
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from None


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Annotation JSONL: one record per line with unit_id, annotator_id,
    subjectivity, and (for subjective units) sentiment."""
    path = Path(path)
    records: list[AnnotationRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            where = f"{path.name}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: malformed JSON ({exc.msg})") from None
            for key in ("unit_id", "annotator_id", "subjectivity"):
                if key not in obj:
                    raise DataError(f"{where}: missing required key {key!r}")
            label = _label_from_strings(obj["subjectivity"], obj.get("sentiment"), where)
            records.append(
                AnnotationRecord(
                    unit_id=str(obj["unit_id"]),
                    annotator_id=str(obj["annotator_id"]),
                    label=label,
                )
            )
    return records


def save_annotations(records: Sequence[AnnotationRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj: dict = {
                "unit_id": rec.unit_id,
                "annotator_id": rec.annotator_id,
                "subjectivity": rec.label.subjectivity.value,
            }
            if rec.label.sentiment is not None:
                obj["sentiment"] = rec.label.sentiment.value
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_overrides(path: str | Path) -> dict[str, AnnotationLabel]:
    """Override JSONL mapping unit_id to a final label: ``{"unit_id": ...,
    "final": "positive" | ... | "objective"}``."""
    path = Path(path)
    overrides: dict[str, AnnotationLabel] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            where = f"{path.name}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: malformed JSON ({exc.msg})") from None
            if "unit_id" not in obj or "final" not in obj:
                raise DataError(f"{where}: override lines need 'unit_id' and 'final'")
            final = obj["final"]
            if final == "objective":
                label = OBJECTIVE
            else:
                label = _label_from_strings("subjective", final, where)
            overrides[str(obj["unit_id"])] = label
    return overrides
