"""Corpus handling for Central Kurdish (Sorani) text.

Covers orthography normalization for the Perso-Arabic script, a
script-based language filter, emoji detection/stripping, labeled document
collections, stratified splitting, and JSONL persistence.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .base import DataError

LanguagePredicate = Callable[[str], bool]


class SentimentLabel(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    def __lt__(self, other: "SentimentLabel") -> bool:
        order = list(SentimentLabel)
        return order.index(self) < order.index(other)


#: Canonical class order used for deterministic tie-breaking everywhere.
CLASS_ORDER: tuple[SentimentLabel, ...] = (
    SentimentLabel.POSITIVE,
    SentimentLabel.NEGATIVE,
    SentimentLabel.NEUTRAL,
)


class Source(Enum):
    GOLD = "gold"
    SILVER = "silver"


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

# Letter unification for Sorani orthography. Arabic kaf and the yeh variants
# are folded onto their Kurdish forms; tatweel is dropped; Arabic-Indic and
# extended Arabic-Indic digits become ASCII. Final heh is deliberately left
# untouched: disambiguating it needs morphological context.
_CHAR_MAP: dict[int, Optional[str]] = {
    0x0643: "ک",  # ك -> ک
    0x064A: "ی",  # ي -> ی
    0x0649: "ی",  # ى -> ی
    0x0640: None,  # tatweel removed
}
for _i in range(10):
    _CHAR_MAP[0x0660 + _i] = chr(ord("0") + _i)
    _CHAR_MAP[0x06F0 + _i] = chr(ord("0") + _i)


def normalize(text: str) -> str:
    """Normalize raw text: NFC, letter unification, digit folding,
    whitespace collapse. Idempotent."""
    text = unicodedata.normalize("NFC", text)
    text = text.translate(_CHAR_MAP)
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# Script / language filtering
# ---------------------------------------------------------------------------

# Letters that exist in Central Kurdish orthography but not in standard
# Arabic; any one of them is strong evidence the text is Kurdish.
DISTINCTIVE_LETTERS = frozenset("ڕڵێۆەڤگچپژ")

_ARABIC_BLOCKS = (
    (0x0600, 0x06FF),
    (0x0750, 0x077F),
    (0x08A0, 0x08FF),
    (0xFB50, 0xFDFF),
    (0xFE70, 0xFEFF),
)


def _is_arabic_script(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _ARABIC_BLOCKS)


def script_filter(text: str) -> bool:
    """True when the text looks like Central Kurdish in Perso-Arabic script.

    Requires at least half of the letter characters to be Arabic-script and
    at least one distinctive Kurdish letter to occur.
    """
    letters = [ch for ch in text if unicodedata.category(ch).startswith("L")]
    if not letters:
        return False
    arabic = sum(1 for ch in letters if _is_arabic_script(ch))
    if 2 * arabic < len(letters):
        return False
    return any(ch in DISTINCTIVE_LETTERS for ch in text)


def language_id(predicate: LanguagePredicate, text: str) -> bool:
    """Verdict of a pluggable language identifier; ``script_filter`` is the
    built-in default predicate."""
    return bool(predicate(text))


# ---------------------------------------------------------------------------
# Emoji
# ---------------------------------------------------------------------------

_EMOJI_RANGES = (
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x2600, 0x27BF),
    (0x1FA70, 0x1FAFF),
)
_VS16 = "️"
_ZWJ = "‍"


def _is_emoji_base(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def detect_emoji(text: str) -> list[tuple[int, str]]:
    """All maximal emoji sequences as ``(offset, sequence)`` pairs.

    A sequence is an emoji base plus trailing variation selectors, extended
    through zero-width joiners onto further bases. Adjacent bases without a
    joiner are separate hits.
    """
    hits: list[tuple[int, str]] = []
    i, n = 0, len(text)
    while i < n:
        if not _is_emoji_base(text[i]):
            i += 1
            continue
        start = i
        i += 1
        while i < n and text[i] == _VS16:
            i += 1
        while i + 1 < n and text[i] == _ZWJ and _is_emoji_base(text[i + 1]):
            i += 2
            while i < n and text[i] == _VS16:
                i += 1
        hits.append((start, text[start:i]))
    return hits


def has_emoji(text: str) -> bool:
    return bool(detect_emoji(text))


def strip_emoji(text: str) -> str:
    """Remove every emoji sequence, collapsing the doubled spaces left
    behind. Idempotent."""
    hits = detect_emoji(text)
    if not hits:
        return text
    parts: list[str] = []
    pos = 0
    for offset, seq in hits:
        parts.append(text[pos:offset])
        pos = offset + len(seq)
    parts.append(text[pos:])
    out = parts[0]
    for part in parts[1:]:
        if out.endswith(" ") and part.startswith(" "):
            part = part.lstrip(" ")
        out += part
    return out


# ---------------------------------------------------------------------------
# Documents and datasets
# ---------------------------------------------------------------------------


@dataclass
class Document:
    """One text unit (tweet-like) with provenance and derived attributes."""

    id: str
    raw_text: str
    normalized_text: str
    label: Optional[SentimentLabel] = None
    source: Source = Source.GOLD
    has_emoji: bool = False
    annotations: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_raw(
        cls,
        id: str,
        text: str,
        label: Optional[SentimentLabel] = None,
        source: Source = Source.GOLD,
        annotations: Optional[list[dict]] = None,
        meta: Optional[dict] = None,
    ) -> "Document":
        return cls(
            id=id,
            raw_text=text,
            normalized_text=normalize(text),
            label=label,
            source=source,
            has_emoji=has_emoji(text),
            annotations=list(annotations or []),
            meta=dict(meta or {}),
        )

    def with_text(self, text: str) -> "Document":
        """Copy of this document with replaced text and re-derived fields."""
        return Document.from_raw(
            id=self.id,
            text=text,
            label=self.label,
            source=self.source,
            annotations=self.annotations,
            meta=self.meta,
        )


class Dataset:
    """Ordered collection of documents with unique ids."""

    def __init__(self, documents: Iterable[Document] = ()):
        self.documents: list[Document] = list(documents)
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise DataError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, i: int) -> Document:
        return self.documents[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dataset) and self.documents == other.documents

    @property
    def class_counts(self) -> dict[SentimentLabel, int]:
        counts = {label: 0 for label in CLASS_ORDER}
        for doc in self.documents:
            if doc.label is not None:
                counts[doc.label] += 1
        return counts

    @property
    def ids(self) -> set[str]:
        return {doc.id for doc in self.documents}

    def by_label(self, label: SentimentLabel) -> list[Document]:
        return [doc for doc in self.documents if doc.label == label]

    def strip_emoji(self) -> "Dataset":
        """Emoji-free view of the dataset (the ablation transform)."""
        return Dataset(doc.with_text(strip_emoji(doc.raw_text)) for doc in self.documents)


def split_dataset(ds: Dataset, ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split.

    Per class, ``floor(ratio * n_c)`` documents go to train after a seeded
    shuffle; the remainder goes to test. Document order within each side
    follows the input dataset.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    by_class: dict[SentimentLabel, list[int]] = {label: [] for label in CLASS_ORDER}
    for pos, doc in enumerate(ds):
        if doc.label is None:
            raise DataError(f"document {doc.id!r} is unlabeled; cannot stratify")
        by_class[doc.label].append(pos)
    rng = np.random.default_rng(seed)
    train_pos: list[int] = []
    test_pos: list[int] = []
    for label in CLASS_ORDER:
        positions = by_class[label]
        if not positions:
            continue
        if len(positions) < 2:
            raise DataError(f"class {label.value!r} has {len(positions)} document(s); need >= 2 to stratify")
        shuffled = [positions[i] for i in rng.permutation(len(positions))]
        n_train = int(np.floor(ratio * len(positions)))
        train_pos.extend(shuffled[:n_train])
        test_pos.extend(shuffled[n_train:])
    train = Dataset(ds[i] for i in sorted(train_pos))
    test = Dataset(ds[i] for i in sorted(test_pos))
    return train, test


# ---------------------------------------------------------------------------
# JSONL persistence
# ---------------------------------------------------------------------------

_KNOWN_KEYS = {"id", "text", "label", "source", "annotations", "meta"}


def _parse_label(value: object, where: str) -> Optional[SentimentLabel]:
    if value is None:
        return None
    try:
        return SentimentLabel(value)
    except ValueError:
        raise DataError(f"{where}: unknown label {value!r}") from None


def load_jsonl(path: str | Path) -> Dataset:
    """Load a dataset from JSONL.

    One object per line with keys ``id``, ``text``, optional ``label``,
    ``source``, ``annotations``; any other keys are preserved under the
    document's ``meta`` map. Lines starting with ``#`` are skipped.
    """
    path = Path(path)
    documents: list[Document] = []
    seen: set[str] = set()
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
            if not isinstance(obj, dict):
                raise DataError(f"{where}: expected a JSON object")
            if "text" not in obj:
                raise DataError(f"{where}: missing required key 'text'")
            if "id" not in obj:
                raise DataError(f"{where}: missing required key 'id'")
            doc_id = str(obj["id"])
            if doc_id in seen:
                raise DataError(f"{where}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            label = _parse_label(obj.get("label"), where)
            source_value = obj.get("source", "gold")
            try:
                source = Source(source_value)
            except ValueError:
                raise DataError(f"{where}: unknown source {source_value!r}") from None
            annotations = obj.get("annotations") or []
            if not isinstance(annotations, list):
                raise DataError(f"{where}: 'annotations' must be a list")
            meta = dict(obj.get("meta") or {})
            for key, value in obj.items():
                if key not in _KNOWN_KEYS:
                    meta[key] = value
            documents.append(
                Document.from_raw(
                    id=doc_id,
                    text=obj["text"],
                    label=label,
                    source=source,
                    annotations=annotations,
                    meta=meta,
                )
            )
    return Dataset(documents)


def document_to_obj(doc: Document) -> dict:
    obj: dict = {"id": doc.id, "text": doc.raw_text, "source": doc.source.value}
    if doc.label is not None:
        obj["label"] = doc.label.value
    if doc.annotations:
        obj["annotations"] = doc.annotations
    if doc.meta:
        obj["meta"] = doc.meta
    return obj


def save_jsonl(ds: Dataset, path: str | Path, header: Optional[str] = None) -> None:
    """Write a dataset as UTF-8 JSONL with LF line endings."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for doc in ds:
            fh.write(json.dumps(document_to_obj(doc), ensure_ascii=False) + "\n")
