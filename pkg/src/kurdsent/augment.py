"""Silver-data generation via translate-and-label clients, class balancing,
and zero-shot translate-and-classify evaluation.

The translator and teacher are pluggable contracts. The built-in defaults
(identity translator, polarity-lexicon teacher) keep every pipeline runnable
offline; HTTP clients speak a minimal JSON POST protocol for hooking up real
translation or sentiment models.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .base import ClientError, DataError
from .corpus import CLASS_ORDER, Dataset, Document, SentimentLabel, Source, detect_emoji
from .evaluation import EvaluationReport, evaluate_predictions
from .features import tokenize

logger = logging.getLogger(__name__)


class Translator(Protocol):
    name: str

    def translate(self, text: str, source_lang: str, target_lang: str) -> str: ...

    def supported_pairs(self) -> Optional[set[tuple[str, str]]]:
        """Language pairs the client can handle; ``None`` means any."""
        ...


class Teacher(Protocol):
    name: str

    def classify(self, text: str) -> tuple[SentimentLabel, float]: ...


class IdentityTranslator:
    """Offline default: passes text through unchanged."""

    name = "identity"

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        return text

    def supported_pairs(self) -> Optional[set[tuple[str, str]]]:
        return None


class LexiconTeacher:
    """Polarity-lexicon scorer used as the offline sentiment teacher.

    The score is the sum of word polarities plus emoji polarities; the label
    is positive above ``neutral_band``, negative below its negation, else
    neutral. Confidence is ``min(1, |score| / 5)``.
    """

    name = "lexicon"

    def __init__(
        self,
        lexicon: dict[str, int],
        emoji_polarity: Optional[dict[str, int]] = None,
        neutral_band: int = 0,
    ):
        if neutral_band < 0:
            raise ValueError("neutral_band must be >= 0")
        self.lexicon = dict(lexicon)
        self.emoji_polarity = dict(emoji_polarity or {})
        self.neutral_band = neutral_band

    @classmethod
    def from_tsv(cls, path: str | Path, neutral_band: int = 0) -> "LexiconTeacher":
        """Load ``token<TAB>polarity`` lines; emoji tokens feed the emoji map."""
        lexicon: dict[str, int] = {}
        emoji_map: dict[str, int] = {}
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataError(f"{path.name}:{lineno}: expected 'token<TAB>polarity'")
                token, polarity_text = parts
                try:
                    polarity = int(polarity_text)
                except ValueError:
                    raise DataError(f"{path.name}:{lineno}: polarity {polarity_text!r} is not an integer") from None
                if detect_emoji(token):
                    emoji_map[token] = polarity
                else:
                    lexicon[token] = polarity
        return cls(lexicon, emoji_map, neutral_band=neutral_band)

    def score(self, text: str) -> int:
        total = 0
        for token in tokenize(text):
            total += self.lexicon.get(token, 0)
            total += self.emoji_polarity.get(token, 0)
        return total

    def classify(self, text: str) -> tuple[SentimentLabel, float]:
        score = self.score(text)
        if score > self.neutral_band:
            label = SentimentLabel.POSITIVE
        elif score < -self.neutral_band:
            label = SentimentLabel.NEGATIVE
        else:
            label = SentimentLabel.NEUTRAL
        confidence = min(1.0, abs(score) / 5.0)
        return label, confidence


class OracleTeacher:
    """Testing aid: returns a fixed mapping from text to label."""

    name = "oracle"

    def __init__(self, answers: dict[str, SentimentLabel], confidence: float = 1.0):
        self.answers = dict(answers)
        self.confidence = confidence

    def classify(self, text: str) -> tuple[SentimentLabel, float]:
        try:
            return self.answers[text], self.confidence
        except KeyError:
            raise ClientError(f"oracle teacher has no answer for {text!r}") from None


# ---------------------------------------------------------------------------
# HTTP clients (opt-in; the pipeline stays offline unless URLs are set)
# ---------------------------------------------------------------------------


class HttpTranslator:
    name = "http-translator"

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        import requests

        try:
            response = requests.post(
                self.url,
                json={"text": text, "source": source_lang, "target": target_lang},
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
            return str(payload["text"])
        except Exception as exc:
            raise ClientError(f"translator endpoint {self.url} failed: {exc}") from exc

    def supported_pairs(self) -> Optional[set[tuple[str, str]]]:
        return None


class HttpTeacher:
    name = "http-teacher"

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def classify(self, text: str) -> tuple[SentimentLabel, float]:
        import requests

        try:
            response = requests.post(self.url, json={"text": text}, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
            label = SentimentLabel(payload["label"])
            confidence = float(payload["confidence"])
        except Exception as exc:
            raise ClientError(f"teacher endpoint {self.url} failed: {exc}") from exc
        if not np.isfinite(confidence):
            raise ClientError(f"teacher endpoint {self.url} returned a non-finite confidence")
        return label, confidence


# ---------------------------------------------------------------------------
# Caching layer
# ---------------------------------------------------------------------------


def _content_key(*parts: str) -> str:
    joined = "\x00".join(parts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


class _JsonlCache:
    """In-memory cache, optionally persisted as append-only JSONL."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self._data: dict[str, object] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    obj = json.loads(line)
                    self._data[obj["key"]] = obj["value"]

    def get(self, key: str):
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, value) -> None:
        with self._lock:
            if key in self._data:
                return
            self._data[key] = value
            if self.path:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"key": key, "value": value}, ensure_ascii=False) + "\n")


class CachingTranslator:
    """Ensures repeated identical translate calls reach the backend once."""

    def __init__(self, inner: Translator, cache_path: Optional[str | Path] = None):
        self.inner = inner
        self.name = inner.name
        self._cache = _JsonlCache(cache_path)

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        key = _content_key("translate", source_lang, target_lang, text)
        hit = self._cache.get(key)
        if hit is not None:
            return str(hit)
        value = self.inner.translate(text, source_lang, target_lang)
        self._cache.put(key, value)
        return value

    def supported_pairs(self) -> Optional[set[tuple[str, str]]]:
        return self.inner.supported_pairs()


class CachingTeacher:
    def __init__(self, inner: Teacher, cache_path: Optional[str | Path] = None):
        self.inner = inner
        self.name = inner.name
        self._cache = _JsonlCache(cache_path)

    def classify(self, text: str) -> tuple[SentimentLabel, float]:
        key = _content_key("classify", text)
        hit = self._cache.get(key)
        if hit is not None:
            return SentimentLabel(hit[0]), float(hit[1])
        label, confidence = self.inner.classify(text)
        self._cache.put(key, [label.value, confidence])
        return label, confidence


# ---------------------------------------------------------------------------
# Silver generation and balancing
# ---------------------------------------------------------------------------


@dataclass
class BalanceSpec:
    per_class_target: int
    emoji_min_per_class: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.emoji_min_per_class > self.per_class_target:
            raise DataError("emoji_min_per_class cannot exceed per_class_target")
        if self.per_class_target < 0 or self.emoji_min_per_class < 0:
            raise DataError("targets must be non-negative")


def _doc_confidence(doc: Document) -> float:
    try:
        return float(doc.meta.get("confidence", 0.0))
    except (TypeError, ValueError):
        return 0.0


def _select_confidence_first(
    candidates: list[Document], k: int, rng: np.random.Generator
) -> list[Document]:
    """Pick ``k`` documents preferring high confidence.

    Candidates are sorted by (confidence desc, id) first, so the choice is
    independent of input ordering; a confidence tie at the cut point is
    resolved by a seeded shuffle of the tied group.
    """
    ordered = sorted(candidates, key=lambda d: (-_doc_confidence(d), d.id))
    if k >= len(ordered):
        return ordered
    if k == 0:
        return []
    cut_conf = _doc_confidence(ordered[k - 1])
    sure = [d for d in ordered if _doc_confidence(d) > cut_conf]
    tied = [d for d in ordered if _doc_confidence(d) == cut_conf]
    need = k - len(sure)
    perm = rng.permutation(len(tied))
    chosen_tied = {tied[i].id for i in perm[:need]}
    return [d for d in ordered if _doc_confidence(d) > cut_conf or d.id in chosen_tied][:k]


def generate_silver(
    pool: Dataset,
    translator: Translator,
    teacher: Teacher,
    spec: BalanceSpec,
    source_lang: str = "ckb",
    target_lang: str = "en",
    exclude_ids: Optional[set[str]] = None,
) -> Dataset:
    """Translate and teacher-label a pool, then balance it per class.

    Every class ends up with exactly ``per_class_target`` documents, at least
    ``emoji_min_per_class`` of which carry an emoji in the original text.
    Selection prefers the teacher's most confident documents (ties by id).
    The returned documents keep their original text, tagged source=silver,
    with the translation and confidence recorded in ``meta``.
    """
    exclude_ids = exclude_ids or set()
    labeled: dict[SentimentLabel, list[Document]] = {label: [] for label in CLASS_ORDER}
    for doc in pool:
        if doc.id in exclude_ids:
            continue
        try:
            translation = translator.translate(doc.normalized_text, source_lang, target_lang)
        except ClientError as exc:
            raise ClientError(f"translation failed for document {doc.id!r}: {exc}") from exc
        try:
            label, confidence = teacher.classify(translation)
        except ClientError as exc:
            raise ClientError(f"teacher labeling failed for document {doc.id!r}: {exc}") from exc
        meta = dict(doc.meta)
        meta.update({"confidence": confidence, "translation": translation, "teacher": teacher.name})
        labeled[label].append(
            Document(
                id=doc.id,
                raw_text=doc.raw_text,
                normalized_text=doc.normalized_text,
                label=label,
                source=Source.SILVER,
                has_emoji=doc.has_emoji,
                annotations=list(doc.annotations),
                meta=meta,
            )
        )

    rng = np.random.default_rng(spec.seed)
    selected: list[Document] = []
    for label in CLASS_ORDER:
        candidates = sorted(labeled[label], key=lambda d: (-_doc_confidence(d), d.id))
        with_emoji = [d for d in candidates if d.has_emoji]
        if len(candidates) < spec.per_class_target:
            raise DataError(
                f"silver pool too small for class {label.value!r}: "
                f"need {spec.per_class_target}, have {len(candidates)} "
                f"(shortfall {spec.per_class_target - len(candidates)})"
            )
        if len(with_emoji) < spec.emoji_min_per_class:
            raise DataError(
                f"emoji quota unmet for class {label.value!r}: "
                f"need {spec.emoji_min_per_class} emoji-bearing, have {len(with_emoji)} "
                f"(shortfall {spec.emoji_min_per_class - len(with_emoji)})"
            )
        chosen_ids: set[str] = set()
        for doc in with_emoji[: spec.emoji_min_per_class]:
            chosen_ids.add(doc.id)
        for doc in candidates:
            if len(chosen_ids) >= spec.per_class_target:
                break
            chosen_ids.add(doc.id)
        selected.extend(d for d in candidates if d.id in chosen_ids)
    return Dataset(selected)


def _require_labeled(ds: Dataset, name: str) -> None:
    for doc in ds:
        if doc.label is None:
            raise DataError(f"{name} document {doc.id!r} is unlabeled")


def _balance(
    gold: Dataset,
    silver: Dataset,
    target_per_class: int,
    seed: int,
    gold_overflow: str,
) -> Dataset:
    _require_labeled(gold, "gold")
    _require_labeled(silver, "silver")
    rng = np.random.default_rng(seed)
    additions: dict[SentimentLabel, list[Document]] = {}
    deficits: list[str] = []
    for label in CLASS_ORDER:
        gold_docs = gold.by_label(label)
        silver_docs = silver.by_label(label)
        need = target_per_class - len(gold_docs)
        if need < 0:
            if gold_overflow == "error":
                raise DataError(
                    f"class {label.value!r} has {len(gold_docs)} gold documents, above the "
                    f"target {target_per_class}; refusing to drop gold data"
                )
            logger.warning(
                "class %s exceeds the target (%d gold > %d); keeping all gold documents",
                label.value,
                len(gold_docs),
                target_per_class,
            )
            additions[label] = []
            continue
        if need > len(silver_docs):
            deficits.append(f"{label.value}: need {need}, have {len(silver_docs)} (deficit {need - len(silver_docs)})")
            continue
        additions[label] = _select_confidence_first(silver_docs, need, rng)
    if deficits:
        raise DataError("silver shortfall while balancing: " + "; ".join(deficits))
    docs = list(gold)
    for label in CLASS_ORDER:
        docs.extend(additions.get(label, ()))
    return Dataset(docs)


def upsample(gold: Dataset, silver: Dataset, target_per_class: int, seed: int) -> Dataset:
    """Top every class up to the target with silver documents.

    All gold documents are always retained; a class whose gold count already
    exceeds the target is kept whole (logged, never trimmed).
    """
    return _balance(gold, silver, target_per_class, seed, gold_overflow="warn")


def merge(gold: Dataset, silver: Dataset, target_per_class: int, seed: int) -> Dataset:
    """Combine gold and silver at exactly the target per class.

    Only silver is trimmed; a gold class above the target is an error rather
    than a silent drop.
    """
    return _balance(gold, silver, target_per_class, seed, gold_overflow="error")


def zero_shot_eval(
    test: Dataset,
    translator: Translator,
    teacher: Teacher,
    source_lang: str = "ckb",
    target_lang: str = "en",
    tags: Optional[dict[str, object]] = None,
) -> EvaluationReport:
    """Translate-and-classify every test document; no training involved."""
    _require_labeled(test, "test")
    refs: list[SentimentLabel] = []
    preds: list[SentimentLabel] = []
    for doc in test:
        try:
            translation = translator.translate(doc.normalized_text, source_lang, target_lang)
            label, _ = teacher.classify(translation)
        except ClientError as exc:
            raise ClientError(f"zero-shot evaluation failed for document {doc.id!r}: {exc}") from exc
        refs.append(doc.label)
        preds.append(label)
    base_tags = {"model": teacher.name, "system": translator.name, "test_set": "baseline"}
    base_tags.update(tags or {})
    return evaluate_predictions(refs, preds, tags=base_tags)
