"""Deterministic synthetic Sorani-like corpus for offline demos and tests.

Documents are built from pseudo-words over the Central Kurdish letter
inventory. A polarity lexicon drives the latent sentiment of each document;
a corrupted copy of that lexicon plays the noisy offline teacher, which is
how the silver-data pipeline stays meaningful without network models.

Everything is a pure function of the seed, so the bundled data files can be
regenerated bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .annotation import (
    OBJECTIVE,
    AnnotationLabel,
    AnnotationRecord,
    Sentiment,
    aggregate,
    records_by_unit,
    save_annotations,
    subjective,
)
from .corpus import CLASS_ORDER, Dataset, Document, SentimentLabel, save_jsonl

_CONSONANTS = list("بپتجچحخدرڕزژسشفڤقکگلڵمنو")
_VOWELS = list("اەۆوێی")
_DISTINCTIVE = set("ڕڵێۆەڤگچپژ")

POSITIVE_EMOJI = ["😊", "❤️", "🥰", "😍", "🙏", "👍"]
NEGATIVE_EMOJI = ["😡", "😭", "💔", "😞", "👎", "😤"]
NEUTRAL_EMOJI = ["🤔", "🌙", "⚽", "📷"]

_SENTIMENT_OF = {
    SentimentLabel.POSITIVE: Sentiment.POSITIVE,
    SentimentLabel.NEGATIVE: Sentiment.NEGATIVE,
    SentimentLabel.NEUTRAL: Sentiment.NEUTRAL,
}


@dataclass
class SynthConfig:
    seed: int = 20240901
    gold_counts: tuple[int, int, int] = (292, 639, 254)
    extra_mixed: int = 120
    extra_none: int = 40
    extra_objective: int = 60
    noise_docs: int = 80
    pool_size: int = 7500
    n_fillers: int = 2500
    n_polar_per_side: int = 600
    doc_len_range: tuple[int, int] = (6, 13)
    polar_per_doc: tuple[int, int] = (1, 3)
    cross_polar_prob: float = 0.08
    neutral_polar_prob: float = 0.10
    gold_emoji_prob: float = 0.40
    pool_emoji_prob: float = 0.55
    emoji_mismatch_prob: float = 0.10
    teacher_keep_prob: float = 0.72
    teacher_flip_prob: float = 0.08
    teacher_emoji_keep_prob: float = 0.90
    annotator_sentiment_noise: float = 0.07
    annotator_objective_noise: float = 0.03


@dataclass
class SynthBundle:
    gold: Dataset
    pool: Dataset
    raw: Dataset
    annotations: list[AnnotationRecord]
    overrides: dict[str, AnnotationLabel]
    truth_lexicon: dict[str, int]
    truth_emoji: dict[str, int]
    teacher_lexicon: dict[str, int]
    teacher_emoji: dict[str, int]
    config: SynthConfig = field(default_factory=SynthConfig)


def _make_word(rng: np.random.Generator, min_syllables: int = 2, max_syllables: int = 4) -> str:
    n = int(rng.integers(min_syllables, max_syllables + 1))
    parts = []
    for _ in range(n):
        parts.append(_CONSONANTS[rng.integers(0, len(_CONSONANTS))])
        parts.append(_VOWELS[rng.integers(0, len(_VOWELS))])
    if rng.random() < 0.5:
        parts.append(_CONSONANTS[rng.integers(0, len(_CONSONANTS))])
    return "".join(parts)


def _make_wordlist(rng: np.random.Generator, n: int) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < n:
        word = _make_word(rng)
        if word in seen:
            continue
        seen.add(word)
        words.append(word)
    return words


def _pick(rng: np.random.Generator, items: list[str]) -> str:
    return items[rng.integers(0, len(items))]


class _TextSampler:
    def __init__(self, rng: np.random.Generator, cfg: SynthConfig):
        self.rng = rng
        self.cfg = cfg
        self.fillers = _make_wordlist(rng, cfg.n_fillers)
        polar = _make_wordlist(rng, 2 * cfg.n_polar_per_side)
        self.pos_words = polar[: cfg.n_polar_per_side]
        self.neg_words = polar[cfg.n_polar_per_side :]
        self.lexicon: dict[str, int] = {}
        for word in self.pos_words:
            self.lexicon[word] = 2 if rng.random() < 0.3 else 1
        for word in self.neg_words:
            self.lexicon[word] = -2 if rng.random() < 0.3 else -1
        self.emoji_polarity = {e: 2 for e in POSITIVE_EMOJI}
        self.emoji_polarity.update({e: -2 for e in NEGATIVE_EMOJI})

    def _emoji_for(self, label: SentimentLabel) -> str:
        rng, cfg = self.rng, self.cfg
        mismatch = rng.random() < cfg.emoji_mismatch_prob
        if label == SentimentLabel.POSITIVE:
            bucket = NEGATIVE_EMOJI if mismatch else POSITIVE_EMOJI
        elif label == SentimentLabel.NEGATIVE:
            bucket = POSITIVE_EMOJI if mismatch else NEGATIVE_EMOJI
        else:
            bucket = NEUTRAL_EMOJI
        return _pick(rng, bucket)

    def document_text(self, label: SentimentLabel, emoji_prob: float) -> str:
        rng, cfg = self.rng, self.cfg
        length = int(rng.integers(*cfg.doc_len_range))
        tokens = [_pick(rng, self.fillers) for _ in range(length)]
        lo, hi = cfg.polar_per_doc
        n_polar = int(rng.integers(lo, hi + 1))
        if label == SentimentLabel.POSITIVE:
            own, other = self.pos_words, self.neg_words
        elif label == SentimentLabel.NEGATIVE:
            own, other = self.neg_words, self.pos_words
        else:
            own, other = None, None
        if own is not None:
            for _ in range(n_polar):
                tokens.insert(int(rng.integers(0, len(tokens) + 1)), _pick(rng, own))
            if rng.random() < cfg.cross_polar_prob:
                tokens.insert(int(rng.integers(0, len(tokens) + 1)), _pick(rng, other))
        elif rng.random() < cfg.neutral_polar_prob:
            bucket = self.pos_words if rng.random() < 0.5 else self.neg_words
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), _pick(rng, bucket))
        if not any(ch in _DISTINCTIVE for word in tokens for ch in word):
            tokens.append("ئەمە")
        text = " ".join(tokens)
        if rng.random() < emoji_prob:
            n_emoji = 1 + int(rng.random() < 0.3)
            text = text + " " + " ".join(self._emoji_for(label) for _ in range(n_emoji))
        return text

    def mixed_text(self) -> str:
        rng = self.rng
        length = int(rng.integers(*self.cfg.doc_len_range))
        tokens = [_pick(rng, self.fillers) for _ in range(length)]
        tokens.insert(int(rng.integers(0, len(tokens) + 1)), _pick(rng, self.pos_words))
        tokens.insert(int(rng.integers(0, len(tokens) + 1)), _pick(rng, self.neg_words))
        return " ".join(tokens)


def _corrupt_lexicon(rng: np.random.Generator, sampler: _TextSampler, cfg: SynthConfig):
    teacher_lexicon: dict[str, int] = {}
    for word, polarity in sampler.lexicon.items():
        roll = rng.random()
        if roll >= cfg.teacher_keep_prob:
            continue
        if rng.random() < cfg.teacher_flip_prob:
            teacher_lexicon[word] = -polarity
        else:
            teacher_lexicon[word] = polarity
    teacher_emoji: dict[str, int] = {}
    for emoji, polarity in sampler.emoji_polarity.items():
        if rng.random() < cfg.teacher_emoji_keep_prob:
            teacher_emoji[emoji] = polarity
    return teacher_lexicon, teacher_emoji


def _noise_doc_text(rng: np.random.Generator, index: int) -> str:
    if index % 2 == 0:
        words = ["the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog", "hello", "world"]
        n = int(rng.integers(4, 9))
        return " ".join(_pick(rng, words) for _ in range(n))
    # Arabic without any distinctive Kurdish letter
    words = ["السلام", "عليكم", "شكرا", "مرحبا", "كتاب", "مدينة", "يوم", "ليل"]
    n = int(rng.integers(4, 9))
    return " ".join(_pick(rng, words) for _ in range(n))


def _annotate_unit(
    rng: np.random.Generator,
    unit_id: str,
    final: AnnotationLabel,
    cfg: SynthConfig,
) -> list[AnnotationRecord]:
    records = []
    for annotator in ("a1", "a2"):
        label = final
        if rng.random() < cfg.annotator_objective_noise:
            label = OBJECTIVE if final != OBJECTIVE else subjective(Sentiment.NEUTRAL)
        elif final != OBJECTIVE and rng.random() < cfg.annotator_sentiment_noise:
            alternatives = [s for s in Sentiment if s != final.sentiment]
            label = subjective(alternatives[rng.integers(0, len(alternatives))])
        records.append(AnnotationRecord(unit_id, annotator, label))
    return records


def generate_bundle(cfg: Optional[SynthConfig] = None) -> SynthBundle:
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    sampler = _TextSampler(rng, cfg)
    teacher_lexicon, teacher_emoji = _corrupt_lexicon(rng, sampler, cfg)

    # sentiment-bearing corpus documents (the future gold standard)
    gold_docs: list[Document] = []
    finals: dict[str, AnnotationLabel] = {}
    doc_index = 0
    for label, count in zip(CLASS_ORDER, cfg.gold_counts):
        for _ in range(count):
            doc_id = f"d-{doc_index:05d}"
            doc_index += 1
            text = sampler.document_text(label, cfg.gold_emoji_prob)
            gold_docs.append(Document.from_raw(id=doc_id, text=text, label=label))
            finals[doc_id] = subjective(_SENTIMENT_OF[label])

    # units that will not survive the three-class filter
    extra_docs: list[Document] = []
    extras = (
        [(subjective(Sentiment.MIXED), cfg.extra_mixed)]
        + [(subjective(Sentiment.NONE), cfg.extra_none)]
        + [(OBJECTIVE, cfg.extra_objective)]
    )
    for final, count in extras:
        for _ in range(count):
            doc_id = f"d-{doc_index:05d}"
            doc_index += 1
            if final.sentiment == Sentiment.MIXED:
                text = sampler.mixed_text()
            else:
                text = sampler.document_text(SentimentLabel.NEUTRAL, emoji_prob=0.1)
            extra_docs.append(Document.from_raw(id=doc_id, text=text))
            finals[doc_id] = final

    # two-annotator campaign with rectification overrides for conflicts
    annotations: list[AnnotationRecord] = []
    for doc in gold_docs + extra_docs:
        annotations.extend(_annotate_unit(rng, doc.id, finals[doc.id], cfg))
    aggregated = aggregate(records_by_unit(annotations))
    overrides = {
        unit_id: final for unit_id, final in finals.items() if aggregated[unit_id] != final
    }

    # unlabeled pool for silver generation (latent labels balanced)
    pool_docs: list[Document] = []
    for i in range(cfg.pool_size):
        label = CLASS_ORDER[i % 3]
        pool_docs.append(
            Document.from_raw(
                id=f"p-{i:05d}", text=sampler.document_text(label, cfg.pool_emoji_prob)
            )
        )

    # raw ingest file: annotated corpus plus non-Kurdish noise
    noise_docs = [
        Document.from_raw(id=f"n-{i:03d}", text=_noise_doc_text(rng, i))
        for i in range(cfg.noise_docs)
    ]
    raw_docs = [
        Document.from_raw(id=doc.id, text=doc.raw_text)
        for doc in gold_docs + extra_docs
    ] + noise_docs

    return SynthBundle(
        gold=Dataset(gold_docs),
        pool=Dataset(pool_docs),
        raw=Dataset(raw_docs),
        annotations=annotations,
        overrides=overrides,
        truth_lexicon=sampler.lexicon,
        truth_emoji=sampler.emoji_polarity,
        teacher_lexicon=teacher_lexicon,
        teacher_emoji=teacher_emoji,
        config=cfg,
    )


def _save_lexicon(lexicon: dict[str, int], emoji: dict[str, int], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for token in sorted(lexicon):
            fh.write(f"{token}\t{lexicon[token]}\n")
        for token in sorted(emoji):
            fh.write(f"{token}\t{emoji[token]}\n")


def _save_overrides(overrides: dict[str, AnnotationLabel], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for unit_id in sorted(overrides):
            label = overrides[unit_id]
            final = "objective" if label == OBJECTIVE else label.sentiment.value
            fh.write(json.dumps({"unit_id": unit_id, "final": final}, ensure_ascii=False) + "\n")


def write_bundle(out_dir: str | Path, cfg: Optional[SynthConfig] = None) -> SynthBundle:
    """Write the bundle files (gold/pool/raw JSONL, annotations, overrides,
    teacher lexicon TSV) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = generate_bundle(cfg)
    save_jsonl(bundle.gold, out / "gold.jsonl")
    save_jsonl(bundle.pool, out / "pool.jsonl")
    save_jsonl(bundle.raw, out / "raw.jsonl")
    save_annotations(bundle.annotations, out / "annotations.jsonl")
    _save_overrides(bundle.overrides, out / "overrides.jsonl")
    _save_lexicon(bundle.teacher_lexicon, bundle.teacher_emoji, out / "lexicon.tsv")
    _save_lexicon(bundle.truth_lexicon, bundle.truth_emoji, out / "truth_lexicon.tsv")
    return bundle
