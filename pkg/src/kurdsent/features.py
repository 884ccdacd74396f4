"""Tokenization and TF-IDF vectorization into L2-normalized sparse vectors."""

from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .base import DataError, Estimator, check_is_fitted
from .corpus import detect_emoji


@dataclass(frozen=True)
class SparseVector:
    """Sparse feature vector: entries sorted strictly by index."""

    entries: tuple[tuple[int, float], ...]
    dim: int

    def __post_init__(self) -> None:
        prev = -1
        for index, _ in self.entries:
            if index <= prev:
                raise ValueError("entries must be strictly increasing by index")
            prev = index
        if prev >= self.dim:
            raise ValueError(f"index {prev} out of range for dim {self.dim}")

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for _, v in self.entries))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        for index, value in self.entries:
            dense[index] = value
        return dense


def dense_vector(values: Sequence[float]) -> SparseVector:
    """SparseVector with explicit entries for every coordinate."""
    return SparseVector(tuple((i, float(v)) for i, v in enumerate(values)), dim=len(values))


def vectors_to_csr(X: Sequence[SparseVector], dim: Optional[int] = None) -> sp.csr_matrix:
    """Stack sparse vectors into a CSR matrix, validating dimensions."""
    if dim is None:
        if not X:
            raise ValueError("cannot infer dimension from an empty input")
        dim = X[0].dim
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in X:
        if vec.dim != dim:
            raise ValueError(f"dimension mismatch: expected {dim}, got {vec.dim}")
        for index, value in vec.entries:
            indices.append(index)
            data.append(value)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(X), dim),
    )


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------


def _strip_affix_punct(chunk: str) -> str:
    start, end = 0, len(chunk)
    while start < end and unicodedata.category(chunk[start])[0] in "PS":
        start += 1
    while end > start and unicodedata.category(chunk[end - 1])[0] in "PS":
        end -= 1
    return chunk[start:end]


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization with affix punctuation stripped.

    Emoji sequences always become standalone tokens, even when glued to a
    word; everything else loses leading/trailing punctuation and symbols.
    """
    tokens: list[str] = []
    for chunk in text.split():
        hits = detect_emoji(chunk)
        pos = 0
        pieces: list[str] = []
        for offset, seq in hits:
            pieces.append(chunk[pos:offset])
            pieces.append(seq)
            pos = offset + len(seq)
        pieces.append(chunk[pos:])
        emoji_texts = {seq for _, seq in hits}
        for piece in pieces:
            if not piece:
                continue
            if piece in emoji_texts:
                tokens.append(piece)
                continue
            word = _strip_affix_punct(piece)
            if word:
                tokens.append(word)
    return tokens


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------


def smoothed_idf(n_docs: int, df: int) -> float:
    return math.log((1.0 + n_docs) / (1.0 + df)) + 1.0


class TfidfVectorizer(Estimator):
    """Unigram TF-IDF with smoothed idf and L2 normalization.

    Weighting: raw term count times ``ln((1 + N) / (1 + df)) + 1``, then the
    vector is scaled to unit L2 norm (zero vectors stay zero). Tokens never
    seen during ``fit`` are ignored at transform time.
    """

    def __init__(self) -> None:
        self.vocab_: Optional[dict[str, int]] = None
        self.df_: Optional[np.ndarray] = None
        self.idf_: Optional[np.ndarray] = None
        self.n_docs_: Optional[int] = None

    @property
    def dim(self) -> int:
        check_is_fitted(self, "vocab_")
        return len(self.vocab_)

    def fit(self, docs: Sequence[Sequence[str]]) -> "TfidfVectorizer":
        """Build the vocabulary (first-occurrence order) and document
        frequencies from tokenized training documents."""
        if not docs:
            raise DataError("cannot fit TF-IDF on an empty corpus")
        vocab: dict[str, int] = {}
        df_counts: list[int] = []
        for tokens in docs:
            for token in dict.fromkeys(tokens):  # unique, first-occurrence order
                index = vocab.get(token)
                if index is None:
                    vocab[token] = len(vocab)
                    df_counts.append(1)
                else:
                    df_counts[index] += 1
        self.vocab_ = vocab
        self.n_docs_ = len(docs)
        self.df_ = np.asarray(df_counts, dtype=np.int64)
        self.idf_ = np.log((1.0 + self.n_docs_) / (1.0 + self.df_)) + 1.0
        return self

    def transform_one(self, tokens: Sequence[str]) -> SparseVector:
        check_is_fitted(self, "vocab_")
        counts: Counter[int] = Counter()
        for token in tokens:
            index = self.vocab_.get(token)
            if index is not None:
                counts[index] += 1
        if not counts:
            return SparseVector((), dim=len(self.vocab_))
        items = sorted(counts.items())
        values = np.array([tf * self.idf_[i] for i, tf in items])
        norm = float(np.sqrt(np.dot(values, values)))
        if norm > 0.0:
            values = values / norm
        entries = tuple((i, float(v)) for (i, _), v in zip(items, values))
        return SparseVector(entries, dim=len(self.vocab_))

    def transform(self, docs: Iterable[Sequence[str]]) -> list[SparseVector]:
        return [self.transform_one(tokens) for tokens in docs]

    def fit_transform(self, docs: Sequence[Sequence[str]]) -> list[SparseVector]:
        return self.fit(docs).transform(docs)

    # -- persistence --------------------------------------------------------

    def to_obj(self) -> dict:
        check_is_fitted(self, "vocab_")
        return {
            "n_docs": self.n_docs_,
            "vocab": [
                {"token": token, "index": index, "df": int(self.df_[index])}
                for token, index in self.vocab_.items()
            ],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TfidfVectorizer":
        model = cls()
        try:
            n_docs = int(obj["n_docs"])
            entries = obj["vocab"]
            vocab = {str(e["token"]): int(e["index"]) for e in entries}
            df = np.zeros(len(entries), dtype=np.int64)
            for e in entries:
                df[int(e["index"])] = int(e["df"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DataError(f"malformed TF-IDF model object: {exc}") from None
        if sorted(vocab.values()) != list(range(len(vocab))):
            raise DataError("TF-IDF vocabulary indices must be dense in [0, |vocab|)")
        model.vocab_ = vocab
        model.n_docs_ = n_docs
        model.df_ = df
        model.idf_ = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_obj(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfVectorizer":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed JSON ({exc.msg})") from None
        return cls.from_obj(obj)
