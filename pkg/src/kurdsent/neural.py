"""Two-layer bidirectional LSTM classifier, implemented from scratch in numpy.

Architecture: trainable embeddings feed two stacked bidirectional LSTM
layers (per-direction hidden sizes 64 and 32 by default) with inverted
dropout between them; the final forward state and the step-one backward
state of the second layer are concatenated and passed through a dense
softmax layer over the three sentiment classes. Gradients come from full
backpropagation through time and are validated against central finite
differences in the test suite.

Gate layout inside each weight block is (input, forget, candidate, output).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .base import DataError, Estimator, check_is_fitted
from .corpus import CLASS_ORDER, SentimentLabel

PAD_ID = 0
UNK_ID = 1

_DIRECTIONS = ("f", "b")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


@dataclass
class SequenceBatch:
    token_ids: np.ndarray  # (B, L) int, padded with PAD_ID
    lengths: np.ndarray  # (B,) int, all >= 1
    labels: Optional[np.ndarray] = None  # (B,) class indices


def build_vocab(docs: Sequence[Sequence[str]]) -> dict[str, int]:
    """Token ids from training documents only; 0 is padding, 1 is unknown."""
    vocab: dict[str, int] = {}
    for tokens in docs:
        for token in tokens:
            if token not in vocab:
                vocab[token] = len(vocab) + 2
    return vocab


def encode_doc(tokens: Sequence[str], vocab: dict[str, int], max_len: int) -> list[int]:
    """Token ids truncated to ``max_len``; empty input becomes one unknown."""
    ids = [vocab.get(token, UNK_ID) for token in tokens[:max_len]]
    return ids or [UNK_ID]

def pad_batch(id_lists: Sequence[Sequence[int]], labels: Optional[np.ndarray] = None) -> SequenceBatch:
    lengths = np.array([len(ids) for ids in id_lists], dtype=np.int64)
    L = int(lengths.max())
    token_ids = np.full((len(id_lists), L), PAD_ID, dtype=np.int64)
    for i, ids in enumerate(id_lists):
        token_ids[i, : len(ids)] = ids
    return SequenceBatch(token_ids=token_ids, lengths=lengths, labels=labels)


def encode(
    docs: Sequence[Sequence[str]],
    vocab: dict[str, int],
    max_len: int,
    labels: Optional[np.ndarray] = None,
    batch_size: Optional[int] = None,
):
    """Deterministic stream of padded batches over the documents in order."""
    id_lists = [encode_doc(tokens, vocab, max_len) for tokens in docs]
    if batch_size is None:
        batch_size = len(id_lists)
    for start in range(0, len(id_lists), batch_size):
        chunk = id_lists[start : start + batch_size]
        chunk_labels = labels[start : start + len(chunk)] if labels is not None else None
        yield pad_batch(chunk, chunk_labels)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def init_params(
    rng: np.random.Generator,
    vocab_size: int,
    embed_dim: int,
    hidden1: int,
    hidden2: int,
    n_classes: int,
) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases with forget gates biased to 1."""

    def glorot(fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    params: dict[str, np.ndarray] = {}
    params["emb"] = rng.uniform(-0.05, 0.05, size=(vocab_size, embed_dim))
    specs = (("1", embed_dim, hidden1), ("2", 2 * hidden1, hidden2))
    for layer, in_dim, hidden in specs:
        for direction in _DIRECTIONS:
            params[f"W{layer}{direction}"] = glorot(in_dim, hidden, (in_dim, 4 * hidden))
            params[f"U{layer}{direction}"] = glorot(hidden, hidden, (hidden, 4 * hidden))
            bias = np.zeros(4 * hidden)
            bias[hidden : 2 * hidden] = 1.0
            params[f"b{layer}{direction}"] = bias
    params["out_W"] = glorot(2 * hidden2, n_classes, (2 * hidden2, n_classes))
    params["out_b"] = np.zeros(n_classes)
    return params


def _dims(params: dict[str, np.ndarray]) -> tuple[int, int, int, int, int]:
    vocab_size, embed_dim = params["emb"].shape
    hidden1 = params["U1f"].shape[0]
    hidden2 = params["U2f"].shape[0]
    n_classes = params["out_b"].shape[0]
    return vocab_size, embed_dim, hidden1, hidden2, n_classes


# ---------------------------------------------------------------------------
# LSTM cell over a sequence (one direction)
# ---------------------------------------------------------------------------


def _lstm_run(x: np.ndarray, mask: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray):
    """Run the LSTM recurrence over time with zero initial states.

    Masked steps carry hidden and cell states through unchanged. Returns the
    hidden sequence (B, L, H) and the step caches needed for BPTT.
    """
    B, L, _ = x.shape
    H = U.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    h_seq = np.zeros((B, L, H))
    steps = []
    for t in range(L):
        a = x[:, t] @ W + h @ U + b
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H : 2 * H])
        g = np.tanh(a[:, 2 * H : 3 * H])
        o = _sigmoid(a[:, 3 * H :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        m = mask[:, t][:, None]
        steps.append((h, c, i, f, g, o, c_new, tanh_c, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
        h_seq[:, t] = h
    return h_seq, steps


def _lstm_backward(x: np.ndarray, W: np.ndarray, U: np.ndarray, steps, dh_seq: np.ndarray):
    """BPTT through one direction; returns (dx, dW, dU, db)."""
    B, L, _ = x.shape
    H = U.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dx = np.zeros_like(x)
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in reversed(range(L)):
        h_prev, c_prev, i, f, g, o, c_new, tanh_c, m = steps[t]
        dh_total = dh_seq[:, t] + dh
        dh_new = m * dh_total
        dh_carry = (1.0 - m) * dh_total
        dc_new = m * dc + dh_new * o * (1.0 - tanh_c * tanh_c)
        dc_carry = (1.0 - m) * dc
        do = dh_new * tanh_c
        di = dc_new * g
        df = dc_new * c_prev
        dg = dc_new * i
        da = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dW += x[:, t].T @ da
        dU += h_prev.T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ W.T
        dh = dh_carry + da @ U.T
        dc = dc_carry + dc_new * f
    return dx, dW, dU, db


def _check_finite(name: str, h_seq: np.ndarray) -> None:
    if np.isfinite(h_seq).all():
        return
    bad = np.argwhere(~np.isfinite(h_seq))
    b, t = int(bad[0][0]), int(bad[0][1])
    raise DataError(f"non-finite activation in {name} at batch row {b}, step {t}")


def _flip(a: np.ndarray) -> np.ndarray:
    return a[:, ::-1]


# ---------------------------------------------------------------------------
# Full forward / backward
# ---------------------------------------------------------------------------


def forward(
    params: dict[str, np.ndarray],
    batch: SequenceBatch,
    train_mode: bool = False,
    dropout_rate: float = 0.3,
    seed: int = 0,
):
    """Class probabilities (B, n_classes) and the cache for backprop.

    Dropout between the LSTM layers is applied only in ``train_mode`` with a
    mask drawn from ``seed`` (inverted scaling, so evaluation needs no
    rescale). The classifier reads the layer-2 final forward state and
    step-one backward state.
    """
    ids, lengths = batch.token_ids, batch.lengths
    B, L = ids.shape
    mask = (np.arange(L)[None, :] < lengths[:, None]).astype(np.float64)
    x1 = params["emb"][ids]

    h1f, steps1f = _lstm_run(x1, mask, params["W1f"], params["U1f"], params["b1f"])
    _check_finite("layer1-forward", h1f)
    h1b_r, steps1b = _lstm_run(_flip(x1), _flip(mask), params["W1b"], params["U1b"], params["b1b"])
    _check_finite("layer1-backward", h1b_r)
    layer1 = np.concatenate([h1f, _flip(h1b_r)], axis=2)

    if train_mode and dropout_rate > 0.0:
        keep = 1.0 - dropout_rate
        rng = np.random.default_rng(seed)
        drop_mask = (rng.random(layer1.shape) < keep).astype(np.float64) / keep
        layer1_dropped = layer1 * drop_mask
    else:
        drop_mask = None
        layer1_dropped = layer1

    h2f, steps2f = _lstm_run(layer1_dropped, mask, params["W2f"], params["U2f"], params["b2f"])
    _check_finite("layer2-forward", h2f)
    h2b_r, steps2b = _lstm_run(
        _flip(layer1_dropped), _flip(mask), params["W2b"], params["U2b"], params["b2b"]
    )
    _check_finite("layer2-backward", h2b_r)
    h2b = _flip(h2b_r)

    readout = np.concatenate([h2f[:, -1], h2b[:, 0]], axis=1)
    logits = readout @ params["out_W"] + params["out_b"]
    probs = _softmax(logits)
    cache = {
        "ids": ids,
        "mask": mask,
        "x1": x1,
        "steps1f": steps1f,
        "steps1b": steps1b,
        "layer1_dropped": layer1_dropped,
        "drop_mask": drop_mask,
        "steps2f": steps2f,
        "steps2b": steps2b,
        "readout": readout,
        "probs": probs,
    }
    return probs, cache


def loss_from_probs(probs: np.ndarray, y_idx: np.ndarray) -> float:
    return float(-np.log(probs[np.arange(len(y_idx)), y_idx]).mean())


def loss_and_grads(
    params: dict[str, np.ndarray],
    batch: SequenceBatch,
    seed: int = 0,
    dropout_rate: float = 0.3,
    train_mode: bool = True,
):
    """Mean cross-entropy and gradients for every parameter block."""
    y_idx = batch.labels
    if y_idx is None:
        raise DataError("batch has no labels")
    probs, cache = forward(params, batch, train_mode=train_mode, dropout_rate=dropout_rate, seed=seed)
    B = len(y_idx)
    loss = loss_from_probs(probs, y_idx)

    hidden2 = params["U2f"].shape[0]
    hidden1 = params["U1f"].shape[0]
    dlogits = probs.copy()
    dlogits[np.arange(B), y_idx] -= 1.0
    dlogits /= B

    grads: dict[str, np.ndarray] = {}
    grads["out_W"] = cache["readout"].T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dreadout = dlogits @ params["out_W"].T

    L = batch.token_ids.shape[1]
    dh2f_seq = np.zeros((B, L, hidden2))
    dh2f_seq[:, -1] = dreadout[:, :hidden2]
    dh2b_seq = np.zeros((B, L, hidden2))
    dh2b_seq[:, 0] = dreadout[:, hidden2:]

    layer1_dropped = cache["layer1_dropped"]
    dx2f, grads["W2f"], grads["U2f"], grads["b2f"] = _lstm_backward(
        layer1_dropped, params["W2f"], params["U2f"], cache["steps2f"], dh2f_seq
    )
    dx2b_r, grads["W2b"], grads["U2b"], grads["b2b"] = _lstm_backward(
        _flip(layer1_dropped), params["W2b"], params["U2b"], cache["steps2b"], _flip(dh2b_seq)
    )
    dlayer1 = dx2f + _flip(dx2b_r)
    if cache["drop_mask"] is not None:
        dlayer1 = dlayer1 * cache["drop_mask"]

    dh1f_seq = dlayer1[:, :, :hidden1]
    dh1b_seq = dlayer1[:, :, hidden1:]
    x1 = cache["x1"]
    dx1f, grads["W1f"], grads["U1f"], grads["b1f"] = _lstm_backward(
        x1, params["W1f"], params["U1f"], cache["steps1f"], dh1f_seq
    )
    dx1b_r, grads["W1b"], grads["U1b"], grads["b1b"] = _lstm_backward(
        _flip(x1), params["W1b"], params["U1b"], cache["steps1b"], _flip(dh1b_seq)
    )
    dx1 = dx1f + _flip(dx1b_r)

    demb = np.zeros_like(params["emb"])
    np.add.at(demb, cache["ids"], dx1)
    grads["emb"] = demb
    return loss, grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


class AdamOptimizer:
    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for key, grad in grads.items():
            if key not in self.m:
                self.m[key] = np.zeros_like(grad)
                self.v[key] = np.zeros_like(grad)
            self.m[key] = b1 * self.m[key] + (1.0 - b1) * grad
            self.v[key] = b2 * self.v[key] + (1.0 - b2) * grad * grad
            m_hat = self.m[key] / (1.0 - b1**self.t)
            v_hat = self.v[key] / (1.0 - b2**self.t)
            params[key] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# Estimator
# ---------------------------------------------------------------------------


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1)[0])


class BiLstmClassifier(Estimator):
    """Sequence classifier over token lists with the architecture above.

    Training uses Adam with seeded per-epoch shuffling and keeps the
    parameters that score best on the validation split. Deterministic for a
    fixed seed.
    """

    kind = "bilstm"

    def __init__(
        self,
        embed_dim: int = 100,
        hidden1: int = 64,
        hidden2: int = 32,
        dropout: float = 0.3,
        learning_rate: float = 1e-3,
        batch_size: int = 32,
        epochs: int = 10,
        seed: int = 0,
        max_len: int = 64,
        valid_fraction: float = 0.1,
    ):
        self.embed_dim = embed_dim
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.max_len = max_len
        self.valid_fraction = valid_fraction
        self.params_: Optional[dict[str, np.ndarray]] = None
        self.vocab_: Optional[dict[str, int]] = None
        self.class_order_: Optional[tuple[SentimentLabel, ...]] = None

    # -- helpers -------------------------------------------------------------

    def _accuracy(self, id_lists: list[list[int]], y_idx: np.ndarray) -> float:
        correct = 0
        for start in range(0, len(id_lists), self.batch_size):
            chunk = id_lists[start : start + self.batch_size]
            batch = pad_batch(chunk)
            probs, _ = forward(self.params_, batch, train_mode=False, dropout_rate=self.dropout)
            correct += int((np.argmax(probs, axis=1) == y_idx[start : start + len(chunk)]).sum())
        return correct / len(id_lists)

    def fit(
        self,
        docs: Sequence[Sequence[str]],
        y: Sequence[SentimentLabel],
        valid_docs: Optional[Sequence[Sequence[str]]] = None,
        valid_y: Optional[Sequence[SentimentLabel]] = None,
    ) -> "BiLstmClassifier":
        if len(docs) == 0:
            raise DataError("empty training set")
        if len(docs) != len(y):
            raise DataError(f"got {len(docs)} documents but {len(y)} labels")
        present = set(y)
        class_order = tuple(label for label in CLASS_ORDER if label in present)
        index = {label: i for i, label in enumerate(class_order)}

        docs = list(docs)
        y_list = list(y)
        if valid_docs is None:
            rng = np.random.default_rng(_derive_seed(self.seed, 0))
            order = rng.permutation(len(docs))
            n_valid = max(1, int(round(self.valid_fraction * len(docs))))
            if n_valid >= len(docs):
                n_valid = 0
            valid_idx = set(order[:n_valid].tolist())
            train_docs = [docs[i] for i in range(len(docs)) if i not in valid_idx]
            train_y = [y_list[i] for i in range(len(docs)) if i not in valid_idx]
            valid_docs = [docs[i] for i in sorted(valid_idx)]
            valid_y = [y_list[i] for i in sorted(valid_idx)]
            if not valid_docs:
                valid_docs, valid_y = train_docs, train_y
        else:
            train_docs, train_y = docs, y_list
            valid_y = list(valid_y or [])

        self.vocab_ = build_vocab(train_docs)
        self.class_order_ = class_order
        vocab_size = len(self.vocab_) + 2
        init_rng = np.random.default_rng(_derive_seed(self.seed, 1))
        self.params_ = init_params(
            init_rng, vocab_size, self.embed_dim, self.hidden1, self.hidden2, len(class_order)
        )

        train_ids = [encode_doc(tokens, self.vocab_, self.max_len) for tokens in train_docs]
        train_y_idx = np.array([index[label] for label in train_y], dtype=np.int64)
        valid_ids = [encode_doc(tokens, self.vocab_, self.max_len) for tokens in valid_docs]
        valid_y_idx = np.array([index[label] for label in valid_y], dtype=np.int64)

        optimizer = AdamOptimizer(learning_rate=self.learning_rate)
        best_params = {k: v.copy() for k, v in self.params_.items()}
        best_acc = self._accuracy(valid_ids, valid_y_idx)
        for epoch in range(self.epochs):
            shuffle_rng = np.random.default_rng(_derive_seed(self.seed, 2, epoch))
            order = shuffle_rng.permutation(len(train_ids))
            for bi, start in enumerate(range(0, len(order), self.batch_size)):
                chosen = order[start : start + self.batch_size]
                batch = pad_batch([train_ids[i] for i in chosen], train_y_idx[chosen])
                drop_seed = _derive_seed(self.seed, 3, epoch, bi)
                loss, grads = loss_and_grads(
                    self.params_, batch, seed=drop_seed, dropout_rate=self.dropout
                )
                if not np.isfinite(loss):
                    raise DataError(f"training diverged at epoch {epoch}, batch {bi} (loss={loss})")
                optimizer.step(self.params_, grads)
            acc = self._accuracy(valid_ids, valid_y_idx)
            if acc > best_acc:
                best_acc = acc
                best_params = {k: v.copy() for k, v in self.params_.items()}
        self.params_ = best_params
        return self

    def predict_proba(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        check_is_fitted(self, "params_")
        out = []
        for batch in encode(docs, self.vocab_, self.max_len, batch_size=self.batch_size):
            probs, _ = forward(self.params_, batch, train_mode=False, dropout_rate=self.dropout)
            out.append(probs)
        return np.vstack(out)

    def predict(self, docs: Sequence[Sequence[str]]) -> list[SentimentLabel]:
        probs = self.predict_proba(docs)
        return [self.class_order_[i] for i in np.argmax(probs, axis=1)]

    def predict_one(self, tokens: Sequence[str]) -> tuple[SentimentLabel, np.ndarray]:
        scores = self.predict_proba([tokens])[0]
        return self.class_order_[int(np.argmax(scores))], scores

    # -- persistence ----------------------------------------------------------

    def to_obj(self) -> dict:
        check_is_fitted(self, "params_")
        return {
            "kind": self.kind,
            "class_order": [label.value for label in self.class_order_],
            "config": self.get_params(),
            "vocab": self.vocab_,
            "shapes": {k: list(v.shape) for k, v in self.params_.items()},
            "arrays": {k: [repr(float(x)) for x in v.ravel()] for k, v in self.params_.items()},
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "BiLstmClassifier":
        model = cls(**obj.get("config", {}))
        model.class_order_ = tuple(SentimentLabel(v) for v in obj["class_order"])
        model.vocab_ = {str(k): int(v) for k, v in obj["vocab"].items()}
        params = {}
        for key, shape in obj["shapes"].items():
            flat = np.array([float(x) for x in obj["arrays"][key]])
            params[key] = flat.reshape(shape)
        model.params_ = params
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_obj(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BiLstmClassifier":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed JSON ({exc.msg})") from None
        return cls.from_obj(obj)
