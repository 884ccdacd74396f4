import numpy as np
import pytest

from kurdsent.base import DataError
from kurdsent.corpus import SentimentLabel
from kurdsent.neural import (
    PAD_ID,
    UNK_ID,
    BiLstmClassifier,
    SequenceBatch,
    build_vocab,
    encode,
    encode_doc,
    forward,
    init_params,
    loss_and_grads,
    pad_batch,
)

P, N, U = SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL


def shrunken_model(seed=0, vocab_size=7, embed=5, h1=3, h2=2, n_classes=3):
    rng = np.random.default_rng(seed)
    return init_params(rng, vocab_size, embed, h1, h2, n_classes)


def shrunken_batch(seed=1, B=2, L=4, vocab_size=7):
    rng = np.random.default_rng(seed)
    ids = rng.integers(1, vocab_size, size=(B, L))
    lengths = np.array([L, L - 1])
    ids[1, L - 1 :] = PAD_ID
    labels = rng.integers(0, 3, size=B)
    return SequenceBatch(token_ids=ids, lengths=lengths, labels=labels)


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


def test_encode_empty_doc_becomes_unknown():
    vocab = {"a": 2}
    assert encode_doc([], vocab, max_len=5) == [UNK_ID]


def test_encode_pads_and_truncates():
    vocab = build_vocab([["a", "b", "c"]])
    assert encode_doc(["a", "b", "c"], vocab, max_len=5) == [2, 3, 4]
    assert encode_doc(list("abcabcabca"), vocab, max_len=5) == [2, 3, 4, 2, 3]
    batches = list(encode([["a", "b", "c"], ["a"]], vocab, max_len=5))
    batch = batches[0]
    assert batch.token_ids.shape == (2, 3)
    assert list(batch.lengths) == [3, 1]
    assert list(batch.token_ids[1]) == [2, PAD_ID, PAD_ID]


def test_build_vocab_reserves_ids():
    vocab = build_vocab([["x", "y"], ["y", "z"]])
    assert min(vocab.values()) == 2
    assert sorted(vocab.values()) == [2, 3, 4]


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------


def test_forward_rows_sum_to_one():
    params = shrunken_model()
    batch = shrunken_batch()
    probs, _ = forward(params, batch)
    assert probs.shape == (2, 3)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert ((probs > 0) & (probs < 1)).all()


def test_forward_zero_params_uniform():
    params = {k: np.zeros_like(v) for k, v in shrunken_model().items()}
    probs, _ = forward(params, shrunken_batch())
    assert np.allclose(probs, 1.0 / 3.0, atol=1e-12)


def test_forward_eval_mode_ignores_seed():
    params = shrunken_model()
    batch = shrunken_batch()
    a, _ = forward(params, batch, train_mode=False, seed=1)
    b, _ = forward(params, batch, train_mode=False, seed=999)
    assert np.array_equal(a, b)


def test_forward_train_mode_uses_seeded_dropout():
    params = shrunken_model()
    batch = shrunken_batch()
    a, _ = forward(params, batch, train_mode=True, seed=5)
    b, _ = forward(params, batch, train_mode=True, seed=5)
    c, _ = forward(params, batch, train_mode=True, seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_forward_padding_is_inert():
    params = shrunken_model()
    ids = np.array([[1, 2, 3]])
    lengths = np.array([3])
    short = SequenceBatch(np.array([[1, 2, 3]]), lengths)
    padded = SequenceBatch(np.array([[1, 2, 3, PAD_ID, PAD_ID]]), lengths)
    a, _ = forward(params, short)
    b, _ = forward(params, padded)
    assert np.allclose(a, b, atol=1e-15)


def test_forward_bidirectional_symmetry():
    """Reversing sequences and swapping direction parameters (including the
    stacked layer's input halves and the readout halves) gives identical
    probabilities."""
    params = shrunken_model()
    h1 = params["U1f"].shape[0]
    h2 = params["U2f"].shape[0]
    swapped = dict(params)
    for layer in ("1", "2"):
        for kind in ("W", "U", "b"):
            swapped[f"{kind}{layer}f"], swapped[f"{kind}{layer}b"] = (
                params[f"{kind}{layer}b"].copy(),
                params[f"{kind}{layer}f"].copy(),
            )
    # layer 2 consumes [forward; backward] halves of layer 1's output
    for direction in ("f", "b"):
        W = swapped[f"W2{direction}"]
        swapped[f"W2{direction}"] = np.vstack([W[h1:], W[:h1]])
    # the dense layer reads [final-forward; first-backward]
    out_W = swapped["out_W"]
    swapped["out_W"] = np.vstack([out_W[h2:], out_W[:h2]])

    ids = np.array([[1, 4, 2, 5], [3, 6, 1, PAD_ID]])
    lengths = np.array([4, 3])
    batch = SequenceBatch(ids, lengths)
    reversed_ids = ids.copy()
    for row, n in enumerate(lengths):
        reversed_ids[row, :n] = ids[row, :n][::-1]
    reversed_batch = SequenceBatch(reversed_ids, lengths)

    base, _ = forward(params, batch)
    mirrored, _ = forward(swapped, reversed_batch)
    assert np.allclose(base, mirrored, atol=1e-12)


def test_forward_nonfinite_detection():
    params = shrunken_model()
    params["emb"][1] = np.nan
    with pytest.raises(DataError, match="step"):
        forward(params, shrunken_batch())


# ---------------------------------------------------------------------------
# Loss and gradients
# ---------------------------------------------------------------------------


def test_loss_uniform_is_ln3():
    params = {k: np.zeros_like(v) for k, v in shrunken_model().items()}
    batch = shrunken_batch()
    loss, _ = loss_and_grads(params, batch, train_mode=False)
    assert loss == pytest.approx(np.log(3.0), abs=1e-12)


def test_loss_duplicated_batch_unchanged():
    params = shrunken_model()
    batch = shrunken_batch()
    doubled = SequenceBatch(
        np.vstack([batch.token_ids, batch.token_ids]),
        np.concatenate([batch.lengths, batch.lengths]),
        np.concatenate([batch.labels, batch.labels]),
    )
    loss1, grads1 = loss_and_grads(params, batch, dropout_rate=0.0)
    loss2, grads2 = loss_and_grads(params, doubled, dropout_rate=0.0)
    assert loss2 == pytest.approx(loss1, abs=1e-12)
    for key in grads1:
        assert np.allclose(grads1[key], grads2[key], atol=1e-12)


def gradient_check(dropout_rate, seed, eps=1e-5, tol=1e-4):
    # The relative-error denominator is floored at 1e-6: central differences
    # of a ~1.0 loss at this eps carry ~1e-11 of float64 roundoff, which would
    # dominate the ratio on near-zero gradient entries no matter how exact the
    # backward pass is.
    params = shrunken_model(seed=3)
    batch = shrunken_batch(seed=4)

    def loss_fn():
        loss, _ = loss_and_grads(
            params, batch, seed=seed, dropout_rate=dropout_rate, train_mode=True
        )
        return loss

    _, grads = loss_and_grads(params, batch, seed=seed, dropout_rate=dropout_rate, train_mode=True)
    worst = {}
    for key, array in params.items():
        flat = array.ravel()
        grad_flat = grads[key].ravel()
        worst_rel = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_fn()
            flat[i] = orig - eps
            down = loss_fn()
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            scale = max(abs(numeric), abs(grad_flat[i]), 1e-6)
            worst_rel = max(worst_rel, abs(numeric - grad_flat[i]) / scale)
        worst[key] = worst_rel
    assert all(rel < tol for rel in worst.values()), worst
    return worst


def test_gradient_check_no_dropout():
    gradient_check(dropout_rate=0.0, seed=0)


def test_gradient_check_with_dropout_mask_fixed():
    gradient_check(dropout_rate=0.3, seed=11)


def test_loss_requires_labels():
    params = shrunken_model()
    batch = shrunken_batch()
    batch.labels = None
    with pytest.raises(DataError):
        loss_and_grads(params, batch)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


MARKERS = {P: "baş", N: "xirap", U: "asayî"}


def marker_dataset(rng, n):
    fillers = [f"w{i}" for i in range(30)]
    docs, labels = [], []
    for i in range(n):
        label = [P, N, U][i % 3]
        tokens = [fillers[rng.integers(0, len(fillers))] for _ in range(int(rng.integers(3, 7)))]
        tokens.insert(int(rng.integers(0, len(tokens) + 1)), MARKERS[label])
        docs.append(tokens)
        labels.append(label)
    return docs, labels


def small_bilstm(**overrides):
    config = dict(
        embed_dim=12, hidden1=8, hidden2=6, dropout=0.1, learning_rate=0.02,
        batch_size=8, epochs=30, seed=0, max_len=12,
    )
    config.update(overrides)
    return BiLstmClassifier(**config)


def test_bilstm_learns_marker_task():
    rng = np.random.default_rng(0)
    docs, labels = marker_dataset(rng, 40)
    model = small_bilstm().fit(docs, labels)
    train_acc = np.mean([pred == ref for pred, ref in zip(model.predict(docs), labels)])
    assert train_acc >= 0.95


def test_bilstm_deterministic():
    rng = np.random.default_rng(1)
    docs, labels = marker_dataset(rng, 21)
    a = small_bilstm(epochs=3).fit(docs, labels)
    b = small_bilstm(epochs=3).fit(docs, labels)
    for key in a.params_:
        assert np.array_equal(a.params_[key], b.params_[key])


def test_bilstm_single_class():
    docs = [["a", "b"], ["b", "c"], ["c", "a"], ["a"]]
    labels = [N, N, N, N]
    model = small_bilstm(epochs=2).fit(docs, labels)
    assert model.predict([["zzz"], ["a", "c"]]) == [N, N]


def test_bilstm_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    docs, labels = marker_dataset(rng, 15)
    model = small_bilstm(epochs=2).fit(docs, labels)
    path = tmp_path / "bilstm.json"
    model.save(path)
    loaded = BiLstmClassifier.load(path)
    assert loaded.vocab_ == model.vocab_
    for key in model.params_:
        assert np.array_equal(loaded.params_[key], model.params_[key])
    assert loaded.predict(docs) == model.predict(docs)


def test_bilstm_predict_contract():
    rng = np.random.default_rng(3)
    docs, labels = marker_dataset(rng, 15)
    model = small_bilstm(epochs=2).fit(docs, labels)
    label, scores = model.predict_one(["baş", "w1"])
    assert label in model.class_order_
    assert scores.shape == (3,)
    assert scores.sum() == pytest.approx(1.0, abs=1e-9)
