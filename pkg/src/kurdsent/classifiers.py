"""Classical classifiers over sparse TF-IDF vectors.

Four learners share one predict contract (label plus per-class scores):
multinomial logistic regression, one-vs-rest linear SVM, an entropy-criterion
decision tree, and a bagged random forest. Everything is deterministic given
(data order, seed, config); the linear models additionally sort training
points into a canonical order so their result does not depend on input
ordering at all.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .base import DataError, Estimator, check_is_fitted
from .corpus import CLASS_ORDER, SentimentLabel
from .features import SparseVector, vectors_to_csr


def _present_classes(y: Sequence[SentimentLabel]) -> tuple[SentimentLabel, ...]:
    present = set(y)
    return tuple(label for label in CLASS_ORDER if label in present)


def _encode_labels(
    y: Sequence[SentimentLabel], class_order: Sequence[SentimentLabel]
) -> np.ndarray:
    index = {label: i for i, label in enumerate(class_order)}
    try:
        return np.array([index[label] for label in y], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"label {exc.args[0]} not in class order {class_order}") from None


def _check_X_y(X: Sequence[SparseVector], y: Sequence[SentimentLabel]) -> None:
    if len(X) == 0:
        raise DataError("empty training set")
    if len(X) != len(y):
        raise DataError(f"got {len(X)} vectors but {len(y)} labels")


def _canonical_order(X: Sequence[SparseVector], y_idx: np.ndarray) -> list[int]:
    # Content-based ordering: training becomes invariant to input permutation.
    return sorted(range(len(X)), key=lambda i: (y_idx[i], X[i].entries))


def entropy(counts: np.ndarray) -> float:
    """Shannon entropy in nats of a count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


# ---------------------------------------------------------------------------
# Multinomial logistic regression
# ---------------------------------------------------------------------------


def softmax_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: sp.csr_matrix, y_idx: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed cross-entropy of the softmax plus ``l2 * ||W||_F^2``.

    Returns (loss, grad_W, grad_b); the bias is not regularized.
    """
    n = X.shape[0]
    Z = X @ W.T + b
    zmax = Z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(Z - zmax).sum(axis=1))
    loss = float(lse.sum() - Z[np.arange(n), y_idx].sum() + l2 * (W * W).sum())
    P = np.exp(Z - lse[:, None])
    P[np.arange(n), y_idx] -= 1.0
    grad_W = np.asarray(X.T @ P).T + 2.0 * l2 * W
    grad_b = P.sum(axis=0)
    return loss, grad_W, grad_b


def _lbfgs_minimize(fun, x0: np.ndarray, max_iter: int, tol: float, memory: int = 10):
    """Limited-memory BFGS with Armijo backtracking on a smooth objective.

    Stops when the gradient infinity norm drops below ``tol`` or after
    ``max_iter`` accepted steps.
    """
    x = x0.copy()
    f, g = fun(x)
    if not np.isfinite(f):
        raise DataError("non-finite loss at the initial point")
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    for _ in range(max_iter):
        if np.max(np.abs(g)) < tol:
            break
        q = g.copy()
        alphas = []
        for s, yv, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q -= a * yv
        if y_hist:
            gamma = np.dot(s_hist[-1], y_hist[-1]) / np.dot(y_hist[-1], y_hist[-1])
        else:
            gamma = 1.0 / max(1.0, float(np.sqrt(np.dot(g, g))))
        q *= gamma
        for (s, yv, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            beta = rho * np.dot(yv, q)
            q += s * (a - beta)
        direction = -q
        slope = np.dot(g, direction)
        if slope >= 0.0:  # curvature estimate unusable; fall back to steepest descent
            direction = -g
            slope = -np.dot(g, g)
        step = 1.0
        accepted = False
        for _ in range(60):
            x_new = x + step * direction
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        s = x_new - x
        yv = g_new - g
        sy = np.dot(s, yv)
        if sy > 1e-12:
            s_hist.append(s)
            y_hist.append(yv)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        x, f, g = x_new, f_new, g_new
    if not np.isfinite(f):
        raise DataError("optimization diverged to a non-finite loss")
    return x, f, g


class LogisticRegressionClassifier(Estimator):
    """Softmax regression trained with L-BFGS from zero initialization.

    ``l2_strength=None`` picks ``1/n`` at fit time.
    """

    kind = "logistic_regression"

    def __init__(
        self,
        l2_strength: Optional[float] = None,
        max_iter: int = 500,
        tol: float = 1e-6,
        seed: int = 0,
    ):
        self.l2_strength = l2_strength
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed
        self.weights_: Optional[np.ndarray] = None
        self.bias_: Optional[np.ndarray] = None
        self.class_order_: Optional[tuple[SentimentLabel, ...]] = None
        self.dim_: Optional[int] = None

    def fit(self, X: Sequence[SparseVector], y: Sequence[SentimentLabel]) -> "LogisticRegressionClassifier":
        _check_X_y(X, y)
        class_order = _present_classes(y)
        y_idx = _encode_labels(y, class_order)
        order = _canonical_order(X, y_idx)
        Xs = vectors_to_csr([X[i] for i in order])
        ys = y_idx[order]
        n, d = Xs.shape
        K = len(class_order)
        l2 = (1.0 / n) if self.l2_strength is None else float(self.l2_strength)

        def fun(flat: np.ndarray):
            W = flat[: K * d].reshape(K, d)
            b = flat[K * d :]
            loss, gW, gb = softmax_loss_and_grad(W, b, Xs, ys, l2)
            return loss, np.concatenate([gW.ravel(), gb])

        x0 = np.zeros(K * d + K)
        x_opt, _, _ = _lbfgs_minimize(fun, x0, max_iter=self.max_iter, tol=self.tol)
        self.weights_ = x_opt[: K * d].reshape(K, d)
        self.bias_ = x_opt[K * d :]
        self.class_order_ = class_order
        self.dim_ = d
        return self

    def decision_function(self, X: Sequence[SparseVector]) -> np.ndarray:
        check_is_fitted(self, "weights_")
        Xm = vectors_to_csr(X, dim=self.dim_)
        return np.asarray(Xm @ self.weights_.T + self.bias_)

    def predict_one(self, x: SparseVector) -> tuple[SentimentLabel, np.ndarray]:
        scores = self.decision_function([x])[0]
        return self.class_order_[int(np.argmax(scores))], scores

    def predict(self, X: Sequence[SparseVector]) -> list[SentimentLabel]:
        scores = self.decision_function(X)
        return [self.class_order_[i] for i in np.argmax(scores, axis=1)]

    def to_obj(self) -> dict:
        check_is_fitted(self, "weights_")
        return _linear_to_obj(self)

    @classmethod
    def from_obj(cls, obj: dict) -> "LogisticRegressionClassifier":
        return _linear_from_obj(cls, obj)


# ---------------------------------------------------------------------------
# Linear SVM (one-vs-rest hinge loss)
# ---------------------------------------------------------------------------


class LinearSvmClassifier(Estimator):
    """One-vs-rest linear SVM trained by deterministic subgradient descent.

    Objective per class k: mean hinge loss against the +/-1 reduction plus
    ``l2_strength * ||w_k||^2``. Steps decay as ``1/sqrt(t)`` and the second
    half of the iterates is averaged. Training data is canonically sorted, so
    the fitted model is invariant to input permutation for a fixed seed.
    """

    kind = "linear_svm"

    def __init__(
        self,
        l2_strength: Optional[float] = None,
        max_iter: int = 2000,
        step_scale: float = 20.0,
        seed: int = 0,
    ):
        self.l2_strength = l2_strength
        self.max_iter = max_iter
        self.step_scale = step_scale
        self.seed = seed
        self.weights_: Optional[np.ndarray] = None
        self.bias_: Optional[np.ndarray] = None
        self.class_order_: Optional[tuple[SentimentLabel, ...]] = None
        self.dim_: Optional[int] = None

    def fit(self, X: Sequence[SparseVector], y: Sequence[SentimentLabel]) -> "LinearSvmClassifier":
        _check_X_y(X, y)
        class_order = _present_classes(y)
        y_idx = _encode_labels(y, class_order)
        order = _canonical_order(X, y_idx)
        Xs = vectors_to_csr([X[i] for i in order])
        ys = y_idx[order]
        n, d = Xs.shape
        K = len(class_order)
        l2 = (1.0 / n) if self.l2_strength is None else float(self.l2_strength)

        S = -np.ones((n, K))
        S[np.arange(n), ys] = 1.0
        W = np.zeros((K, d))
        b = np.zeros(K)
        W_avg = np.zeros_like(W)
        b_avg = np.zeros_like(b)
        averaged = 0
        avg_start = self.max_iter // 2
        for t in range(1, self.max_iter + 1):
            margins = 1.0 - S * (Xs @ W.T + b)
            active = (margins > 0.0).astype(np.float64)
            coeff = S * active
            grad_W = -np.asarray(Xs.T @ coeff).T / n + 2.0 * l2 * W
            grad_b = -coeff.sum(axis=0) / n
            step = self.step_scale / np.sqrt(t)
            W = W - step * grad_W
            b = b - step * grad_b
            if t > avg_start:
                W_avg += W
                b_avg += b
                averaged += 1
        if not np.isfinite(W_avg).all() or not np.isfinite(b_avg).all():
            raise DataError("SVM training diverged to non-finite weights")
        self.weights_ = W_avg / averaged
        self.bias_ = b_avg / averaged
        self.class_order_ = class_order
        self.dim_ = d
        return self

    decision_function = LogisticRegressionClassifier.decision_function
    predict_one = LogisticRegressionClassifier.predict_one
    predict = LogisticRegressionClassifier.predict

    def to_obj(self) -> dict:
        check_is_fitted(self, "weights_")
        return _linear_to_obj(self)

    @classmethod
    def from_obj(cls, obj: dict) -> "LinearSvmClassifier":
        return _linear_from_obj(cls, obj)


def _linear_to_obj(model) -> dict:
    return {
        "kind": model.kind,
        "class_order": [label.value for label in model.class_order_],
        "dim": model.dim_,
        "params": model.get_params(),
        "weights": [[repr(float(v)) for v in row] for row in model.weights_],
        "bias": [repr(float(v)) for v in model.bias_],
    }


def _linear_from_obj(cls, obj: dict):
    model = cls(**obj.get("params", {}))
    model.class_order_ = tuple(SentimentLabel(v) for v in obj["class_order"])
    model.dim_ = int(obj["dim"])
    model.weights_ = np.array([[float(v) for v in row] for row in obj["weights"]])
    model.bias_ = np.array([float(v) for v in obj["bias"]])
    return model


# ---------------------------------------------------------------------------
# Decision tree (CART, entropy criterion)
# ---------------------------------------------------------------------------


class _Tree:
    """Flat array representation: feature < 0 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "counts")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[np.ndarray] = []

    def add_node(self, counts: np.ndarray) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(counts)
        return len(self.feature) - 1

    def predict_counts(self, entries: dict[int, float]) -> np.ndarray:
        i = 0
        while self.feature[i] >= 0:
            value = entries.get(self.feature[i], 0.0)
            i = self.left[i] if value <= self.threshold[i] else self.right[i]
        return self.counts[i]

    def n_leaves(self) -> int:
        return sum(1 for f in self.feature if f < 0)

    def depth(self) -> int:
        depths = [0] * len(self.feature)
        best = 0
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
            else:
                best = max(best, depths[i])
        return best


def _row_entropy(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals
        terms = np.where(counts > 0, p * np.log(p), 0.0)
    return -terms.sum(axis=1)


def _candidates_from_sorted(v, pref, offs, starts, sizes, zero_counts, n0):
    """Split candidates for columns whose implicit zeros sort first.

    ``v``/``pref`` are value and one-hot-prefix arrays sorted by (column,
    value); returns per-candidate (column, threshold, left-count-matrix).
    """
    n_cols = len(sizes)
    cand_col: list[np.ndarray] = []
    cand_thr: list[np.ndarray] = []
    cand_left: list[np.ndarray] = []
    # boundary between the zero block and the smallest stored value
    with_zero = np.flatnonzero((n0 > 0) & (sizes > 0))
    if with_zero.size:
        first_vals = v[starts[with_zero]]
        keep = first_vals > 0.0  # callers guarantee this unless the column is fully stored
        cols_a = with_zero[keep]
        if cols_a.size:
            cand_col.append(cols_a)
            cand_thr.append(v[starts[cols_a]] / 2.0)
            cand_left.append(zero_counts[cols_a])
    # boundaries between consecutive distinct stored values of one column
    if len(v) > 1:
        col_of = np.repeat(np.arange(n_cols), sizes)
        same_col = col_of[:-1] == col_of[1:]
        changed = v[:-1] != v[1:]
        pos = np.flatnonzero(same_col & changed)
        if pos.size:
            cols_b = col_of[pos]
            cand_col.append(cols_b)
            cand_thr.append((v[pos] + v[pos + 1]) / 2.0)
            cand_left.append(zero_counts[cols_b] + pref[pos] - offs[cols_b])
    if not cand_col:
        return None
    return np.concatenate(cand_col), np.concatenate(cand_thr), np.vstack(cand_left)


def _best_split_fast(mat: sp.csc_matrix, y_node: np.ndarray, node_counts: np.ndarray, n_node: int, K: int):
    """Vectorized split search over every column of ``mat``.

    Valid when all stored values are positive (implicit zeros sort first) or
    when every column is fully stored.
    """
    data, indices, indptr = mat.data, mat.indices, mat.indptr
    sizes = np.diff(indptr)
    m = data.size
    if m == 0:
        return None
    col_of = np.repeat(np.arange(mat.shape[1]), sizes)
    order = np.lexsort((data, col_of))
    v = data[order]
    lab = y_node[indices[order]]
    onehot = np.zeros((m, K))
    onehot[np.arange(m), lab] = 1.0
    pref = np.cumsum(onehot, axis=0)
    starts = np.concatenate([[0], np.cumsum(sizes)])[:-1]
    ends = starts + sizes
    offs = np.zeros((mat.shape[1], K))
    nonzero_cols = sizes > 0
    offs[nonzero_cols & (starts > 0)] = pref[starts[nonzero_cols & (starts > 0)] - 1]
    col_counts = np.zeros((mat.shape[1], K))
    col_counts[nonzero_cols] = pref[ends[nonzero_cols] - 1] - offs[nonzero_cols]
    zero_counts = node_counts[None, :] - col_counts
    n0 = n_node - sizes

    cands = _candidates_from_sorted(v, pref, offs, starts, sizes, zero_counts, n0)
    if cands is None:
        return None
    cols, thrs, left = cands
    # evaluate candidates in (feature, threshold) order so the first minimum
    # realizes the documented tie-break
    eval_order = np.lexsort((thrs, cols))
    cols, thrs, left = cols[eval_order], thrs[eval_order], left[eval_order]
    right = node_counts[None, :] - left
    n_left = left.sum(axis=1)
    n_right = n_node - n_left
    weighted = (n_left * _row_entropy(left) + n_right * _row_entropy(right)) / n_node
    best = int(np.argmin(weighted))
    return int(cols[best]), float(thrs[best]), float(weighted[best])


def _best_split_general(mat: sp.csc_matrix, y_node: np.ndarray, node_counts: np.ndarray, n_node: int, K: int):
    """Per-column split search with materialized zeros; handles any values."""
    best = None
    for j in range(mat.shape[1]):
        start, end = mat.indptr[j], mat.indptr[j + 1]
        column = np.zeros(n_node)
        column[mat.indices[start:end]] = mat.data[start:end]
        order = np.argsort(column, kind="stable")
        v = column[order]
        lab = y_node[order]
        changed = np.flatnonzero(v[:-1] != v[1:])
        if changed.size == 0:
            continue
        onehot = np.zeros((n_node, K))
        onehot[np.arange(n_node), lab] = 1.0
        pref = np.cumsum(onehot, axis=0)
        left = pref[changed]
        thrs = (v[changed] + v[changed + 1]) / 2.0
        right = node_counts[None, :] - left
        n_left = left.sum(axis=1)
        n_right = n_node - n_left
        weighted = (n_left * _row_entropy(left) + n_right * _row_entropy(right)) / n_node
        i = int(np.argmin(weighted))
        key = (float(weighted[i]), j, float(thrs[i]))
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return best[1], best[2], best[0]


def _best_split(mat: sp.csc_matrix, y_node: np.ndarray, node_counts: np.ndarray, n_node: int, K: int):
    sizes = np.diff(mat.indptr)
    if mat.data.size == 0:
        return None
    if mat.data.min() > 0.0 or (sizes == n_node).all():
        return _best_split_fast(mat, y_node, node_counts, n_node, K)
    return _best_split_general(mat, y_node, node_counts, n_node, K)


def _grow_tree(
    Xcsr: sp.csr_matrix,
    y: np.ndarray,
    K: int,
    min_samples_split: int,
    max_features: Optional[int],
    rng: Optional[np.random.Generator],
) -> _Tree:
    tree = _Tree()
    n, d = Xcsr.shape
    root_rows = np.arange(n)
    root = tree.add_node(np.bincount(y, minlength=K))
    stack: list[tuple[int, np.ndarray]] = [(root, root_rows)]
    while stack:
        node, rows = stack.pop()
        counts = tree.counts[node]
        n_node = len(rows)
        if n_node < min_samples_split or int((counts > 0).sum()) <= 1:
            continue
        sub = Xcsr[rows].tocsc()
        y_node = y[rows]
        split = None
        if max_features is not None and max_features < d:
            sampled = np.sort(rng.choice(d, size=max_features, replace=False))
            split = _best_split(sub[:, sampled], y_node, counts, n_node, K)
            if split is not None:
                split = (int(sampled[split[0]]), split[1], split[2])
            else:
                # no usable split among the sampled features; examine them all
                # so growth still stops only at purity or size
                split = _best_split(sub, y_node, counts, n_node, K)
        else:
            split = _best_split(sub, y_node, counts, n_node, K)
        if split is None:
            continue
        feature, threshold, _ = split
        start, end = sub.indptr[feature], sub.indptr[feature + 1]
        mask = np.full(n_node, 0.0 <= threshold)
        mask[sub.indices[start:end]] = sub.data[start:end] <= threshold
        left_rows = rows[mask]
        right_rows = rows[~mask]
        left = tree.add_node(np.bincount(y[left_rows], minlength=K))
        right = tree.add_node(np.bincount(y[right_rows], minlength=K))
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, right_rows))
        stack.append((left, left_rows))
    return tree


def _tree_to_obj(tree: _Tree) -> dict:
    return {
        "feature": tree.feature,
        "threshold": [repr(float(t)) for t in tree.threshold],
        "left": tree.left,
        "right": tree.right,
        "counts": [[int(c) for c in row] for row in tree.counts],
    }


def _tree_from_obj(obj: dict) -> _Tree:
    tree = _Tree()
    tree.feature = [int(f) for f in obj["feature"]]
    tree.threshold = [float(t) for t in obj["threshold"]]
    tree.left = [int(i) for i in obj["left"]]
    tree.right = [int(i) for i in obj["right"]]
    tree.counts = [np.array(row, dtype=np.int64) for row in obj["counts"]]
    return tree


class DecisionTreeClassifier(Estimator):
    """CART with binary ``x[f] <= threshold`` splits and entropy impurity.

    Thresholds are midpoints between consecutive distinct observed values;
    absent features count as zero. Growth stops at purity or when a node has
    fewer than ``min_samples_split`` samples; ties between splits resolve to
    the lowest impurity, then lowest feature index, then lowest threshold.
    """

    kind = "decision_tree"

    def __init__(
        self,
        criterion: str = "entropy",
        min_samples_split: int = 2,
        feature_subsample: str = "all",
        seed: int = 0,
    ):
        if criterion != "entropy":
            raise ValueError(f"unsupported criterion {criterion!r}")
        self.criterion = criterion
        self.min_samples_split = min_samples_split
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.tree_: Optional[_Tree] = None
        self.class_order_: Optional[tuple[SentimentLabel, ...]] = None
        self.dim_: Optional[int] = None

    def fit(self, X: Sequence[SparseVector], y: Sequence[SentimentLabel]) -> "DecisionTreeClassifier":
        _check_X_y(X, y)
        class_order = _present_classes(y)
        y_idx = _encode_labels(y, class_order)
        Xm = vectors_to_csr(X)
        K = len(class_order)
        max_features = None
        if self.feature_subsample == "sqrt":
            max_features = int(np.ceil(np.sqrt(Xm.shape[1])))
        elif self.feature_subsample != "all":
            raise ValueError(f"unsupported feature_subsample {self.feature_subsample!r}")
        rng = np.random.default_rng(self.seed)
        self.tree_ = _grow_tree(Xm, y_idx, K, self.min_samples_split, max_features, rng)
        self.class_order_ = class_order
        self.dim_ = Xm.shape[1]
        return self

    def predict_one(self, x: SparseVector) -> tuple[SentimentLabel, np.ndarray]:
        check_is_fitted(self, "tree_")
        if x.dim != self.dim_:
            raise ValueError(f"dimension mismatch: expected {self.dim_}, got {x.dim}")
        counts = self.tree_.predict_counts(dict(x.entries))
        scores = counts / counts.sum()
        return self.class_order_[int(np.argmax(scores))], scores

    def predict(self, X: Sequence[SparseVector]) -> list[SentimentLabel]:
        return [self.predict_one(x)[0] for x in X]

    def to_obj(self) -> dict:
        check_is_fitted(self, "tree_")
        return {
            "kind": self.kind,
            "class_order": [label.value for label in self.class_order_],
            "dim": self.dim_,
            "params": self.get_params(),
            "tree": _tree_to_obj(self.tree_),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "DecisionTreeClassifier":
        model = cls(**obj.get("params", {}))
        model.class_order_ = tuple(SentimentLabel(v) for v in obj["class_order"])
        model.dim_ = int(obj["dim"])
        model.tree_ = _tree_from_obj(obj["tree"])
        return model


class RandomForestClassifier(Estimator):
    """Bagged entropy trees with per-split sqrt feature subsampling.

    Every tree gets its own seed derived from (master seed, tree index), so
    the forest is bit-identical however many worker threads build it.
    Prediction is a majority vote with ties resolved by class order.
    """

    kind = "random_forest"

    def __init__(
        self,
        n_estimators: int = 30,
        criterion: str = "entropy",
        min_samples_split: int = 2,
        feature_subsample: str = "sqrt",
        bootstrap: bool = True,
        seed: int = 0,
        n_jobs: int = 1,
    ):
        if criterion != "entropy":
            raise ValueError(f"unsupported criterion {criterion!r}")
        self.n_estimators = n_estimators
        self.criterion = criterion
        self.min_samples_split = min_samples_split
        self.feature_subsample = feature_subsample
        self.bootstrap = bootstrap
        self.seed = seed
        self.n_jobs = n_jobs
        self.trees_: Optional[list[_Tree]] = None
        self.per_tree_seeds_: Optional[list[int]] = None
        self.class_order_: Optional[tuple[SentimentLabel, ...]] = None
        self.dim_: Optional[int] = None

    @staticmethod
    def tree_seed(master_seed: int, index: int) -> int:
        return int(np.random.SeedSequence((master_seed, index)).generate_state(1)[0])

    def fit(self, X: Sequence[SparseVector], y: Sequence[SentimentLabel]) -> "RandomForestClassifier":
        _check_X_y(X, y)
        class_order = _present_classes(y)
        y_idx = _encode_labels(y, class_order)
        Xm = vectors_to_csr(X)
        n, d = Xm.shape
        K = len(class_order)
        max_features = None
        if self.feature_subsample == "sqrt":
            max_features = int(np.ceil(np.sqrt(d)))
        elif self.feature_subsample != "all":
            raise ValueError(f"unsupported feature_subsample {self.feature_subsample!r}")
        self.per_tree_seeds_ = [self.tree_seed(self.seed, i) for i in range(self.n_estimators)]

        def fit_one(index: int) -> _Tree:
            rng = np.random.default_rng(self.per_tree_seeds_[index])
            if self.bootstrap:
                sample = rng.integers(0, n, size=n)
                Xb, yb = Xm[sample], y_idx[sample]
            else:
                Xb, yb = Xm, y_idx
            return _grow_tree(Xb, yb, K, self.min_samples_split, max_features, rng)

        if self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                self.trees_ = list(pool.map(fit_one, range(self.n_estimators)))
        else:
            self.trees_ = [fit_one(i) for i in range(self.n_estimators)]
        self.class_order_ = class_order
        self.dim_ = d
        return self

    def predict_one(self, x: SparseVector) -> tuple[SentimentLabel, np.ndarray]:
        check_is_fitted(self, "trees_")
        if x.dim != self.dim_:
            raise ValueError(f"dimension mismatch: expected {self.dim_}, got {x.dim}")
        entries = dict(x.entries)
        votes = np.zeros(len(self.class_order_))
        for tree in self.trees_:
            counts = tree.predict_counts(entries)
            votes[int(np.argmax(counts / counts.sum()))] += 1
        scores = votes / len(self.trees_)
        return self.class_order_[int(np.argmax(scores))], scores

    def predict(self, X: Sequence[SparseVector]) -> list[SentimentLabel]:
        return [self.predict_one(x)[0] for x in X]

    def to_obj(self) -> dict:
        check_is_fitted(self, "trees_")
        return {
            "kind": self.kind,
            "class_order": [label.value for label in self.class_order_],
            "dim": self.dim_,
            "params": self.get_params(),
            "per_tree_seeds": self.per_tree_seeds_,
            "trees": [_tree_to_obj(t) for t in self.trees_],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "RandomForestClassifier":
        model = cls(**obj.get("params", {}))
        model.class_order_ = tuple(SentimentLabel(v) for v in obj["class_order"])
        model.dim_ = int(obj["dim"])
        model.per_tree_seeds_ = [int(s) for s in obj["per_tree_seeds"]]
        model.trees_ = [_tree_from_obj(t) for t in obj["trees"]]
        return model


# ---------------------------------------------------------------------------
# Model file round trip
# ---------------------------------------------------------------------------

MODEL_KINDS = {
    LogisticRegressionClassifier.kind: LogisticRegressionClassifier,
    LinearSvmClassifier.kind: LinearSvmClassifier,
    DecisionTreeClassifier.kind: DecisionTreeClassifier,
    RandomForestClassifier.kind: RandomForestClassifier,
}


def model_from_obj(obj: dict):
    kind = obj.get("kind")
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    return MODEL_KINDS[kind].from_obj(obj)


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_obj(), ensure_ascii=False), encoding="utf-8")


def load_model(path: str | Path):
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON ({exc.msg})") from None
    return model_from_obj(obj)
