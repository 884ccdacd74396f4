"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the checklist.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from kurdsent.annotation import krippendorff_alpha, value_sentiment5
from kurdsent.augment import (
    BalanceSpec,
    IdentityTranslator,
    LexiconTeacher,
    generate_silver,
    merge,
    upsample,
)
from kurdsent.classifiers import (
    DecisionTreeClassifier,
    LinearSvmClassifier,
    LogisticRegressionClassifier,
    RandomForestClassifier,
    softmax_loss_and_grad,
)
from kurdsent.corpus import CLASS_ORDER, Dataset, Document, SentimentLabel, load_jsonl, split_dataset
from kurdsent.evaluation import ConfusionMatrix, evaluate_predictions, metrics
from kurdsent.experiment import split_with_shared_gold_test
from kurdsent.features import TfidfVectorizer, dense_vector, vectors_to_csr
from kurdsent.cli import main as cli_main

from conftest import small_experiment_args
from test_annotation import oracle_alpha, random_campaign, records_from_units
from test_classifiers import random_consistent_dataset, separable_toy
from test_evaluation import oracle_metrics, random_labels
from test_neural import gradient_check

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "synthetic"

P, N, U = SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL


def _report(number: int, description: str) -> None:
    print(f"\n[acceptance] criterion {number}: PASS — {description}")


def test_criterion_01_krippendorff_oracle():
    start = time.time()
    rng = np.random.default_rng(20240101)
    checked = 0
    while checked < 200:
        units = random_campaign(rng)
        if not any(len(u) >= 2 for u in units):
            continue
        result = krippendorff_alpha(records_from_units(units), value_sentiment5)
        expected = oracle_alpha([[v.value for v in u] for u in units])
        if expected is None:
            assert result.alpha is None
        else:
            assert abs(result.alpha - expected) < 1e-12
        checked += 1
    elapsed = time.time() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    # perfect agreement yields exactly 1.0
    from kurdsent.annotation import Sentiment

    perfect = [[Sentiment.POSITIVE] * 2] * 3 + [[Sentiment.NEGATIVE] * 2] * 2
    result = krippendorff_alpha(records_from_units([list(u) for u in perfect]), value_sentiment5)
    assert result.alpha == 1.0
    _report(1, f"200 random campaigns match the pairwise oracle to 1e-12 in {elapsed:.2f}s; "
               "perfect agreement gives exactly 1.0")


def test_criterion_02_tfidf():
    import math

    model = TfidfVectorizer().fit([["a", "b"], ["a", "c"], ["a"]])
    assert abs(model.idf_[0] - 1.0) < 1e-9
    assert abs(model.idf_[1] - (math.log(2.0) + 1.0)) < 1e-9
    vec = model.transform_one(["a", "b"])
    raw = [1.0, math.log(2.0) + 1.0]
    norm = math.sqrt(sum(v * v for v in raw))
    assert abs(vec.entries[0][1] - raw[0] / norm) < 1e-9
    assert abs(vec.entries[1][1] - raw[1] / norm) < 1e-9

    rng = np.random.default_rng(7)
    docs = [[f"t{i}" for i in rng.integers(0, 300, size=rng.integers(1, 25))] for _ in range(400)]
    fitted = TfidfVectorizer().fit(docs)
    checked = 0
    for _ in range(1000):
        # indices up to 320 produce some tokens the model never saw
        doc = [f"t{i}" for i in rng.integers(0, 320, size=rng.integers(0, 25))]
        vec = fitted.transform_one(doc)
        if vec.entries:
            assert abs(vec.norm - 1.0) < 1e-12
            checked += 1
    assert checked > 800
    _report(2, f"worked example matches hand arithmetic to 1e-9; {checked} non-zero vectors "
               "have unit norm to 1e-12")


def test_criterion_03_convex_learners():
    X, y = separable_toy(margin=2.0, n_per_class=20)
    start = time.time()
    lr = LogisticRegressionClassifier().fit(X, y)
    lr_time = time.time() - start
    assert lr_time < 5.0
    assert all(pred == ref for pred, ref in zip(lr.predict(X), y))

    start = time.time()
    svm = LinearSvmClassifier().fit(X, y)
    svm_time = time.time() - start
    assert svm_time < 5.0
    assert all(pred == ref for pred, ref in zip(svm.predict(X), y))

    # analytic gradient vs central differences on a 5-point, 4-feature instance
    rng = np.random.default_rng(11)
    Xg = vectors_to_csr([dense_vector(rng.normal(size=4)) for _ in range(5)])
    yg = rng.integers(0, 3, size=5)
    W = rng.normal(size=(3, 4))
    b = rng.normal(size=3)
    _, gW, gb = softmax_loss_and_grad(W, b, Xg, yg, 0.1)
    eps = 1e-6
    worst = 0.0
    for arr, grad in ((W, gW), (b, gb)):
        flat, grad_flat = arr.ravel(), grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = softmax_loss_and_grad(W, b, Xg, yg, 0.1)[0]
            flat[i] = orig - eps
            down = softmax_loss_and_grad(W, b, Xg, yg, 0.1)[0]
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            worst = max(worst, abs(numeric - grad_flat[i]) / max(abs(numeric), abs(grad_flat[i]), 1e-8))
    assert worst < 1e-6
    _report(3, f"LR ({lr_time:.2f}s) and SVM ({svm_time:.2f}s) reach 100% on the separable toy set; "
               f"LR gradient matches central differences (worst rel {worst:.2e})")


def test_criterion_04_trees():
    rng = np.random.default_rng(44)
    for _ in range(3):
        X, y = random_consistent_dataset(rng, n=int(rng.integers(50, 201)))
        tree = DecisionTreeClassifier().fit(X, y)
        assert all(pred == ref for pred, ref in zip(tree.predict(X), y))

    X = [dense_vector(p) for p in ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))]
    y = [P, N, N, P]
    xor_tree = DecisionTreeClassifier().fit(X, y)
    assert xor_tree.predict(X) == y

    Xf, yf = random_consistent_dataset(rng, 150)
    serial = RandomForestClassifier(n_estimators=30, seed=12, n_jobs=1).fit(Xf, yf)
    threaded = RandomForestClassifier(n_estimators=30, seed=12, n_jobs=8).fit(Xf, yf)
    for ta, tb in zip(serial.trees_, threaded.trees_):
        assert ta.feature == tb.feature
        assert ta.threshold == tb.threshold
        assert all(np.array_equal(ca, cb) for ca, cb in zip(ta.counts, tb.counts))
    assert serial.predict(Xf) == threaded.predict(Xf)
    _report(4, "DT is exact on consistent data and solves XOR; RF is bit-identical across 1 and 8 threads")


def test_criterion_05_bilstm_gradient_check():
    start = time.time()
    worst = gradient_check(dropout_rate=0.3, seed=5)
    elapsed = time.time() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"
    top = max(worst.values())
    assert top < 1e-4
    _report(5, f"BPTT matches central differences on every parameter block "
               f"(worst rel {top:.2e}) in {elapsed:.1f}s")


def test_criterion_06_metric_identity():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        counts = rng.integers(0, 50, size=(3, 3))
        if counts.sum() == 0:
            counts[1, 1] = 1
        rep = metrics(ConfusionMatrix(counts=counts))
        assert abs(rep.weighted[1] - rep.accuracy) < 1e-12
    for _ in range(100):
        n = int(rng.integers(1, 80))
        refs = random_labels(rng, n)
        preds = random_labels(rng, n)
        rep = evaluate_predictions(refs, preds)
        per_class, accuracy = oracle_metrics(refs, preds)
        assert abs(rep.accuracy - accuracy) < 1e-12
        for label, (precision, recall, f1, support) in per_class.items():
            got = rep.per_class[label]
            assert abs(got.precision - precision) < 1e-12
            assert abs(got.recall - recall) < 1e-12
            assert abs(got.f1 - f1) < 1e-12
            assert got.support == support
    _report(6, "weighted recall equals accuracy to 1e-12 on 1000 random matrices; "
               "metrics match the per-pair oracle on 100 random prediction sets")


def test_criterion_07_balancing_arithmetic():
    gold_docs, silver_docs = [], []
    for label, count in zip(CLASS_ORDER, (292, 639, 254)):
        for i in range(count):
            gold_docs.append(Document.from_raw(id=f"g-{label.value}-{i}", text=f"وشە {i}", label=label))
    for label in CLASS_ORDER:
        for i in range(1500):
            silver_docs.append(
                Document.from_raw(id=f"s-{label.value}-{i}", text=f"وشە {i}", label=label,
                                  meta={"confidence": (i % 7) / 7})
            )
    gold, silver = Dataset(gold_docs), Dataset(silver_docs)

    up = upsample(gold, silver, target_per_class=700, seed=3)
    assert tuple(up.class_counts.values()) == (700, 700, 700)
    assert len(up) == 2100
    assert gold.ids <= up.ids

    merged = merge(gold, silver, target_per_class=1700, seed=3)
    assert tuple(merged.class_counts.values()) == (1700, 1700, 1700)
    assert len(merged) == 5100
    assert gold.ids <= merged.ids
    _report(7, "upsample(700) gives 2100 and merge(1700) gives 5100 with all gold retained")


def test_criterion_08_directional_improvement():
    from kurdsent.features import tokenize

    start = time.time()
    gold = load_jsonl(DATA_DIR / "gold.jsonl")
    pool = load_jsonl(DATA_DIR / "pool.jsonl")
    teacher = LexiconTeacher.from_tsv(DATA_DIR / "lexicon.tsv")
    silver = generate_silver(
        pool, IdentityTranslator(), teacher, BalanceSpec(1500, 500, seed=1), exclude_ids=gold.ids
    )

    def macro_f1(train, test, model_cls, seed):
        train_tokens = [tokenize(d.normalized_text) for d in train]
        test_tokens = [tokenize(d.normalized_text) for d in test]
        tfidf = TfidfVectorizer().fit(train_tokens)
        model = model_cls(seed=seed).fit(tfidf.transform(train_tokens), [d.label for d in train])
        preds = model.predict(tfidf.transform(test_tokens))
        return evaluate_predictions([d.label for d in test], preds).macro[2]

    scores: dict[tuple[str, str], list[float]] = {}
    for seed in range(10):
        gold_train, gold_test = split_dataset(gold, 0.8, seed)
        trains = {"baseline": gold_train}
        up = upsample(gold, silver, 700, seed)
        mg = merge(gold, silver, 1700, seed)
        trains["upsample"], _ = split_with_shared_gold_test(up, gold_test, 0.8, seed)
        trains["merged"], _ = split_with_shared_gold_test(mg, gold_test, 0.8, seed)
        for name, cls in (("lr", LogisticRegressionClassifier), ("svm", LinearSvmClassifier)):
            for system, train in trains.items():
                scores.setdefault((name, system), []).append(macro_f1(train, gold_test, cls, seed))
    elapsed = time.time() - start
    assert elapsed < 180.0, f"took {elapsed:.1f}s"
    summary = []
    for name in ("lr", "svm"):
        means = [float(np.mean(scores[(name, system)])) for system in ("baseline", "upsample", "merged")]
        assert means[0] < means[1] < means[2], f"{name}: {means}"
        summary.append(f"{name} {means[0]:.3f}<{means[1]:.3f}<{means[2]:.3f}")
    _report(8, f"mean macro-F1 over 10 seeds strictly improves for both models "
               f"({'; '.join(summary)}) in {elapsed:.0f}s")


def test_criterion_09_experiment_determinism(tmp_path, small_bundle_dir, capsys):
    out_a, out_b, out_c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    overrides = {"models": "lr,svm,dt,rf,bilstm"}
    assert cli_main([str(x) for x in small_experiment_args(small_bundle_dir, out_a, **overrides)]) == 0
    assert cli_main([str(x) for x in small_experiment_args(small_bundle_dir, out_b, **overrides)]) == 0
    assert cli_main([str(x) for x in small_experiment_args(small_bundle_dir, out_c, jobs=8, **overrides)]) == 0
    capsys.readouterr()
    for name in ("results.csv", "sizes.csv"):
        a = (out_a / name).read_bytes()
        assert a == (out_b / name).read_bytes(), f"{name} differs between identical runs"
        assert a == (out_c / name).read_bytes(), f"{name} differs with --jobs 8"
    _report(9, "all five models: CSV artifacts are byte-identical across reruns and under --jobs 8")


def test_criterion_10_offline_grid(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("TRANSLATOR_URL", raising=False)
    monkeypatch.delenv("TEACHER_URL", raising=False)
    out_dir = tmp_path / "grid"
    start = time.time()
    code = cli_main(
        [
            "experiment",
            "--config", str(DATA_DIR / "experiment.cfg"),
            "--gold", str(DATA_DIR / "gold.jsonl"),
            "--pool", str(DATA_DIR / "pool.jsonl"),
            "--lexicon", str(DATA_DIR / "lexicon.tsv"),
            "--out-dir", str(out_dir),
        ]
    )
    elapsed = time.time() - start
    capsys.readouterr()
    assert code == 0
    assert elapsed < 600.0, f"grid took {elapsed:.0f}s"
    from kurdsent.evaluation import parse_csv

    reports = parse_csv((out_dir / "results.csv").read_text())
    # 5 models x (3 systems on the shared gold test + 2 own test sets) x 2 emoji modes + zero-shot
    assert len(reports) == 5 * 5 * 2 + 1
    models = {r.tags["model"] for r in reports}
    assert models == {"lr", "svm", "dt", "rf", "bilstm", "lexicon"}
    sizes = (out_dir / "sizes.csv").read_text().splitlines()
    assert len(sizes) == 2 + 5 * 3
    _report(10, f"full grid on the bundled corpus ran offline in {elapsed:.0f}s "
                f"({len(reports)} result rows)")
