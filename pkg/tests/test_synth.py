"""The bundled synthetic corpus: determinism, filterability, and the
annotation-to-gold pipeline consistency story."""

from pathlib import Path

import pytest

from kurdsent.annotation import (
    aggregate,
    load_annotations,
    load_overrides,
    records_by_unit,
    to_classification_dataset,
)
from kurdsent.augment import LexiconTeacher
from kurdsent.corpus import CLASS_ORDER, Dataset, load_jsonl, normalize, script_filter
from kurdsent.synth import SynthConfig, generate_bundle, write_bundle

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "synthetic"


@pytest.fixture(scope="module")
def bundle():
    return generate_bundle()


def test_bundle_is_deterministic(tmp_path, bundle):
    again = generate_bundle()
    assert again.gold == bundle.gold
    assert again.pool == bundle.pool
    assert again.annotations == bundle.annotations
    assert again.teacher_lexicon == bundle.teacher_lexicon


def test_bundled_files_match_generator(tmp_path, bundle):
    """The checked-in data files are exactly what the generator produces."""
    write_bundle(tmp_path)
    for name in ("gold.jsonl", "pool.jsonl", "raw.jsonl", "annotations.jsonl",
                 "overrides.jsonl", "lexicon.tsv", "truth_lexicon.tsv"):
        fresh = (tmp_path / name).read_bytes()
        committed = (DATA_DIR / name).read_bytes()
        assert fresh == committed, f"{name} is stale; regenerate with kurdsent.synth.write_bundle"


def test_gold_counts_and_ratio(bundle):
    counts = bundle.gold.class_counts
    assert tuple(counts.values()) == (292, 639, 254)


def test_gold_text_is_normalized_and_kurdish(bundle):
    for doc in list(bundle.gold)[:300]:
        assert normalize(doc.raw_text) == doc.raw_text
        assert script_filter(doc.raw_text)


def test_pool_is_unlabeled_and_filterable(bundle):
    assert all(doc.label is None for doc in bundle.pool)
    assert all(script_filter(doc.raw_text) for doc in list(bundle.pool)[:300])


def test_raw_contains_noise(bundle):
    noise = [doc for doc in bundle.raw if doc.id.startswith("n-")]
    assert noise
    assert all(not script_filter(doc.raw_text) for doc in noise)


def test_annotation_pipeline_reproduces_gold(bundle):
    """aggregate + rectification overrides + three-class filter rebuilds the
    bundled gold dataset from the annotation campaign."""
    kurdish = Dataset(doc for doc in bundle.raw if script_filter(doc.normalized_text))
    finals = aggregate(records_by_unit(bundle.annotations), overrides=bundle.overrides)
    classified = to_classification_dataset(finals, kurdish)
    gold_labels = {doc.id: doc.label for doc in bundle.gold}
    assert {doc.id: doc.label for doc in classified} == gold_labels


def test_bundled_files_pipeline(tmp_path):
    gold = load_jsonl(DATA_DIR / "gold.jsonl")
    assert tuple(gold.class_counts.values()) == (292, 639, 254)
    records = load_annotations(DATA_DIR / "annotations.jsonl")
    overrides = load_overrides(DATA_DIR / "overrides.jsonl")
    raw = load_jsonl(DATA_DIR / "raw.jsonl")
    kurdish = Dataset(doc for doc in raw if script_filter(doc.normalized_text))
    finals = aggregate(records_by_unit(records), overrides=overrides)
    classified = to_classification_dataset(finals, kurdish)
    assert {d.id: d.label for d in classified} == {d.id: d.label for d in gold}


def test_teacher_lexicon_loads_and_is_noisy(bundle, tmp_path):
    teacher = LexiconTeacher.from_tsv(DATA_DIR / "lexicon.tsv")
    assert teacher.lexicon == bundle.teacher_lexicon
    assert teacher.emoji_polarity == bundle.teacher_emoji
    # corrupted copy: strictly smaller and with some flipped polarities
    assert len(teacher.lexicon) < len(bundle.truth_lexicon)
    flipped = sum(
        1
        for token, polarity in teacher.lexicon.items()
        if bundle.truth_lexicon.get(token) == -polarity
    )
    assert flipped > 0
    # still far better than chance on the gold labels
    correct = sum(
        1 for doc in bundle.gold if teacher.classify(doc.normalized_text)[0] == doc.label
    )
    assert correct / len(bundle.gold) > 0.6


def test_config_variation_changes_bundle():
    small = generate_bundle(SynthConfig(gold_counts=(8, 12, 6), pool_size=30, noise_docs=4,
                                        extra_mixed=3, extra_none=2, extra_objective=2))
    assert tuple(small.gold.class_counts.values()) == (8, 12, 6)
    assert len(small.pool) == 30
