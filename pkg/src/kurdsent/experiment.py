"""Experiment runner: trains every configured model on the baseline,
upsampled, and merged training sets, in both emoji modes, and renders the
benchmark artifacts (aligned table, full-precision CSV, size-vs-F1 CSV).

Test-set construction: the gold test split is shared across systems so rows
stay comparable; the upsampled/merged test sets are the 20% stratified
holdout of the balanced dataset, topped up with silver documents that never
appear in any training set.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .augment import (
    BalanceSpec,
    CachingTeacher,
    CachingTranslator,
    HttpTeacher,
    HttpTranslator,
    IdentityTranslator,
    LexiconTeacher,
    Teacher,
    Translator,
    generate_silver,
    merge,
    upsample,
    zero_shot_eval,
)
from .base import DataError
from .classifiers import (
    DecisionTreeClassifier,
    LinearSvmClassifier,
    LogisticRegressionClassifier,
    RandomForestClassifier,
)
from .corpus import Dataset, SentimentLabel, load_jsonl, split_dataset
from .evaluation import (
    EvaluationReport,
    evaluate_predictions,
    render_csv,
    render_sizes_csv,
    render_table,
)
from .features import TfidfVectorizer, tokenize
from .neural import BiLstmClassifier

MODEL_NAMES = ("lr", "svm", "dt", "rf", "bilstm")
SYSTEM_NAMES = ("baseline", "upsample", "merged")
EMOJI_MODES = ("without", "with")

TRANSLATOR_URL_VAR = "TRANSLATOR_URL"
TEACHER_URL_VAR = "TEACHER_URL"


@dataclass
class ExperimentConfig:
    gold: str
    out_dir: str
    silver: Optional[str] = None
    pool: Optional[str] = None
    lexicon: Optional[str] = None
    models: tuple[str, ...] = MODEL_NAMES
    systems: tuple[str, ...] = SYSTEM_NAMES
    emoji_modes: tuple[str, ...] = EMOJI_MODES
    seed: int = 0
    split_ratio: float = 0.8
    upsample_target: int = 700
    merge_target: int = 1700
    silver_per_class: int = 1500
    silver_emoji_min: int = 500
    neutral_band: int = 0
    zero_shot: bool = True
    jobs: int = 1
    client_timeout: float = 30.0
    cache_path: Optional[str] = None
    lr_max_iter: int = 500
    svm_max_iter: int = 2000
    rf_estimators: int = 30
    bilstm_epochs: int = 10
    bilstm_batch_size: int = 32
    bilstm_max_len: int = 64

    def validate(self) -> None:
        for model in self.models:
            if model not in MODEL_NAMES:
                raise DataError(f"unknown model {model!r}; choose from {MODEL_NAMES}")
        for system in self.systems:
            if system not in SYSTEM_NAMES:
                raise DataError(f"unknown system {system!r}; choose from {SYSTEM_NAMES}")
        for mode in self.emoji_modes:
            if mode not in EMOJI_MODES:
                raise DataError(f"unknown emoji mode {mode!r}; choose from {EMOJI_MODES}")
        if not 0.0 < self.split_ratio < 1.0:
            raise DataError("split_ratio must be in (0, 1)")


# fields that locate or schedule the run without affecting its results
_EXECUTION_FIELDS = ("out_dir", "jobs", "client_timeout", "cache_path")


def config_hash(cfg: ExperimentConfig) -> str:
    payload = {k: v for k, v in asdict(cfg).items() if k not in _EXECUTION_FIELDS}
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def make_clients(cfg: ExperimentConfig) -> tuple[Translator, Teacher]:
    """Offline identity translator and lexicon teacher unless the endpoint
    environment variables are set; both are wrapped in the run cache."""
    translator_url = os.environ.get(TRANSLATOR_URL_VAR)
    teacher_url = os.environ.get(TEACHER_URL_VAR)
    translator: Translator
    teacher: Teacher
    if translator_url:
        translator = HttpTranslator(translator_url, timeout=cfg.client_timeout)
    else:
        translator = IdentityTranslator()
    if teacher_url:
        teacher = HttpTeacher(teacher_url, timeout=cfg.client_timeout)
    else:
        if not cfg.lexicon:
            raise DataError(
                "no teacher available: set a lexicon file for the offline teacher "
                f"or the {TEACHER_URL_VAR} environment variable"
            )
        teacher = LexiconTeacher.from_tsv(cfg.lexicon, neutral_band=cfg.neutral_band)
    return CachingTranslator(translator, cfg.cache_path), CachingTeacher(teacher, cfg.cache_path)


# ---------------------------------------------------------------------------
# System dataset construction
# ---------------------------------------------------------------------------


def split_with_shared_gold_test(
    balanced: Dataset, gold_test: Dataset, ratio: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Hold out ``1 - ratio`` of the balanced dataset, reusing the shared
    gold test documents and filling the rest of the per-class quota with a
    seeded sample of silver documents."""
    gold_test_ids = gold_test.ids
    rng = np.random.default_rng(np.random.SeedSequence((seed, 271828)))
    test_ids: set[str] = set(gold_test_ids)
    counts = balanced.class_counts
    for label, n_class in counts.items():
        if n_class == 0:
            continue
        quota = int(np.floor((1.0 - ratio) * n_class))
        gold_in_class = sum(1 for d in gold_test if d.label == label)
        if gold_in_class > quota:
            raise DataError(
                f"cannot build a {1 - ratio:.0%} holdout for class {label.value!r}: "
                f"{gold_in_class} shared gold test documents exceed the per-class quota {quota}; "
                "raise the balance target or the split ratio"
            )
        candidates = sorted(
            d.id for d in balanced.by_label(label) if d.id not in gold_test_ids and d.source.value == "silver"
        )
        need = quota - gold_in_class
        if need > len(candidates):
            raise DataError(
                f"not enough silver documents to fill the test quota for class {label.value!r}"
            )
        chosen = rng.permutation(len(candidates))[:need]
        test_ids.update(candidates[i] for i in chosen)
    train = Dataset(d for d in balanced if d.id not in test_ids)
    test = Dataset(d for d in balanced if d.id in test_ids)
    return train, test


def build_system_datasets(
    gold: Dataset, silver: Optional[Dataset], cfg: ExperimentConfig
) -> dict[str, tuple[Dataset, Dataset]]:
    gold_train, gold_test = split_dataset(gold, cfg.split_ratio, cfg.seed)
    systems: dict[str, tuple[Dataset, Dataset]] = {}
    for system in cfg.systems:
        if system == "baseline":
            systems[system] = (gold_train, gold_test)
            continue
        if silver is None:
            raise DataError(f"system {system!r} needs silver data (set --silver or --pool)")
        if system == "upsample":
            balanced = upsample(gold, silver, cfg.upsample_target, cfg.seed)
        else:
            balanced = merge(gold, silver, cfg.merge_target, cfg.seed)
        systems[system] = split_with_shared_gold_test(balanced, gold_test, cfg.split_ratio, cfg.seed)
    return systems


# ---------------------------------------------------------------------------
# Model factory and single-cell evaluation
# ---------------------------------------------------------------------------


def make_model(name: str, cfg: ExperimentConfig):
    if name == "lr":
        return LogisticRegressionClassifier(max_iter=cfg.lr_max_iter, seed=cfg.seed)
    if name == "svm":
        return LinearSvmClassifier(max_iter=cfg.svm_max_iter, seed=cfg.seed)
    if name == "dt":
        return DecisionTreeClassifier(seed=cfg.seed)
    if name == "rf":
        return RandomForestClassifier(n_estimators=cfg.rf_estimators, seed=cfg.seed)
    if name == "bilstm":
        return BiLstmClassifier(
            epochs=cfg.bilstm_epochs,
            batch_size=cfg.bilstm_batch_size,
            max_len=cfg.bilstm_max_len,
            seed=cfg.seed,
        )
    raise DataError(f"unknown model {name!r}")


def _emoji_view(ds: Dataset, mode: str) -> Dataset:
    return ds.strip_emoji() if mode == "without" else ds


def _tokens_and_labels(ds: Dataset) -> tuple[list[list[str]], list[SentimentLabel]]:
    return [tokenize(d.normalized_text) for d in ds], [d.label for d in ds]


def train_and_evaluate(
    model_name: str,
    system: str,
    mode: str,
    train: Dataset,
    tests: Sequence[tuple[str, Dataset]],
    cfg: ExperimentConfig,
) -> list[EvaluationReport]:
    """Train one grid cell and score it on each named test set."""
    train_tokens, train_labels = _tokens_and_labels(train)
    model = make_model(model_name, cfg)
    if model_name == "bilstm":
        model.fit(train_tokens, train_labels)
        predict = model.predict
    else:
        tfidf = TfidfVectorizer().fit(train_tokens)
        model.fit(tfidf.transform(train_tokens), train_labels)
        predict = lambda docs: model.predict(tfidf.transform(docs))  # noqa: E731
    reports = []
    for test_name, test in tests:
        test_tokens, test_labels = _tokens_and_labels(test)
        preds = predict(test_tokens)
        reports.append(
            evaluate_predictions(
                test_labels,
                preds,
                tags={
                    "model": model_name,
                    "test_set": test_name,
                    "system": system,
                    "emoji_mode": mode,
                    "seed": cfg.seed,
                },
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------


def render_mode_tables(reports: Sequence[EvaluationReport]) -> str:
    """One aligned table per emoji mode, mirroring the two benchmark tables
    (scores without and with emoji in the text)."""
    modes: list[str] = []
    for report in reports:
        mode = str(report.tags.get("emoji_mode", "-"))
        if mode not in modes:
            modes.append(mode)
    sections = []
    for mode in sorted(modes):
        subset = [r for r in reports if str(r.tags.get("emoji_mode", "-")) == mode]
        sections.append(f"== emoji mode: {mode} ==\n" + render_table(subset))
    return "\n".join(sections)


@dataclass
class ExperimentResult:
    reports: list[EvaluationReport]
    sizes: list[dict]
    notes: list[str]
    config: ExperimentConfig
    hash: str = ""

    def __post_init__(self) -> None:
        if not self.hash:
            self.hash = config_hash(self.config)


def obtain_silver(cfg: ExperimentConfig, translator: Translator, teacher: Teacher, gold: Dataset) -> Optional[Dataset]:
    if cfg.silver:
        return load_jsonl(cfg.silver)
    if cfg.pool:
        pool = load_jsonl(cfg.pool)
        spec = BalanceSpec(
            per_class_target=cfg.silver_per_class,
            emoji_min_per_class=cfg.silver_emoji_min,
            seed=cfg.seed,
        )
        return generate_silver(pool, translator, teacher, spec, exclude_ids=gold.ids)
    return None


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    gold = load_jsonl(cfg.gold)
    needs_clients = cfg.zero_shot or (cfg.pool and not cfg.silver)
    translator = teacher = None
    if needs_clients:
        translator, teacher = make_clients(cfg)
    silver = obtain_silver(cfg, translator, teacher, gold)
    systems = build_system_datasets(gold, silver, cfg)
    gold_test = systems.get("baseline", (None, None))[1]
    if gold_test is None:
        gold_test = split_dataset(gold, cfg.split_ratio, cfg.seed)[1]

    # per-mode views, shared across models
    views: dict[tuple[str, str], tuple[Dataset, list[tuple[str, Dataset]]]] = {}
    for system in cfg.systems:
        train, own_test = systems[system]
        for mode in cfg.emoji_modes:
            tests = [("baseline", _emoji_view(gold_test, mode))]
            if system != "baseline":
                tests.append((system, _emoji_view(own_test, mode)))
            views[(system, mode)] = (_emoji_view(train, mode), tests)

    cells = [
        (model, system, mode)
        for model in cfg.models
        for system in cfg.systems
        for mode in cfg.emoji_modes
    ]

    def run_cell(cell: tuple[str, str, str]) -> list[EvaluationReport]:
        model, system, mode = cell
        train, tests = views[(system, mode)]
        return train_and_evaluate(model, system, mode, train, tests, cfg)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            cell_reports = list(pool.map(run_cell, cells))
    else:
        cell_reports = [run_cell(cell) for cell in cells]

    reports = [report for group in cell_reports for report in group]
    if cfg.zero_shot:
        zs_test = _emoji_view(gold_test, "without") if "without" in cfg.emoji_modes else gold_test
        reports.append(
            zero_shot_eval(
                zs_test,
                translator,
                teacher,
                tags={"emoji_mode": "without", "seed": cfg.seed},
            )
        )
    reports.sort(
        key=lambda r: (
            str(r.tags.get("model")),
            str(r.tags.get("system")),
            str(r.tags.get("test_set")),
            str(r.tags.get("emoji_mode")),
        )
    )

    size_mode = "without" if "without" in cfg.emoji_modes else cfg.emoji_modes[0]
    sizes = []
    for model in cfg.models:
        for system in cfg.systems:
            train, _ = systems[system]
            total = len(train) + (len(systems[system][1]) if system != "baseline" else len(gold_test))
            baseline_rows = [
                r
                for r in reports
                if r.tags.get("model") == model
                and r.tags.get("system") == system
                and r.tags.get("test_set") == "baseline"
                and r.tags.get("emoji_mode") == size_mode
            ]
            if not baseline_rows:
                continue
            sizes.append(
                {
                    "model": model,
                    "system": system,
                    "total_size": total,
                    "train_size": len(train),
                    "f1": baseline_rows[0].weighted[2],
                }
            )

    base_total = len(gold)
    base_train = len(systems["baseline"][0]) if "baseline" in systems else int(cfg.split_ratio * base_total)
    notes = [
        (
            f"train sizes are the {cfg.split_ratio:.0%} stratified share of each system dataset; "
            f"the baseline corpus of {base_total} documents therefore trains on {base_train}"
        )
    ]
    return ExperimentResult(reports=reports, sizes=sizes, notes=notes, config=cfg)


def write_artifacts(result: ExperimentResult) -> dict[str, Path]:
    out = Path(result.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = f"kurdsent {__version__} config={result.hash} seed={result.config.seed}"
    paths = {
        "csv": out / "results.csv",
        "table": out / "results_table.txt",
        "sizes": out / "sizes.csv",
        "run": out / "run.json",
    }
    paths["csv"].write_text(render_csv(result.reports, header=header), encoding="utf-8")
    paths["table"].write_text(f"# {header}\n" + render_mode_tables(result.reports), encoding="utf-8")
    sizes_header = header + " | " + result.notes[0]
    paths["sizes"].write_text(render_sizes_csv(result.sizes, header=sizes_header), encoding="utf-8")
    run_obj = {
        "version": __version__,
        "config": asdict(result.config),
        "config_hash": result.hash,
        "seed": result.config.seed,
        "notes": result.notes,
    }
    paths["run"].write_text(json.dumps(run_obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return paths
