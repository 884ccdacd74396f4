"""Command-line interface.

Subcommands: prep, alpha, augment, train, evaluate, experiment, zero-shot.
Exit codes: 0 success, 1 usage error, 2 data or client error.

Options can come from a flat ``key = value`` config file (``--config``);
explicit flags win over the file. The pipeline performs no network access
unless TRANSLATOR_URL / TEACHER_URL are set in the environment.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .annotation import (
    PROJECTIONS,
    aggregate,
    krippendorff_alpha,
    load_annotations,
    load_overrides,
    records_by_unit,
    to_classification_dataset,
)
from .augment import BalanceSpec, generate_silver, zero_shot_eval
from .base import ClientError, DataError
from .classifiers import load_model as load_classical_model
from .classifiers import save_model as save_classical_model
from .corpus import Dataset, language_id, load_jsonl, save_jsonl, script_filter
from .evaluation import render_csv, render_table
from .experiment import (
    EMOJI_MODES,
    MODEL_NAMES,
    ExperimentConfig,
    config_hash,
    make_clients,
    make_model,
    render_mode_tables,
    run_experiment,
    write_artifacts,
)
from .features import TfidfVectorizer, tokenize
from .neural import BiLstmClassifier


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we reserve 2 for data errors
        raise UsageError(message)


def _load_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; blank lines and #-comments are ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip("\"'")
    return values


def _header(seed: object, tag: str = "") -> str:
    suffix = f" {tag}" if tag else ""
    return f"kurdsent {__version__} seed={seed}{suffix}"


# ---------------------------------------------------------------------------
# prep
# ---------------------------------------------------------------------------


def cmd_prep(args: argparse.Namespace) -> int:
    ds = load_jsonl(args.input)
    predicate = script_filter  # the built-in default language identifier
    kept = []
    dropped: dict[str, int] = {"script": 0, "language": 0}
    for doc in ds:
        if not script_filter(doc.normalized_text):
            dropped["script"] += 1
            continue
        try:
            verdict = language_id(predicate, doc.normalized_text)
        except Exception as exc:
            raise DataError(f"language predicate failed for document {doc.id!r}: {exc}") from exc
        if not verdict:
            dropped["language"] += 1
            continue
        kept.append(doc.with_text(doc.normalized_text))
    out = Dataset(kept)
    save_jsonl(out, args.output, header=_header(args.seed, "prep"))
    stats = {
        "input": str(args.input),
        "total": len(ds),
        "kept": len(out),
        "dropped": dropped,
    }
    stats_path = Path(args.output).with_suffix(Path(args.output).suffix + ".stats.json")
    stats_path.write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"kept {len(out)} of {len(ds)} documents ({dropped['script']} failed the script filter, "
          f"{dropped['language']} the language predicate)")
    return 0


# ---------------------------------------------------------------------------
# alpha
# ---------------------------------------------------------------------------


def _format_coincidences(result) -> str:
    width = max((len(str(v)) for v in result.values), default=4)
    width = max(width, 8)
    lines = [" " * width + " " + " ".join(f"{str(v):>{width}}" for v in result.values)]
    for i, value in enumerate(result.values):
        row = " ".join(f"{result.coincidences[i, j]:>{width}.2f}" for j in range(len(result.values)))
        lines.append(f"{str(value):>{width}} {row}")
    return "\n".join(lines)


def cmd_alpha(args: argparse.Namespace) -> int:
    records = load_annotations(args.input)
    for name, projection in PROJECTIONS.items():
        print(f"== projection: {name} ==")
        try:
            result = krippendorff_alpha(records, projection)
        except DataError as exc:
            print(f"alpha: not computable ({exc})")
            continue
        if result.alpha is None:
            print("alpha: undefined (expected disagreement is zero; only one value observed)")
        else:
            print(f"alpha: {result.alpha:.4f}")
        print(f"observed disagreement: {result.observed_disagreement:.6f}")
        print(f"expected disagreement: {result.expected_disagreement:.6f}")
        print(f"pairable values: {result.n_total:g}")
        print(_format_coincidences(result))
        print()
    return 0


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def cmd_augment(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        gold="", out_dir="", lexicon=args.lexicon, neutral_band=args.neutral_band,
        cache_path=args.cache, client_timeout=args.timeout,
    )
    translator, teacher = make_clients(cfg)
    pool = load_jsonl(args.input)
    exclude = load_jsonl(args.exclude).ids if args.exclude else None
    spec = BalanceSpec(
        per_class_target=args.per_class,
        emoji_min_per_class=args.emoji_min,
        seed=args.seed,
    )
    silver = generate_silver(pool, translator, teacher, spec, exclude_ids=exclude)
    save_jsonl(silver, args.output, header=_header(args.seed, "augment"))
    provenance_path = Path(args.output).with_suffix(Path(args.output).suffix + ".provenance.jsonl")
    with provenance_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {_header(args.seed, 'augment provenance')}\n")
        for doc in silver:
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "label": doc.label.value,
                        "confidence": doc.meta.get("confidence"),
                        "translation": doc.meta.get("translation"),
                        "teacher": doc.meta.get("teacher"),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    counts = {label.value: count for label, count in silver.class_counts.items()}
    print(f"wrote {len(silver)} silver documents {counts} to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# train / evaluate
# ---------------------------------------------------------------------------


def _strip_view(ds: Dataset, emoji_mode: str) -> Dataset:
    return ds.strip_emoji() if emoji_mode == "without" else ds


def cmd_train(args: argparse.Namespace) -> int:
    ds = _strip_view(load_jsonl(args.input), args.emoji_mode)
    tokens = [tokenize(d.normalized_text) for d in ds]
    labels = [d.label for d in ds]
    if any(label is None for label in labels):
        raise DataError("training data must be fully labeled")
    cfg = ExperimentConfig(gold="", out_dir="", seed=args.seed)
    model = make_model(args.model, cfg)
    bundle: dict = {"format": "kurdsent-model", "version": __version__, "emoji_mode": args.emoji_mode}
    if args.model == "bilstm":
        model.fit(tokens, labels)
        bundle.update(model.to_obj())
    else:
        tfidf = TfidfVectorizer().fit(tokens)
        model.fit(tfidf.transform(tokens), labels)
        bundle.update(model.to_obj())
        bundle["vectorizer"] = tfidf.to_obj()
    Path(args.output).write_text(json.dumps(bundle, ensure_ascii=False), encoding="utf-8")
    print(f"trained {args.model} on {len(ds)} documents -> {args.output}")
    return 0


def _load_bundle(path: str) -> tuple[object, Optional[TfidfVectorizer], str]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON ({exc.msg})") from None
    if obj.get("format") != "kurdsent-model":
        raise DataError(f"{path}: not a kurdsent model file")
    emoji_mode = obj.get("emoji_mode", "with")
    if obj.get("kind") == "bilstm":
        return BiLstmClassifier.from_obj(obj), None, emoji_mode
    from .classifiers import model_from_obj

    tfidf = TfidfVectorizer.from_obj(obj["vectorizer"]) if "vectorizer" in obj else None
    return model_from_obj(obj), tfidf, emoji_mode


def cmd_evaluate(args: argparse.Namespace) -> int:
    model, tfidf, trained_mode = _load_bundle(args.model)
    emoji_mode = args.emoji_mode or trained_mode
    ds = _strip_view(load_jsonl(args.input), emoji_mode)
    tokens = [tokenize(d.normalized_text) for d in ds]
    refs = [d.label for d in ds]
    if any(label is None for label in refs):
        raise DataError("evaluation data must be fully labeled")
    if tfidf is not None:
        preds = model.predict(tfidf.transform(tokens))
    else:
        preds = model.predict(tokens)
    from .evaluation import evaluate_predictions

    report = evaluate_predictions(
        refs,
        preds,
        tags={
            "model": getattr(model, "kind", type(model).__name__),
            "test_set": Path(args.input).stem,
            "system": "-",
            "emoji_mode": emoji_mode,
            "seed": args.seed,
        },
    )
    print(render_table([report]), end="")
    if args.csv:
        Path(args.csv).write_text(render_csv([report], header=_header(args.seed, "evaluate")), encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# zero-shot
# ---------------------------------------------------------------------------


def cmd_zero_shot(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        gold="", out_dir="", lexicon=args.lexicon, neutral_band=args.neutral_band,
        cache_path=args.cache, client_timeout=args.timeout,
    )
    translator, teacher = make_clients(cfg)
    ds = _strip_view(load_jsonl(args.input), args.emoji_mode)
    report = zero_shot_eval(
        ds, translator, teacher, tags={"emoji_mode": args.emoji_mode, "seed": args.seed}
    )
    print(render_table([report]), end="")
    if args.csv:
        Path(args.csv).write_text(render_csv([report], header=_header(args.seed, "zero-shot")), encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

_CONFIG_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_TUPLE_FIELDS = {"models", "systems", "emoji_modes"}
_INT_FIELDS = {
    "seed", "upsample_target", "merge_target", "silver_per_class", "silver_emoji_min",
    "neutral_band", "jobs", "lr_max_iter", "svm_max_iter", "rf_estimators",
    "bilstm_epochs", "bilstm_batch_size", "bilstm_max_len",
}
_FLOAT_FIELDS = {"split_ratio", "client_timeout"}
_BOOL_FIELDS = {"zero_shot"}


def _coerce_config_value(key: str, value: str):
    if key in _TUPLE_FIELDS:
        return tuple(part.strip() for part in value.split(",") if part.strip())
    if key in _INT_FIELDS:
        return int(value)
    if key in _FLOAT_FIELDS:
        return float(value)
    if key in _BOOL_FIELDS:
        return value.lower() in ("1", "true", "yes", "on")
    return value


def build_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        for key, raw in _load_config_file(args.config).items():
            if key not in _CONFIG_FIELD_TYPES:
                raise DataError(f"unknown config key {key!r}")
            values[key] = _coerce_config_value(key, raw)
    for key in _CONFIG_FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _coerce_config_value(key, flag) if isinstance(flag, str) and key in _TUPLE_FIELDS else flag
    if "gold" not in values or "out_dir" not in values:
        raise UsageError("experiment needs --gold and --out-dir (or config file entries)")
    return ExperimentConfig(**values)


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = build_experiment_config(args)
    result = run_experiment(cfg)
    paths = write_artifacts(result)
    print(f"config {config_hash(cfg)}: wrote {', '.join(str(p) for p in paths.values())}")
    print(render_mode_tables(result.reports), end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="kurdsent", description=__doc__)
    parser.add_argument("--version", action="version", version=f"kurdsent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="filter and normalize a raw JSONL corpus")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("alpha", help="inter-annotator agreement report")
    p.add_argument("input")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("augment", help="generate silver data from an unlabeled pool")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--per-class", dest="per_class", type=int, default=1500)
    p.add_argument("--emoji-min", dest="emoji_min", type=int, default=500)
    p.add_argument("--lexicon")
    p.add_argument("--neutral-band", dest="neutral_band", type=int, default=0)
    p.add_argument("--exclude", help="dataset whose ids are excluded from the pool")
    p.add_argument("--cache", help="on-disk client cache (JSONL)")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train a single model on a labeled dataset")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--model", choices=MODEL_NAMES, required=True)
    p.add_argument("--emoji-mode", dest="emoji_mode", choices=EMOJI_MODES, default="without")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained model file on a labeled dataset")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--emoji-mode", dest="emoji_mode", choices=EMOJI_MODES)
    p.add_argument("--csv", help="write the full-precision report CSV here")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("zero-shot", help="translate-and-classify a labeled test set")
    p.add_argument("input")
    p.add_argument("--lexicon")
    p.add_argument("--neutral-band", dest="neutral_band", type=int, default=0)
    p.add_argument("--emoji-mode", dest="emoji_mode", choices=EMOJI_MODES, default="without")
    p.add_argument("--cache")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--csv")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_zero_shot)

    p = sub.add_parser("experiment", help="run the benchmark grid")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--gold")
    p.add_argument("--silver")
    p.add_argument("--pool")
    p.add_argument("--lexicon")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--models")
    p.add_argument("--systems")
    p.add_argument("--emoji-modes", dest="emoji_modes")
    p.add_argument("--seed", type=int)
    p.add_argument("--split-ratio", dest="split_ratio", type=float)
    p.add_argument("--upsample-target", dest="upsample_target", type=int)
    p.add_argument("--merge-target", dest="merge_target", type=int)
    p.add_argument("--silver-per-class", dest="silver_per_class", type=int)
    p.add_argument("--silver-emoji-min", dest="silver_emoji_min", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--rf-estimators", dest="rf_estimators", type=int)
    p.add_argument("--bilstm-epochs", dest="bilstm_epochs", type=int)
    p.add_argument("--bilstm-max-len", dest="bilstm_max_len", type=int)
    p.add_argument("--no-zero-shot", dest="zero_shot", action="store_false", default=None)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ClientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
