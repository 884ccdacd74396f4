import json
from pathlib import Path

import pytest

from kurdsent.cli import main
from kurdsent.corpus import load_jsonl
from kurdsent.evaluation import parse_csv

from conftest import small_experiment_args

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "synthetic"


def run(args, capsys):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# prep
# ---------------------------------------------------------------------------


def test_prep_filters_and_reports(tmp_path, capsys, small_bundle_dir):
    out = tmp_path / "prepped.jsonl"
    code, stdout, _ = run(["prep", small_bundle_dir / "raw.jsonl", out], capsys)
    assert code == 0
    stats = json.loads(out.with_suffix(".jsonl.stats.json").read_text())
    assert stats["kept"] + sum(stats["dropped"].values()) == stats["total"]
    assert stats["dropped"]["script"] == 10
    assert "kept" in stdout


def test_prep_all_latin_drops_everything(tmp_path, capsys):
    source = tmp_path / "latin.jsonl"
    source.write_text(
        '{"id": "1", "text": "hello world"}\n{"id": "2", "text": "more latin text"}\n',
        encoding="utf-8",
    )
    out = tmp_path / "out.jsonl"
    code, _, _ = run(["prep", source, out], capsys)
    assert code == 0
    stats = json.loads(out.with_suffix(".jsonl.stats.json").read_text())
    assert stats["kept"] == 0
    assert stats["dropped"]["script"] == 2


def test_prep_idempotent(tmp_path, capsys, small_bundle_dir):
    first = tmp_path / "first.jsonl"
    second = tmp_path / "second.jsonl"
    assert run(["prep", small_bundle_dir / "raw.jsonl", first], capsys)[0] == 0
    assert run(["prep", first, second], capsys)[0] == 0
    assert first.read_bytes() == second.read_bytes()


def test_prep_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run(["prep", tmp_path / "missing.jsonl", tmp_path / "out.jsonl"], capsys)
    assert code == 2


# ---------------------------------------------------------------------------
# alpha
# ---------------------------------------------------------------------------


def test_alpha_reports_all_projections(capsys, small_bundle_dir):
    code, stdout, _ = run(["alpha", small_bundle_dir / "annotations.jsonl"], capsys)
    assert code == 0
    for section in ("sentiment-5", "classification-3", "subjectivity"):
        assert f"projection: {section}" in stdout
    assert stdout.count("alpha:") == 3


def test_alpha_perfect_agreement(tmp_path, capsys):
    path = tmp_path / "ann.jsonl"
    lines = []
    for unit, sentiment in (("u1", "positive"), ("u2", "negative")):
        for annotator in ("a", "b"):
            lines.append(json.dumps({"unit_id": unit, "annotator_id": annotator,
                                     "subjectivity": "subjective", "sentiment": sentiment}))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    code, stdout, _ = run(["alpha", path], capsys)
    assert code == 0
    assert stdout.count("alpha: 1.0000") == 2  # five-way and three-way
    assert "undefined" in stdout  # subjectivity projection has one value only


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def test_augment_writes_silver_and_provenance(tmp_path, capsys, small_bundle_dir):
    out = tmp_path / "silver.jsonl"
    code, stdout, _ = run(
        ["augment", small_bundle_dir / "pool.jsonl", out,
         "--lexicon", small_bundle_dir / "lexicon.tsv",
         "--per-class", "50", "--emoji-min", "10", "--seed", "3"],
        capsys,
    )
    assert code == 0
    silver = load_jsonl(out)
    assert tuple(silver.class_counts.values()) == (50, 50, 50)
    provenance = out.with_suffix(".jsonl.provenance.jsonl")
    rows = [json.loads(line) for line in provenance.read_text().splitlines() if not line.startswith("#")]
    assert len(rows) == 150
    assert all({"id", "label", "confidence", "translation", "teacher"} <= set(r) for r in rows)


def test_augment_shortfall_exit_code(tmp_path, capsys, small_bundle_dir):
    out = tmp_path / "silver.jsonl"
    code, _, err = run(
        ["augment", small_bundle_dir / "pool.jsonl", out,
         "--lexicon", small_bundle_dir / "lexicon.tsv", "--per-class", "100000"],
        capsys,
    )
    assert code == 2
    assert "shortfall" in err


def test_augment_unreachable_teacher_url(tmp_path, capsys, small_bundle_dir, monkeypatch):
    monkeypatch.setenv("TEACHER_URL", "http://127.0.0.1:1/classify")
    out = tmp_path / "silver.jsonl"
    code, _, err = run(
        ["augment", small_bundle_dir / "pool.jsonl", out,
         "--per-class", "1", "--emoji-min", "0", "--timeout", "0.2"],
        capsys,
    )
    assert code == 2
    assert "127.0.0.1:1" in err


# ---------------------------------------------------------------------------
# train / evaluate / zero-shot
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("model", ["lr", "dt"])
def test_train_then_evaluate(tmp_path, capsys, small_bundle_dir, model):
    model_path = tmp_path / "model.json"
    code, _, _ = run(
        ["train", small_bundle_dir / "gold.jsonl", model_path, "--model", model], capsys
    )
    assert code == 0
    csv_path = tmp_path / "report.csv"
    code, stdout, _ = run(
        ["evaluate", model_path, small_bundle_dir / "gold.jsonl", "--csv", csv_path], capsys
    )
    assert code == 0
    assert "Accuracy" in stdout
    reports = parse_csv(csv_path.read_text())
    assert len(reports) == 1
    assert reports[0].accuracy > 0.5


def test_evaluate_rejects_non_model_file(tmp_path, capsys, small_bundle_dir):
    bogus = tmp_path / "bogus.json"
    bogus.write_text("{}", encoding="utf-8")
    code, _, err = run(["evaluate", bogus, small_bundle_dir / "gold.jsonl"], capsys)
    assert code == 2
    assert "not a kurdsent model" in err


def test_zero_shot_cli(tmp_path, capsys, small_bundle_dir):
    csv_path = tmp_path / "zs.csv"
    code, stdout, _ = run(
        ["zero-shot", small_bundle_dir / "gold.jsonl",
         "--lexicon", small_bundle_dir / "lexicon.tsv", "--csv", csv_path],
        capsys,
    )
    assert code == 0
    assert "lexicon" in stdout
    assert "identity" in stdout
    assert csv_path.exists()


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def test_experiment_small_grid(tmp_path, capsys, small_bundle_dir):
    out_dir = tmp_path / "grid"
    code, stdout, _ = run(small_experiment_args(small_bundle_dir, out_dir), capsys)
    assert code == 0
    csv_text = (out_dir / "results.csv").read_text()
    reports = parse_csv(csv_text)
    # 2 models x (baseline test x 2 systems + upsample own test) x 2 modes + zero-shot
    assert len(reports) == 2 * 3 * 2 + 1
    keys = {(r.tags["model"], r.tags["system"], r.tags["test_set"], r.tags["emoji_mode"]) for r in reports}
    assert ("lr", "baseline", "baseline", "without") in keys
    assert ("dt", "upsample", "upsample", "with") in keys
    assert ("lexicon", "identity", "baseline", "without") in keys
    table = (out_dir / "results_table.txt").read_text()
    assert "== emoji mode: without ==" in table and "== emoji mode: with ==" in table
    sizes = (out_dir / "sizes.csv").read_text().splitlines()
    assert sizes[1] == "model,system,total_size,train_size,f1"
    assert len(sizes) == 2 + 2 * 2  # header comment + column row + 2 models x 2 systems
    run_meta = json.loads((out_dir / "run.json").read_text())
    assert run_meta["seed"] == 5
    assert run_meta["config_hash"]
    for name in ("results.csv", "sizes.csv", "results_table.txt"):
        assert (out_dir / name).read_text().splitlines()[0].startswith("# kurdsent")


def test_experiment_deterministic_and_parallel(tmp_path, capsys, small_bundle_dir):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    out_c = tmp_path / "c"
    assert run(small_experiment_args(small_bundle_dir, out_a), capsys)[0] == 0
    assert run(small_experiment_args(small_bundle_dir, out_b), capsys)[0] == 0
    assert run(small_experiment_args(small_bundle_dir, out_c, jobs=4), capsys)[0] == 0
    for name in ("results.csv", "sizes.csv", "results_table.txt"):
        a = (out_a / name).read_bytes()
        assert a == (out_b / name).read_bytes(), f"{name} differs between identical runs"
    for name in ("results.csv", "sizes.csv", "results_table.txt"):
        a = (out_a / name).read_bytes()
        c = (out_c / name).read_bytes()
        assert a == c, f"{name} differs under --jobs 4"


def test_experiment_config_file_with_flag_override(tmp_path, capsys, small_bundle_dir):
    config = tmp_path / "exp.cfg"
    config.write_text(
        "\n".join(
            [
                f"gold = {small_bundle_dir / 'gold.jsonl'}",
                f"pool = {small_bundle_dir / 'pool.jsonl'}",
                f"lexicon = {small_bundle_dir / 'lexicon.tsv'}",
                f"out_dir = {tmp_path / 'from-config'}",
                "models = lr",
                "systems = baseline",
                "emoji_modes = without",
                "seed = 9",
                "silver_per_class = 80",
                "silver_emoji_min = 0",
                "zero_shot = false",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    out_dir = tmp_path / "flag-override"
    code, _, _ = run(["experiment", "--config", config, "--out-dir", out_dir], capsys)
    assert code == 0
    reports = parse_csv((out_dir / "results.csv").read_text())
    assert len(reports) == 1
    assert reports[0].tags["seed"] == "9"


def test_experiment_unknown_config_key(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("bogus_key = 1\n", encoding="utf-8")
    code, _, err = run(["experiment", "--config", config], capsys)
    assert code == 2
    assert "bogus_key" in err


def test_experiment_requires_gold_and_out_dir(capsys):
    code, _, err = run(["experiment", "--models", "lr"], capsys)
    assert code == 1
    assert "usage error" in err


# ---------------------------------------------------------------------------
# exit codes and parser behavior
# ---------------------------------------------------------------------------


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["bogus"], capsys)[0] == 1


def test_missing_argument_is_usage_error(capsys):
    assert run(["prep"], capsys)[0] == 1


def test_data_error_is_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n", encoding="utf-8")
    code, _, err = run(["alpha", bad], capsys)
    assert code == 2
    assert "malformed" in err
