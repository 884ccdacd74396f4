from pathlib import Path

import pytest

from kurdsent.synth import SynthConfig, write_bundle

SMALL_SYNTH = SynthConfig(
    seed=99,
    gold_counts=(40, 60, 30),
    extra_mixed=6,
    extra_none=3,
    extra_objective=4,
    noise_docs=10,
    pool_size=600,
    n_fillers=400,
    n_polar_per_side=120,
)


@pytest.fixture(scope="session")
def small_bundle_dir(tmp_path_factory) -> Path:
    """A miniature synthetic corpus on disk for fast end-to-end runs."""
    out = tmp_path_factory.mktemp("small-bundle")
    write_bundle(out, SMALL_SYNTH)
    return out


def small_experiment_args(bundle_dir: Path, out_dir: Path, **overrides) -> list[str]:
    options = {
        "--gold": str(bundle_dir / "gold.jsonl"),
        "--pool": str(bundle_dir / "pool.jsonl"),
        "--lexicon": str(bundle_dir / "lexicon.tsv"),
        "--out-dir": str(out_dir),
        "--models": "lr,dt",
        "--systems": "baseline,upsample",
        "--emoji-modes": "without,with",
        "--seed": "5",
        "--upsample-target": "70",
        "--merge-target": "100",
        "--silver-per-class": "80",
        "--silver-emoji-min": "20",
        "--bilstm-epochs": "2",
    }
    for key, value in overrides.items():
        flag = "--" + key.replace("_", "-")
        if value is None:
            options.pop(flag, None)
        else:
            options[flag] = str(value)
    args = ["experiment"]
    for flag, value in options.items():
        args.extend([flag, value])
    return args
