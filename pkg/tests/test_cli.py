"""End-to-end CLI workflows through main(argv)."""

import json

import pytest

from compactner.checkpoint import load_checkpoint
from compactner.cli import TAGGER_FIELDS, TRAIN_FIELDS, build_parser, main
from compactner.data import parse_conll
from compactner.teacher_store import load_teacher_logits

TINY_ARCH = ["--word-dim", "8", "--char-dim", "4", "--char-filters", "4",
             "--lstm-hidden", "6"]
FAST_TRAIN = ["--epochs", "1", "--batch-size", "8"]


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    """A synthetic corpus pair plus one trained checkpoint, built once."""
    d = tmp_path_factory.mktemp("cli")
    train = d / "train.conll"
    dev = d / "dev.conll"
    assert main(["synth", "--count", "30", "--seed", "0",
                 "--out", str(train),
                 "--test-count", "8", "--test-out", str(dev)]) == 0
    model = d / "model.cdt"
    assert main(["train", "--labeled", str(train), "--dev", str(dev),
                 "--out", str(model)] + TINY_ARCH + FAST_TRAIN) == 0
    return {"dir": d, "train": train, "dev": dev, "model": model}


def test_synth_is_deterministic(tmp_path):
    a, b = tmp_path / "a.conll", tmp_path / "b.conll"
    assert main(["synth", "--count", "12", "--seed", "5", "--out", str(a)]) == 0
    assert main(["synth", "--count", "12", "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_train_writes_checkpoint_and_report(corpus_dir, tmp_path, capsys):
    report_dir = tmp_path / "report"
    out = tmp_path / "m.cdt"
    code = main(["train", "--labeled", str(corpus_dir["train"]),
                 "--dev", str(corpus_dir["dev"]), "--out", str(out),
                 "--report-dir", str(report_dir)] + TINY_ARCH + FAST_TRAIN)
    assert code == 0
    assert "best dev F1" in capsys.readouterr().out
    assert out.exists()
    report = json.loads((report_dir / "report.json").read_text())
    assert len(report["history"]) == 1
    assert report["run"]["command"] == "train"
    assert (report_dir / "curves.png").stat().st_size > 0


def test_eval_prints_scores_and_writes_report(corpus_dir, tmp_path, capsys):
    report = tmp_path / "eval.json"
    code = main(["eval", "--model", str(corpus_dir["model"]),
                 "--data", str(corpus_dir["dev"]), "--report", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    assert "F1" in out and "gold" in out
    payload = json.loads(report.read_text())
    assert {"precision", "recall", "f1", "gold"} <= set(payload)


def test_predict_round_trips_tokens(corpus_dir, tmp_path):
    out = tmp_path / "pred.conll"
    code = main(["predict", "--model", str(corpus_dir["model"]),
                 "--data", str(corpus_dir["dev"]), "--out", str(out)])
    assert code == 0
    tagged, _ = parse_conll(out)
    original, _ = parse_conll(corpus_dir["dev"])
    assert [s.tokens for s in tagged] == [s.tokens for s in original]
    assert all(s.gold_tags for s in tagged)


def test_sample_splits_reruns_byte_identical(corpus_dir, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    argv = ["sample-splits", "--train", str(corpus_dir["train"]),
            "--sizes", "4,8", "--seeds", "3", "--master-seed", "1"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = [json.loads(x) for x in a.read_text().splitlines()]
    assert len(lines) == 6
    assert sorted({x["size"] for x in lines}) == [4, 8]


def test_export_logits_then_distill(corpus_dir, tmp_path):
    d = corpus_dir["dir"]
    unlabeled = d / "unlabeled.conll"
    assert main(["synth", "--count", "20", "--seed", "9",
                 "--out", str(unlabeled)]) == 0
    logits = tmp_path / "teacher.jsonl"
    code = main(["export-logits", "--model", str(corpus_dir["model"]),
                 "--data", str(corpus_dir["train"]),
                 "--data", str(unlabeled),
                 "--out", str(logits), "--description", "cli teacher"])
    assert code == 0
    store = load_teacher_logits(logits)
    assert len(store) == 50  # 30 labeled + 20 unlabeled, ids concatenated
    assert store.teacher == "cli teacher"

    student = tmp_path / "student.cdt"
    code = main(["distill", "--labeled", str(corpus_dir["train"]),
                 "--unlabeled", str(unlabeled),
                 "--teacher-logits", str(logits),
                 "--dev", str(corpus_dir["dev"]),
                 "--out", str(student)] + TINY_ARCH + FAST_TRAIN)
    assert code == 0
    bundle, provenance = load_checkpoint(student)
    assert provenance["command"] == "distill"
    assert provenance["train"]["distill_weight"] == 1.0
    assert bundle.config.lstm_hidden == 6


def test_bench_with_external_timings(corpus_dir, tmp_path, capsys):
    ext = tmp_path / "ext.jsonl"
    ext.write_text("\n".join(json.dumps(x) for x in [
        {"model": "bigref", "batch_size": 1, "seconds": 50.0},
        {"model": "bigref", "batch_size": 4, "seconds": 20.0},
    ]) + "\n")
    out_dir = tmp_path / "bench"
    code = main(["bench", "--model", str(corpus_dir["model"]),
                 "--data", str(corpus_dir["dev"]),
                 "--batch-sizes", "1,4",
                 "--warmup-passes", "0", "--measured-passes", "1",
                 "--external", str(ext), "--baseline", "bigref",
                 "--out-dir", str(out_dir)])
    assert code == 0
    out = capsys.readouterr().out
    assert "×" in out
    assert "model vs bigref" in out
    assert (out_dir / "bench.jsonl").exists()
    assert (out_dir / "speedups.txt").read_text().strip()
    assert (out_dir / "throughput.png").stat().st_size > 0
    run = json.loads((out_dir / "run.json").read_text())
    assert run["baseline"] == "bigref"


def test_grid_cli_end_to_end(corpus_dir, tmp_path, capsys):
    d = corpus_dir["dir"]
    splits = tmp_path / "splits.jsonl"
    assert main(["sample-splits", "--train", str(corpus_dir["train"]),
                 "--sizes", "4", "--seeds", "2", "--out", str(splits)]) == 0
    logits = tmp_path / "teacher.jsonl"
    assert main(["export-logits", "--model", str(corpus_dir["model"]),
                 "--data", str(corpus_dir["train"]), "--out", str(logits)]) == 0
    out_dir = tmp_path / "grid"
    code = main(["grid", "--train", str(corpus_dir["train"]),
                 "--dev", str(corpus_dir["dev"]), "--test", str(corpus_dir["dev"]),
                 "--splits", str(splits),
                 "--variants", "baseline-softmax,distilled-softmax",
                 "--teacher-logits", str(logits),
                 "--out-dir", str(out_dir)] + TINY_ARCH + FAST_TRAIN)
    assert code == 0
    assert "mean" in capsys.readouterr().out
    cells = [json.loads(x) for x in (out_dir / "cells.jsonl").read_text().splitlines()]
    assert len(cells) == 4
    assert all(c["error"] is None for c in cells)
    assert (out_dir / "summary.txt").exists()
    assert (out_dir / "f1_vs_size.png").stat().st_size > 0
    run = json.loads((out_dir / "run.json").read_text())
    assert len(run["summary"]) == 2


def test_config_file_merges_under_flags(corpus_dir, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "train": {"epochs": 3, "lr": 0.5},
        "tagger": {"word_dim": 8, "char_dim": 4, "char_filters": 4,
                   "lstm_hidden": 6},
    }))
    out = tmp_path / "m.cdt"
    code = main(["train", "--config", str(cfg),
                 "--labeled", str(corpus_dir["train"]),
                 "--dev", str(corpus_dir["dev"]),
                 "--out", str(out), "--epochs", "1"])
    assert code == 0
    _, provenance = load_checkpoint(out)
    assert provenance["train"]["epochs"] == 1     # flag beats file
    assert provenance["train"]["lr"] == 0.5       # file beats default
    assert provenance["tagger"]["word_dim"] == 8


def test_config_file_rejects_unknown_keys(corpus_dir, tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"train": {"momentum": 0.9}}))
    code = main(["train", "--config", str(cfg),
                 "--labeled", str(corpus_dir["train"]),
                 "--dev", str(corpus_dir["dev"]),
                 "--out", str(tmp_path / "m.cdt")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("usage-error:")
    assert "momentum" in err


def test_invalid_json_config_is_usage_error(corpus_dir, tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    code = main(["train", "--config", str(cfg),
                 "--labeled", str(corpus_dir["train"]),
                 "--dev", str(corpus_dir["dev"]),
                 "--out", str(tmp_path / "m.cdt")])
    assert code == 2
    assert capsys.readouterr().err.startswith("usage-error:")


def test_missing_file_is_usage_error(tmp_path, capsys):
    code = main(["eval", "--model", str(tmp_path / "absent.cdt"),
                 "--data", str(tmp_path / "absent.conll")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("usage-error: file not found")


def test_bad_flag_is_usage_error(capsys):
    code = main(["train", "--no-such-flag", "1"])
    assert code == 2
    assert capsys.readouterr().err.startswith("usage-error:")


def test_config_error_category_on_bad_value(corpus_dir, tmp_path, capsys):
    code = main(["train", "--labeled", str(corpus_dir["train"]),
                 "--dev", str(corpus_dir["dev"]),
                 "--out", str(tmp_path / "m.cdt"),
                 "--epochs", "0"] + TINY_ARCH)
    assert code == 2
    assert capsys.readouterr().err.startswith("config-error:")


def test_coverage_error_category(corpus_dir, tmp_path, capsys):
    # teacher covers only the labeled file, so distilling with extra
    # unlabeled text must fail with the coverage category
    logits = tmp_path / "narrow.jsonl"
    assert main(["export-logits", "--model", str(corpus_dir["model"]),
                 "--data", str(corpus_dir["train"]), "--out", str(logits)]) == 0
    capsys.readouterr()
    unlabeled = tmp_path / "unl.conll"
    assert main(["synth", "--count", "5", "--seed", "3",
                 "--out", str(unlabeled)]) == 0
    capsys.readouterr()
    code = main(["distill", "--labeled", str(corpus_dir["train"]),
                 "--unlabeled", str(unlabeled),
                 "--teacher-logits", str(logits),
                 "--dev", str(corpus_dir["dev"]),
                 "--out", str(tmp_path / "s.cdt")] + TINY_ARCH + FAST_TRAIN)
    assert code == 2
    assert capsys.readouterr().err.startswith("coverage-error:")


def test_malformed_conll_is_data_format_error(tmp_path, capsys):
    bad = tmp_path / "bad.conll"
    bad.write_text("word NOTATAG\n\n")
    code = main(["sample-splits", "--train", str(bad), "--sizes", "1",
                 "--seeds", "1", "--out", str(tmp_path / "s.jsonl")])
    assert code == 2
    assert capsys.readouterr().err.startswith("data-format-error:")


def _sub_help(name):
    parser = build_parser()
    for action in parser._actions:
        if hasattr(action, "choices") and action.choices and name in action.choices:
            return action.choices[name].format_help()
    raise AssertionError(f"no subcommand {name}")


def test_train_help_lists_every_config_flag():
    text = _sub_help("train")
    for field in TRAIN_FIELDS:
        assert "--" + field.replace("_", "-") in text
    for field in TAGGER_FIELDS:
        if field == "dropout_rate":
            assert "--dropout" in text
        else:
            assert "--" + field.replace("_", "-") in text


def test_help_shows_defaults():
    text = _sub_help("train")
    assert "default: 20" in text    # epochs
    assert "default: 0.001" in text  # lr
