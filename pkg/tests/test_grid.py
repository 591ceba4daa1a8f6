"""Experiment grid over splits and variants: results, failures, workers."""

import numpy as np
import pytest

from compactner import grid as grid_mod
from compactner.checkpoint import load_checkpoint
from compactner.data import build_vocab, sample_splits
from compactner.errors import CoverageError, ParameterError
from compactner.grid import run_experiment_grid, summarize_cells, write_cells_jsonl
from compactner.model import TaggerConfig
from compactner.synth import CorpusFactory
from compactner.distill import TrainConfig
from compactner.teacher_store import export_model_logits, load_teacher_logits
from conftest import small_bundle


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    factory = CorpusFactory(0, entity_words=12, context_words=10)
    corpus = factory.sentences(24)
    dev = factory.sentences(6, start_id=1000, key="dev")
    test = factory.sentences(6, start_id=2000, key="test")
    tagset = factory.tagset()
    teacher = small_bundle(corpus + dev + test, tagset, seed=1)
    path = tmp_path_factory.mktemp("grid") / "teacher.jsonl"
    export_model_logits(teacher, corpus, path, "grid teacher")
    return {
        "corpus": corpus, "dev": dev, "test": test,
        "store": load_teacher_logits(path),
        "splits": sample_splits(corpus, sizes=[4], seeds_per_size=2, master_seed=7),
    }


SMALL_ARCH = TaggerConfig(
    n_words=10, n_chars=10, n_tags=5, word_dim=8, char_dim=4,
    char_filters=4, char_window=3, lstm_hidden=6)
FAST = TrainConfig(epochs=1, batch_size=8, seed=0)


def run_grid(world, variants, **kwargs):
    return run_experiment_grid(
        world["corpus"], world["dev"], world["test"], world["splits"],
        variants, SMALL_ARCH, FAST, store=world["store"], **kwargs)


def test_grid_runs_every_cell(world):
    report = run_grid(world, ["baseline-softmax", "distilled-softmax"])
    assert len(report.cells) == 4  # 2 splits x 2 variants
    assert not report.partial
    for cell in report.cells:
        assert cell["error"] is None
        assert cell["test_f1"] is not None
        assert cell["size"] == 4
        assert cell["variant"] in ("baseline-softmax", "distilled-softmax")
    keys = {(c["size"], c["seed_index"], c["variant"]) for c in report.cells}
    assert len(keys) == 4


def test_grid_summary_shape(world):
    report = run_grid(world, ["baseline-softmax"])
    assert len(report.summary) == 1
    row = report.summary[0]
    assert row["variant"] == "baseline-softmax"
    assert row["size"] == 4
    assert row["cells"] == 2
    values = [c["test_f1"] for c in report.cells]
    assert row["mean_f1"] == pytest.approx(np.mean(values))
    assert row["std_f1"] == pytest.approx(np.std(values))
    assert row["min_f1"] == min(values)
    assert row["max_f1"] == max(values)


def test_grid_is_deterministic(world):
    a = run_grid(world, ["distilled-softmax"])
    b = run_grid(world, ["distilled-softmax"])
    strip = lambda cells: [
        {k: v for k, v in c.items() if k != "seconds"} for c in cells]
    assert strip(a.cells) == strip(b.cells)


def test_workers_do_not_change_results(world):
    serial = run_grid(world, ["baseline-softmax", "baseline-crf"])
    pooled = run_grid(world, ["baseline-softmax", "baseline-crf"], workers=3)
    strip = lambda cells: [
        {k: v for k, v in c.items() if k != "seconds"} for c in cells]
    assert strip(serial.cells) == strip(pooled.cells)


def test_failed_cell_is_recorded_not_fatal(world, monkeypatch):
    calls = {"n": 0}
    real = grid_mod.train_baseline

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("synthetic cell failure")
        return real(*args, **kwargs)

    monkeypatch.setattr(grid_mod, "train_baseline", flaky)
    report = run_grid(world, ["baseline-softmax"])
    assert report.partial
    failed = [c for c in report.cells if c["error"]]
    good = [c for c in report.cells if not c["error"]]
    assert len(failed) == 1
    assert len(good) == 1
    assert "synthetic cell failure" in failed[0]["error"]
    assert "RuntimeError" in failed[0]["error"]
    assert failed[0]["test_f1"] is None
    # failed cells are excluded from the summary
    assert report.summary[0]["cells"] == 1


def test_grid_rejects_unknown_variant(world):
    with pytest.raises(ParameterError, match="unknown variants"):
        run_grid(world, ["baseline-softmax", "mystery"])


def test_grid_rejects_empty_splits(world):
    with pytest.raises(ParameterError, match="splits"):
        run_experiment_grid(world["corpus"], world["dev"], world["test"], [],
                            ["baseline-softmax"], SMALL_ARCH, FAST)


def test_grid_distilled_needs_store(world):
    with pytest.raises(ParameterError, match="store"):
        run_experiment_grid(world["corpus"], world["dev"], world["test"],
                            world["splits"], ["distilled-softmax"],
                            SMALL_ARCH, FAST, store=None)


def test_grid_distilled_needs_full_coverage(world, tmp_path):
    corpus = world["corpus"]
    tagset = CorpusFactory(0, entity_words=12, context_words=10).tagset()
    teacher = small_bundle(corpus, tagset, seed=1)
    path = tmp_path / "partial.jsonl"
    export_model_logits(teacher, corpus[:10], path, "partial")
    with pytest.raises(CoverageError, match="missing"):
        run_experiment_grid(corpus, world["dev"], world["test"],
                            world["splits"], ["distilled-softmax"],
                            SMALL_ARCH, FAST, store=load_teacher_logits(path))


def test_grid_writes_checkpoints(world, tmp_path):
    out = tmp_path / "ckpt"
    out.mkdir()
    report = run_grid(world, ["baseline-softmax"], out_dir=str(out))
    for cell in report.cells:
        assert cell["checkpoint"]
        bundle, provenance = load_checkpoint(cell["checkpoint"])
        assert provenance["variant"] == "baseline-softmax"
        assert provenance["seed_index"] == cell["seed_index"]
        assert bundle.config.n_tags == 5


def test_cells_jsonl_round_trip(world, tmp_path):
    import json

    report = run_grid(world, ["baseline-softmax"])
    path = tmp_path / "cells.jsonl"
    write_cells_jsonl(report, path)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert lines == report.cells


def test_summarize_skips_error_cells():
    cells = [
        {"variant": "baseline-softmax", "size": 100, "test_f1": 80.0, "error": None},
        {"variant": "baseline-softmax", "size": 100, "test_f1": 90.0, "error": None},
        {"variant": "baseline-softmax", "size": 100, "test_f1": None,
         "error": "ValueError: nope"},
    ]
    summary = summarize_cells(cells)
    assert summary == [{
        "variant": "baseline-softmax", "size": 100, "cells": 2,
        "mean_f1": 85.0, "std_f1": 5.0, "min_f1": 80.0, "max_f1": 90.0,
    }]
