"""Fine-tuning behaviour on the tiny offline checkpoint."""

import pytest

from teacher_export import ExportConfig, finetune_teacher, read_conll
from teacher_export.errors import ConfigError

from _tinybert import build_pretrained, make_sentences, write_conll, write_manifest


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    root = tmp_path_factory.mktemp("finetune")
    corpus = write_conll(root / "corpus.conll", make_sentences(30, seed=5))
    manifest = write_manifest(root / "splits.jsonl", [(12, 0, list(range(12)))])
    pretrained = build_pretrained(root / "pretrained")
    return {"root": root, "corpus": corpus, "manifest": manifest,
            "pretrained": pretrained}


def fast_config(world, **overrides):
    kwargs = dict(pretrained=world["pretrained"], manifest=str(world["manifest"]),
                  corpus=(str(world["corpus"]),), output=str(world["root"] / "out.jsonl"),
                  epochs=1, batch_size=8, seed=0)
    kwargs.update(overrides)
    return ExportConfig(**kwargs)


def test_finetune_prints_dev_f1_and_records_hyperparameters(world, capsys):
    handle = finetune_teacher(fast_config(world))
    out = capsys.readouterr().out
    assert "dev F1" in out
    assert handle.labels == ["O", "B-ORG", "B-PER", "I-PER"]
    recorded = handle.hyperparameters
    assert recorded["epochs"] == 1
    assert recorded["lr"] == 5e-5
    assert recorded["batch_size"] == 8
    assert recorded["optimizer"] == "adamw"


def test_two_runs_same_seed_are_structurally_identical(world):
    first = finetune_teacher(fast_config(world))
    second = finetune_teacher(fast_config(world))
    assert first.labels == second.labels
    probe = [s for s in read_conll([world["corpus"]]) if s.id < 5]
    rows_first = [first.logits_for(s.tokens, s.id).shape for s in probe]
    rows_second = [second.logits_for(s.tokens, s.id).shape for s in probe]
    assert rows_first == rows_second


def test_missing_pretrained_is_a_config_error(world, tmp_path):
    cfg = fast_config(world, pretrained=str(tmp_path / "no-such-model"))
    with pytest.raises(ConfigError, match="pretrained weights unavailable"):
        finetune_teacher(cfg)


def test_manifest_ids_must_exist_in_corpus(world, tmp_path):
    manifest = write_manifest(tmp_path / "bad.jsonl", [(2, 0, [0, 999])])
    with pytest.raises(ConfigError, match="999"):
        finetune_teacher(fast_config(world, manifest=str(manifest)))


def test_empty_labeled_split_rejected(world, tmp_path):
    manifest = write_manifest(tmp_path / "empty.jsonl", [(0, 0, [])])
    with pytest.raises(ConfigError, match="empty labeled split"):
        finetune_teacher(fast_config(world, manifest=str(manifest)))


def test_labeled_split_must_carry_tags(world, tmp_path):
    tagged = write_conll(tmp_path / "a.conll", make_sentences(4, seed=6))
    untagged = write_conll(tmp_path / "b.conll", make_sentences(4, seed=7),
                           tags=False)
    manifest = write_manifest(tmp_path / "m.jsonl", [(2, 0, [1, 5])])
    cfg = fast_config(world, corpus=(str(tagged), str(untagged)),
                      manifest=str(manifest))
    with pytest.raises(ConfigError, match="untagged"):
        finetune_teacher(cfg)


def test_all_o_corpus_rejected(world, tmp_path):
    path = tmp_path / "flat.conll"
    path.write_text("the O\noffice O\n\n", encoding="utf-8")
    manifest = write_manifest(tmp_path / "m.jsonl", [(1, 0, [0])])
    cfg = fast_config(world, corpus=(str(path),), manifest=str(manifest))
    with pytest.raises(ConfigError, match="no entity labels"):
        finetune_teacher(cfg)
