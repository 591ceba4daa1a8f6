"""CoNLL/manifest reading and config validation (no model involved)."""

import pytest

from teacher_export import ExportConfig, read_conll, read_manifest, select_split, tag_labels
from teacher_export.corpus import span_f1
from teacher_export.errors import ConfigError, ParseError

from _tinybert import make_sentences, write_conll, write_manifest


def test_ids_continue_across_files(tmp_path):
    a = write_conll(tmp_path / "a.conll", make_sentences(6, seed=1))
    b = write_conll(tmp_path / "b.conll", make_sentences(4, seed=2))
    sentences = read_conll([a, b])
    assert [s.id for s in sentences] == list(range(10))
    assert all(len(s.tokens) == len(s.tags) for s in sentences)


def test_docstart_blocks_dropped(tmp_path):
    path = write_conll(tmp_path / "a.conll", make_sentences(5, seed=1),
                       docstart_block=True)
    assert len(read_conll([path])) == 5


def test_untagged_file_reads_as_tagless(tmp_path):
    path = write_conll(tmp_path / "u.conll", make_sentences(3, seed=1), tags=False)
    sentences = read_conll([path])
    assert all(s.tags is None for s in sentences)


def test_mixed_widths_rejected(tmp_path):
    (tmp_path / "m.conll").write_text("ana B-PER\nruns\n\n", encoding="utf-8")
    with pytest.raises(ParseError, match="mixes"):
        read_conll([tmp_path / "m.conll"])


def test_bad_tag_rejected(tmp_path):
    (tmp_path / "bad.conll").write_text("ana X-PER\n\n", encoding="utf-8")
    with pytest.raises(ParseError, match="X-PER"):
        read_conll([tmp_path / "bad.conll"])


def test_iob1_openers_become_bio2(tmp_path):
    (tmp_path / "iob1.conll").write_text(
        "ana I-PER\nruns O\nacme I-ORG\nborg I-ORG\n\n", encoding="utf-8")
    (sent,) = read_conll([tmp_path / "iob1.conll"])
    assert sent.tags == ["B-PER", "O", "B-ORG", "I-ORG"]


def test_tag_labels_order_from_parsed_file(tmp_path):
    # the I-LOC continuation survives BIO2 normalisation; the opener does not
    (tmp_path / "o.conll").write_text(
        "a O\nb I-LOC\nbb I-LOC\n\nc B-PER\n\n", encoding="utf-8")
    sentences = read_conll([tmp_path / "o.conll"])
    assert tag_labels(sentences) == ["O", "B-LOC", "B-PER", "I-LOC"]


def test_tag_labels_inserts_b_for_orphan_i():
    from teacher_export import Sentence

    sentences = [Sentence(0, ["x", "y"], ["I-MISC", "O"])]
    assert tag_labels(sentences) == ["O", "B-MISC", "I-MISC"]


def test_manifest_round_trip_and_selection(tmp_path):
    path = write_manifest(tmp_path / "m.jsonl",
                          [(10, 0, [1, 2]), (10, 1, [3, 4]), (20, 0, [5])])
    records = read_manifest(path)
    assert len(records) == 3
    assert select_split(records, size=10, seed_index=1)["labeled_ids"] == [3, 4]
    assert select_split(records)["labeled_ids"] == [1, 2]
    with pytest.raises(ConfigError, match="size=30"):
        select_split(records, size=30)


def test_manifest_missing_field_rejected(tmp_path):
    (tmp_path / "m.jsonl").write_text('{"size": 5}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="seed_index"):
        read_manifest(tmp_path / "m.jsonl")


def test_empty_manifest_rejected(tmp_path):
    (tmp_path / "m.jsonl").write_text("", encoding="utf-8")
    with pytest.raises(ParseError, match="empty"):
        read_manifest(tmp_path / "m.jsonl")


def test_span_f1_half_right():
    score = span_f1([["B-PER", "I-PER", "O", "B-ORG"]],
                    [["B-PER", "I-PER", "O", "B-PER"]])
    assert score == 50.0


def test_config_defaults_follow_the_ecosystem():
    cfg = ExportConfig(pretrained="x", manifest="m", corpus=("a",), output="o")
    assert cfg.epochs == 5
    assert cfg.lr == 5e-5
    assert cfg.batch_size == 16
    assert cfg.device == "cpu"


@pytest.mark.parametrize("kwargs", [
    dict(epochs=0),
    dict(lr=0.0),
    dict(batch_size=0),
    dict(dev_fraction=0.5),
    dict(dev_fraction=-0.1),
    dict(max_length=4),
    dict(stitch_overlap=0),
    dict(corpus=()),
])
def test_config_rejects_bad_values(kwargs):
    base = dict(pretrained="x", manifest="m", corpus=("a",), output="o")
    base.update(kwargs)
    with pytest.raises(ConfigError):
        ExportConfig(**base)
