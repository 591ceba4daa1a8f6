"""File-level interface to the tagger toolkit: CoNLL text and split manifests.

The exporter shares no code with the toolkit, only formats, so the reading
rules here must stay in lockstep with the toolkit's reader: whitespace
columns with the tag in the last one, blank lines between sentences,
"-DOCSTART-" blocks dropped, IOB1 tags normalised to BIO2, and sentence
ids assigned sequentially across the corpus files in the order given.
"""

import json
import re
from dataclasses import dataclass

from .errors import ConfigError, ParseError

_TAG_PATTERN = re.compile(r"^(O|[BI]-\S+)$")


@dataclass
class Sentence:
    id: int
    tokens: list
    tags: list  # None for untagged corpus files


def _to_bio2(tags):
    out = []
    prev = "O"
    for tag in tags:
        if tag.startswith("I-") and (prev == "O" or prev[2:] != tag[2:]):
            tag = "B-" + tag[2:]
        out.append(tag)
        prev = tag
    return out


def _read_blocks(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    blocks = []
    rows, docstart = [], False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            if rows and not docstart:
                blocks.append(rows)
            rows, docstart = [], False
            continue
        cols = line.split()
        if cols[0] == "-DOCSTART-":
            docstart = True
            continue
        rows.append((lineno, cols))
    if rows and not docstart:
        blocks.append(rows)
    return blocks


def read_conll(paths):
    """Sentences from one or more CoNLL files, ids continuing across files.

    A file whose every line has a single column is untagged (tags None);
    a mix of widths inside one file is rejected.
    """
    sentences = []
    for path in paths:
        blocks = _read_blocks(path)
        widths = {len(cols) > 1 for rows in blocks for _, cols in rows}
        if widths == {True, False}:
            raise ParseError(f"{path}: mixes tagged and untagged lines")
        tagged = widths == {True}
        for rows in blocks:
            tokens = [cols[0] for _, cols in rows]
            tags = None
            if tagged:
                for lineno, cols in rows:
                    if not _TAG_PATTERN.match(cols[-1]):
                        raise ParseError(
                            f"{path} line {lineno}: tag {cols[-1]!r} does not "
                            f"match O/B-/I- pattern")
                tags = _to_bio2([cols[-1] for _, cols in rows])
            sentences.append(Sentence(len(sentences), tokens, tags))
    return sentences


def tag_labels(sentences):
    """Ordered label space: "O" first, the rest sorted, with B-X inserted
    for any orphan I-X. Matches the toolkit's TagSet construction."""
    labels = set()
    for sent in sentences:
        if sent.tags is not None:
            labels.update(sent.tags)
    labels.discard("O")
    for label in list(labels):
        if label.startswith("I-"):
            labels.add("B-" + label[2:])
    return ["O"] + sorted(labels)


def read_manifest(path):
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path} line {lineno}: {exc}") from exc
            for key in ("size", "seed_index", "labeled_ids"):
                if key not in rec:
                    raise ParseError(f"{path} line {lineno}: missing {key!r}")
            records.append(rec)
    if not records:
        raise ParseError(f"{path}: empty split manifest")
    return records


def select_split(records, size=None, seed_index=None):
    """The manifest row to fine-tune on; None fields match anything, and
    the first matching row wins (manifest order is deterministic)."""
    for rec in records:
        if size is not None and rec["size"] != size:
            continue
        if seed_index is not None and rec["seed_index"] != seed_index:
            continue
        return rec
    raise ConfigError(f"no manifest row with size={size} seed_index={seed_index}")


def extract_spans(tags):
    spans = set()
    start = None
    for i, tag in enumerate(tags + ["O"]):
        if start is not None and not (tag.startswith("I-") and tag[2:] == kind):
            spans.add((kind, start, i - 1))
            start = None
        if tag.startswith("B-"):
            start, kind = i, tag[2:]
    return spans


def span_f1(gold_sequences, predicted_sequences):
    """Micro-averaged exact-span F1 as a percentage (sanity metric only;
    the toolkit's scorer is the measurement of record)."""
    correct = predicted = gold = 0
    for gold_tags, pred_tags in zip(gold_sequences, predicted_sequences):
        gold_spans = extract_spans(list(gold_tags))
        pred_spans = extract_spans(list(pred_tags))
        correct += len(gold_spans & pred_spans)
        predicted += len(pred_spans)
        gold += len(gold_spans)
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    return 200.0 * p * r / (p + r) if p + r else 0.0
