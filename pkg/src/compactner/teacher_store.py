"""File-backed store of per-token teacher class scores.

Line-delimited JSON: the first line is a header carrying the format
version, the ordered tagset, a free-text teacher description, and K;
each following line is one sentence record {id, tokens, rows} with L x K
float rows. Floats are written with shortest round-trip decimals, which
preserves single-precision values exactly.
"""

import json

import numpy as np

from .data import TagSet
from .errors import AlignmentError, ContractError, CoverageError, FormatError

FORMAT_VERSION = 1


class TeacherLogitsStore:
    def __init__(self, tagset_labels, teacher, rows):
        self.tagset_labels = list(tagset_labels)
        self.teacher = teacher
        self.num_labels = len(self.tagset_labels)
        self.rows = rows

    def __len__(self):
        return len(self.rows)

    def ids(self):
        return set(self.rows)

    def get(self, sentence_id):
        try:
            return self.rows[sentence_id]
        except KeyError:
            raise CoverageError(f"no teacher logits for sentence id {sentence_id}") from None

    def missing(self, sentence_ids):
        return sorted(set(sentence_ids) - set(self.rows))

    def check_tagset(self, tagset):
        if self.tagset_labels != tagset.labels:
            raise AlignmentError(
                f"teacher tagset {self.tagset_labels} != student tagset {tagset.labels}")

    def tagset(self):
        return TagSet(self.tagset_labels)


def write_teacher_logits(path, tagset, teacher, records):
    """Write the store; ``records`` yields (sentence_id, [L, K] array)."""
    k = len(tagset)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "format_version": FORMAT_VERSION,
            "tagset": tagset.labels,
            "teacher": teacher,
            "num_labels": k,
        }) + "\n")
        for sid, rows in records:
            rows = np.asarray(rows)
            if rows.ndim != 2 or rows.shape[1] != k:
                raise ContractError(f"sentence {sid}: rows shape {rows.shape}, expected [L, {k}]")
            fh.write(json.dumps({
                "id": int(sid),
                "tokens": int(rows.shape[0]),
                "rows": [[float(x) for x in row] for row in rows],
            }) + "\n")


def load_teacher_logits(path):
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise FormatError("empty teacher-logits file")
        header = json.loads(header_line)
        if header.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"unsupported teacher-logits version {header.get('format_version')}")
        k = header["num_labels"]
        if k != len(header["tagset"]):
            raise FormatError(f"header num_labels {k} != tagset size {len(header['tagset'])}")
        rows = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            rec = json.loads(line)
            arr = np.asarray(rec["rows"], dtype=np.float32)
            if arr.ndim != 2 or arr.shape != (rec["tokens"], k):
                raise FormatError(
                    f"line {lineno}: rows shape {arr.shape}, expected ({rec['tokens']}, {k})")
            if not np.all(np.isfinite(arr)):
                raise ContractError(f"line {lineno}: non-finite teacher logits")
            rows[int(rec["id"])] = arr
    return TeacherLogitsStore(header["tagset"], header.get("teacher", ""), rows)


def export_model_logits(bundle, sentences, path, description, batch_size=64):
    """Write a tagger's emission scores as a teacher-logits file (the
    in-toolkit teacher path; transformer teachers use the same format)."""
    from .model import emission_rows

    rows = emission_rows(bundle, sentences, batch_size=batch_size)
    records = ((sent.id, arr) for sent, arr in zip(sentences, rows))
    write_teacher_logits(path, bundle.tagset, description, records)
