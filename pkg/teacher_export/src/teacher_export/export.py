"""Word-aligned logits export in the tagger toolkit's teacher-logits format.

Alignment follows the first-subtoken rule: each word's row is the logits
of its first wordpiece. Logits are exported pre-softmax at temperature 1;
all temperature handling belongs to the distillation side.
"""

import json
import logging

import numpy as np
import torch

from .errors import AlignmentError

FORMAT_VERSION = 1

log = logging.getLogger("teacher_export")


def word_alignment(tokenizer, tokens, sentence_id):
    """(wordpieces, first-piece index per word) for one sentence."""
    pieces, first = [], []
    for i, word in enumerate(tokens):
        sub = tokenizer.tokenize(word)
        if not sub:
            raise AlignmentError(
                f"sentence {sentence_id}: token {i} ({word!r}) yields no wordpieces")
        first.append(len(pieces))
        pieces.extend(sub)
    return pieces, first


def _windows(piece_counts, budget, overlap, sentence_id):
    """Word ranges [start, end] whose pieces fit the budget, consecutive
    ranges sharing ``overlap`` words so every word gets interior context."""
    n = len(piece_counts)
    windows = []
    start = 0
    while start < n:
        total, end = 0, start
        while end < n and total + piece_counts[end] <= budget:
            total += piece_counts[end]
            end += 1
        if end == start:
            raise AlignmentError(
                f"sentence {sentence_id}: token {start} alone exceeds the "
                f"{budget}-piece window")
        windows.append((start, end - 1))
        if end == n:
            break
        start = max(end - overlap, start + 1)
    return windows


def _forward_rows(model, tokenizer, pieces, device):
    ids = ([tokenizer.cls_token_id]
           + tokenizer.convert_tokens_to_ids(pieces)
           + [tokenizer.sep_token_id])
    batch = torch.tensor([ids], dtype=torch.long, device=device)
    with torch.no_grad():
        logits = model(input_ids=batch).logits[0]
    # drop [CLS]/[SEP]: row t is the logits of piece t
    return logits[1:-1].cpu().numpy().astype(np.float32)


def sentence_logits(model, tokenizer, tokens, sentence_id, max_length,
                    overlap, device):
    """[len(tokens), K] pre-softmax rows, stitching long sentences."""
    pieces, first = word_alignment(tokenizer, tokens, sentence_id)
    budget = max_length - 2  # room for [CLS] and [SEP]
    if len(pieces) <= budget:
        rows = _forward_rows(model, tokenizer, pieces, device)
        return rows[first]

    counts = [b - a for a, b in zip(first, first[1:] + [len(pieces)])]
    windows = _windows(counts, budget, overlap, sentence_id)
    log.info("sentence %d: %d wordpieces exceed the %d limit; stitching %d "
             "windows with %d-word overlap",
             sentence_id, len(pieces), max_length, len(windows), overlap)
    out = np.zeros((len(tokens), model.config.num_labels), dtype=np.float32)
    interiority = np.full(len(tokens), -1)
    for ws, we in windows:
        rows = _forward_rows(model, tokenizer, pieces[first[ws]:first[we] + counts[we]],
                             device)
        for word in range(ws, we + 1):
            depth = min(word - ws, we - word)
            if depth > interiority[word]:
                interiority[word] = depth
                out[word] = rows[first[word] - first[ws]]
    return out


def export_logits(handle, sentences, path):
    """Write the teacher-logits file: a JSON header line (format version,
    tagset in the student's order, teacher description, K, and the
    fine-tuning hyperparameters for provenance), then one record per
    sentence. A single appender owns the file."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "format_version": FORMAT_VERSION,
            "tagset": handle.labels,
            "teacher": handle.description,
            "num_labels": len(handle.labels),
            "hyperparameters": handle.hyperparameters,
        }) + "\n")
        for sent in sentences:
            rows = handle.logits_for(sent.tokens, sent.id)
            fh.write(json.dumps({
                "id": int(sent.id),
                "tokens": len(sent.tokens),
                "rows": [[float(x) for x in row] for row in rows],
            }) + "\n")
    return path
