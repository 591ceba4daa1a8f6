"""The low-resource experiment grid: sizes x seeds x training variants.

Each cell trains one variant on one labeled split, selects on dev, and
scores on test. Cells are independent jobs run under a bounded worker
pool; a failed cell is recorded with its error and the grid carries on,
flagging the report as partial. Aggregation reports mean and standard
deviation of test F1 per (size, variant).
"""

import json
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import derive_seed
from .checkpoint import save_checkpoint
from .data import TagSet, build_vocab, load_embeddings, read_embedding_words
from .distill import train_baseline, train_distilled
from .errors import CoverageError, ParameterError
from .evaluate import evaluate_model
from .model import CRF, SOFTMAX

VARIANTS = {
    "baseline-softmax": (False, SOFTMAX),
    "baseline-crf": (False, CRF),
    "distilled-softmax": (True, SOFTMAX),
    "distilled-crf": (True, CRF),
}


@dataclass
class GridReport:
    cells: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    partial: bool = False

    def to_dict(self):
        return {"cells": self.cells, "summary": self.summary, "partial": self.partial}


def write_cells_jsonl(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        for cell in report.cells:
            fh.write(json.dumps(cell) + "\n")


def summarize_cells(cells):
    """Mean/std/min/max of test F1 per (variant, size) over successful cells."""
    groups = {}
    for cell in cells:
        if cell.get("error"):
            continue
        groups.setdefault((cell["variant"], cell["size"]), []).append(cell["test_f1"])
    summary = []
    for (variant, size) in sorted(groups):
        values = np.array(groups[(variant, size)])
        summary.append({
            "variant": variant, "size": size, "cells": len(values),
            "mean_f1": float(values.mean()), "std_f1": float(values.std()),
            "min_f1": float(values.min()), "max_f1": float(values.max()),
        })
    return summary


def _run_cell(spec, variant, corpus, dev, test, vocab, tagset, config, cfg,
              store, pretrained, out_dir):
    distilled, classifier = VARIANTS[variant]
    config = replace(config, classifier=classifier)
    labeled_set = set(spec.labeled_ids)
    labeled = [s for s in corpus if s.id in labeled_set]
    cell_cfg = replace(cfg, seed=derive_seed(cfg.seed, "grid", spec.size,
                                             spec.seed_index, variant))
    if distilled:
        unlabeled = [s for s in corpus if s.id not in labeled_set]
        bundle, report = train_distilled(labeled, unlabeled, dev, store, vocab,
                                         tagset, config, cell_cfg,
                                         pretrained=pretrained)
    else:
        bundle, report = train_baseline(labeled, dev, vocab, tagset, config,
                                        cell_cfg, pretrained=pretrained)
    test_f1 = evaluate_model(bundle, test).f1
    path = ""
    if out_dir is not None:
        path = f"{out_dir}/{variant}-size{spec.size}-seed{spec.seed_index}.cdt"
        save_checkpoint(bundle, path, provenance={
            "variant": variant, "size": spec.size, "seed_index": spec.seed_index})
    return {
        "size": spec.size, "seed_index": spec.seed_index, "variant": variant,
        "dev_f1": report.best_dev_f1, "test_f1": test_f1,
        "best_epoch": report.best_epoch, "seconds": report.seconds,
        "checkpoint": path, "error": None,
    }


def run_experiment_grid(corpus, dev, test, splits, variants, base_config, cfg,
                        store=None, embeddings_path=None, out_dir=None, workers=1):
    """Train and score every (split, variant) cell; returns a GridReport.

    ``corpus`` is the full training pool the splits index into.
    ``base_config`` supplies the architecture; its n_words/n_chars/n_tags
    are recomputed from the data here. Cells run under a bounded pool of
    ``workers`` threads; each cell is seeded independently, so the pool
    size never changes results, only wall time.
    """
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ParameterError(
            f"unknown variants {unknown}; choose from {sorted(VARIANTS)}")
    if not splits:
        raise ParameterError("no splits given")
    needs_teacher = any(VARIANTS[v][0] for v in variants)
    if needs_teacher:
        if store is None:
            raise ParameterError("distilled variants need a teacher-logits store")
        missing = store.missing([s.id for s in corpus])
        if missing:
            raise CoverageError(
                f"teacher scores missing for {len(missing)} training sentences")

    pretrained_words = read_embedding_words(embeddings_path) if embeddings_path else None
    vocab = build_vocab(list(corpus) + list(dev) + list(test),
                        pretrained_words=pretrained_words)
    pretrained = (load_embeddings(embeddings_path, vocab, dim=base_config.word_dim)
                  if embeddings_path else None)
    labels = sorted({t for block in (corpus, dev, test)
                     for s in block for t in (s.gold_tags or [])})
    tagset = TagSet(labels)
    config = replace(base_config, n_words=vocab.n_words, n_chars=vocab.n_chars,
                     n_tags=len(tagset))

    jobs = [(spec, variant) for spec in splits for variant in variants]

    def run(job):
        spec, variant = job
        try:
            return _run_cell(spec, variant, corpus, dev, test, vocab, tagset,
                             config, cfg, store, pretrained, out_dir)
        except Exception as exc:
            return {
                "size": spec.size, "seed_index": spec.seed_index, "variant": variant,
                "dev_f1": None, "test_f1": None, "best_epoch": None, "seconds": None,
                "checkpoint": "", "error": f"{type(exc).__name__}: {exc}",
                "trace": traceback.format_exc(limit=3),
            }

    if workers <= 1:
        cells = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run, jobs))
    cells.sort(key=lambda c: (c["size"], c["seed_index"], c["variant"]))
    return GridReport(cells, summarize_cells(cells),
                      partial=any(c["error"] for c in cells))
