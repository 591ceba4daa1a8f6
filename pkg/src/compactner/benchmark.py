"""Inference timing across batch sizes, and speedup ratio tables.

One measurement is a full pass over the dataset at a fixed batch size,
decoding included, outputs discarded. Warmup passes run first and are
dropped; the median of the measured passes is reported. Ratios between
models are pure time quotients, so they carry no units.
"""

import gc
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import AlignmentError, ParameterError
from .model import predict

SINGLE = "single"
POOLED = "pooled"


@dataclass(frozen=True)
class BenchConfig:
    batch_sizes: tuple = (1, 32, 64, 128)
    warmup_passes: int = 1
    measured_passes: int = 3
    thread_mode: str = SINGLE
    pool_workers: int = 4

    def __post_init__(self):
        if not self.batch_sizes:
            raise ParameterError("batch_sizes is empty")
        if any(b < 1 for b in self.batch_sizes):
            raise ParameterError("batch sizes must be positive")
        if self.measured_passes < 1:
            raise ParameterError("measured_passes must be >= 1")
        if self.warmup_passes < 0:
            raise ParameterError("warmup_passes must be >= 0")
        if self.thread_mode not in (SINGLE, POOLED):
            raise ParameterError(f"thread_mode must be {SINGLE!r} or {POOLED!r}")


@dataclass
class BenchReport:
    model: str
    sentences: int
    tokens: int
    thread_mode: str
    rows: list = field(default_factory=list)

    def row_for(self, batch_size):
        for row in self.rows:
            if row["batch_size"] == batch_size:
                return row
        raise ParameterError(f"no timing row for batch size {batch_size}")

    def to_dict(self):
        return {"model": self.model, "sentences": self.sentences,
                "tokens": self.tokens, "thread_mode": self.thread_mode,
                "rows": self.rows}


def _one_pass(bundle, sentences, batch_size, config):
    if config.thread_mode == POOLED:
        chunks = [sentences[i:i + batch_size]
                  for i in range(0, len(sentences), batch_size)]
        with ThreadPoolExecutor(max_workers=config.pool_workers) as pool:
            for _ in pool.map(lambda c: predict(bundle, c, batch_size=batch_size), chunks):
                pass
    else:
        predict(bundle, sentences, batch_size=batch_size)


def bench_model(bundle, sentences, config=BenchConfig(), label="model"):
    """Time full dataset passes for each batch size; returns a BenchReport."""
    if not sentences:
        raise ParameterError("benchmark dataset is empty")
    known = sum(1 for s in sentences for t in s.tokens
                if bundle.vocab.word_id(t) >= 2)
    if known == 0:
        raise AlignmentError("no dataset token is in the model vocab; wrong model/dataset pair?")
    tokens = sum(len(s) for s in sentences)
    report = BenchReport(label, len(sentences), tokens, config.thread_mode)
    # GC pauses at small batch sizes dwarf the decode-cost differences the
    # ratios exist to expose, so collection is held off during timed passes.
    gc_was_on = gc.isenabled()
    for batch_size in config.batch_sizes:
        for _ in range(config.warmup_passes):
            _one_pass(bundle, sentences, batch_size, config)
        times = []
        gc.collect()
        gc.disable()
        try:
            for _ in range(config.measured_passes):
                t0 = time.perf_counter()
                _one_pass(bundle, sentences, batch_size, config)
                times.append(time.perf_counter() - t0)
        finally:
            if gc_was_on:
                gc.enable()
        times.sort()
        seconds = times[len(times) // 2] if len(times) % 2 else (
            0.5 * (times[len(times) // 2 - 1] + times[len(times) // 2]))
        report.rows.append({
            "batch_size": int(batch_size),
            "seconds": seconds,
            "sentences_per_second": len(sentences) / seconds,
            "tokens_per_second": tokens / seconds,
        })
    return report


@dataclass
class SpeedupTable:
    """time(baseline)/time(variant) per batch size; baseline column is 1.0."""

    batch_sizes: list
    models: list
    baseline: str
    ratios: list  # ratios[i][j] for batch_sizes[i] x models[j]

    def to_dict(self):
        return {"batch_sizes": self.batch_sizes, "models": self.models,
                "baseline": self.baseline, "ratios": self.ratios}


def speedup_table(reports, baseline):
    """Speedups of every report's model relative to ``baseline``.

    All reports must cover the same batch sizes; a value of 3.3 means the
    model finishes a pass 3.3 times faster than the baseline does.
    """
    by_model = {}
    for r in reports:
        by_model.setdefault(r.model, r)
    if baseline not in by_model:
        raise ParameterError(f"baseline {baseline!r} not among benchmarked models")
    models = list(by_model)
    sizes = [row["batch_size"] for row in by_model[baseline].rows]
    for r in by_model.values():
        if [row["batch_size"] for row in r.rows] != sizes:
            raise ParameterError(
                f"model {r.model!r} measured different batch sizes than the baseline")
    ratios = []
    for b in sizes:
        base_time = by_model[baseline].row_for(b)["seconds"]
        ratios.append([base_time / by_model[m].row_for(b)["seconds"] for m in models])
    return SpeedupTable(sizes, models, baseline, ratios)


def format_speedup_table(table):
    """Fixed-width text with the "N.N×" convention, one row per batch size."""
    headers = ["batch"] + [f"{m} vs {table.baseline}" for m in table.models]
    body = [[str(b)] + [f"{v:.1f}×" for v in row]
            for b, row in zip(table.batch_sizes, table.ratios)]
    widths = [max(len(h), *(len(r[j]) for r in body)) for j, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in body:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)


def external_report(path):
    """Read timings measured outside this toolkit (one JSON object per
    line: model, batch_size, seconds) into BenchReports."""
    by_model = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                model, b, s = rec["model"], int(rec["batch_size"]), float(rec["seconds"])
            except KeyError as missing:
                raise ParameterError(f"line {lineno}: external timing lacks {missing}") from None
            rep = by_model.setdefault(model, BenchReport(model, 0, 0, "external"))
            rep.rows.append({"batch_size": b, "seconds": s,
                             "sentences_per_second": 0.0, "tokens_per_second": 0.0})
    for rep in by_model.values():
        rep.rows.sort(key=lambda r: r["batch_size"])
    return list(by_model.values())
