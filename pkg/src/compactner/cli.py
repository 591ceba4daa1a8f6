"""Command-line entry point wiring the library into reproducible runs.

Configuration resolves in three layers: dataclass defaults, then an
optional JSON config file (sections "tagger", "train", "bench"), then
explicit flags. Flags use SUPPRESS defaults so only values the user
actually typed override the file. The fully resolved configuration is
echoed into checkpoints and written reports.

Errors print a single line "<category>: <message>" on stderr and exit
nonzero, so wrappers can branch on the category without parsing prose.
"""

import argparse
import dataclasses
import json
import os
import sys

from . import reporting
from .benchmark import (BenchConfig, bench_model, external_report,
                        format_speedup_table, speedup_table)
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (Sentence, TagSet, build_vocab, load_embeddings, parse_conll,
                   parse_untagged, read_embedding_words, read_split_manifest,
                   sample_splits, write_conll, write_split_manifest)
from .distill import TrainConfig, train_baseline, train_distilled
from .errors import CompactnerError, ParseError, UsageError
from .evaluate import evaluate_model
from .grid import run_experiment_grid, write_cells_jsonl
from .model import TaggerConfig
from .synth import CorpusFactory
from .teacher_store import export_model_logits, load_teacher_logits

TAGGER_FIELDS = ("word_dim", "char_dim", "char_filters", "char_window",
                 "lstm_hidden", "classifier", "dropout_rate")
TRAIN_FIELDS = ("epochs", "batch_size", "lr", "seed", "temperature",
                "task_weight", "distill_weight", "scale_by_t2", "kl_direction",
                "labeled_per_batch")
BENCH_FIELDS = ("warmup_passes", "measured_passes", "thread_mode")
FLAG_OVERRIDES = {"dropout_rate": "--dropout"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message} (run '{self.prog} --help' for usage)")


def _parse_bool(value):
    lowered = value.lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _csv_ints(value):
    try:
        items = [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
    if not items:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return items


def _add_config_flags(parser, cls, names):
    """One flag per config field, SUPPRESS default, help shows the default."""
    for f in dataclasses.fields(cls):
        if f.name not in names:
            continue
        flag = FLAG_OVERRIDES.get(f.name, "--" + f.name.replace("_", "-"))
        kwargs = {"default": argparse.SUPPRESS, "dest": f.name,
                  "help": f"{f.name} (default: {f.default})"}
        if f.type is bool or isinstance(f.default, bool):
            kwargs["type"] = _parse_bool
            kwargs["metavar"] = "on|off"
        elif isinstance(f.default, int):
            kwargs["type"] = int
        elif isinstance(f.default, float):
            kwargs["type"] = float
        else:
            kwargs["type"] = str
        parser.add_argument(flag, **kwargs)


def _section(file_cfg, name, allowed):
    section = file_cfg.get(name, {})
    unknown = set(section) - set(allowed)
    if unknown:
        raise UsageError(
            f"config section {name!r} has unknown keys {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}")
    return dict(section)


def _gather(args, file_cfg, section, names):
    kwargs = _section(file_cfg, section, names)
    for name in names:
        if hasattr(args, name):
            kwargs[name] = getattr(args, name)
    return kwargs


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    unknown = set(cfg) - {"tagger", "train", "bench"}
    if unknown:
        raise UsageError(f"config file has unknown sections {sorted(unknown)}")
    return cfg


def _read_maybe_tagged(path):
    """Sentences from a CoNLL file whether or not it has a tag column."""
    try:
        sentences, _ = parse_conll(path)
        return sentences
    except ParseError:
        return parse_untagged(path)


# ---------------------------------------------------------------------------
# subcommands

def cmd_sample_splits(args, file_cfg):
    sentences, _ = parse_conll(args.train)
    specs = sample_splits(sentences, args.sizes, args.seeds, args.master_seed)
    write_split_manifest(specs, args.out)
    print(f"wrote {len(specs)} splits ({len(args.sizes)} sizes x {args.seeds} seeds) "
          f"over {len(sentences)} sentences to {args.out}")
    return 0


def cmd_synth(args, file_cfg):
    factory = CorpusFactory(args.seed)
    train = factory.sentences(args.count, key="train")
    write_conll(train, args.out)
    print(f"wrote {len(train)} sentences to {args.out}")
    if args.test_out:
        test = factory.sentences(args.test_count, start_id=1_000_000, key="test")
        write_conll(test, args.test_out)
        print(f"wrote {len(test)} test sentences to {args.test_out}")
    return 0


def _prepare_run(args, file_cfg, extra_sentences=()):
    labeled, labeled_tags = parse_conll(args.labeled)
    dev, dev_tags = parse_conll(args.dev)
    tagset = TagSet(labeled_tags.labels + dev_tags.labels)
    train_kwargs = _gather(args, file_cfg, "train", TRAIN_FIELDS)
    tcfg = TrainConfig(**train_kwargs)
    pretrained_words = read_embedding_words(args.embeddings) if args.embeddings else None
    vocab = build_vocab(labeled + dev + list(extra_sentences),
                        pretrained_words=pretrained_words)
    tagger_kwargs = _gather(args, file_cfg, "tagger", TAGGER_FIELDS)
    config = TaggerConfig(n_words=vocab.n_words, n_chars=vocab.n_chars,
                          n_tags=len(tagset), **tagger_kwargs)
    pretrained = (load_embeddings(args.embeddings, vocab, dim=config.word_dim)
                  if args.embeddings else None)
    return labeled, dev, tagset, vocab, config, tcfg, pretrained


def _finish_training(args, bundle, report, provenance):
    save_checkpoint(bundle, args.out, provenance=provenance)
    print(f"best dev F1 {report.best_dev_f1:.2f} at epoch {report.best_epoch} "
          f"({report.param_count} parameters); checkpoint: {args.out}")
    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        report_path = os.path.join(args.report_dir, "report.json")
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump({"run": provenance, **report.to_dict()}, fh, indent=2)
        figure = reporting.plot_training(report.history,
                                         os.path.join(args.report_dir, "curves.png"))
        print(f"report: {report_path}; curves: {figure}")
    return 0


def _provenance(command, config, tcfg, **extra):
    return {"command": command, "tagger": config.to_dict(),
            "train": dataclasses.asdict(tcfg), **extra}


def cmd_train(args, file_cfg):
    labeled, dev, tagset, vocab, config, tcfg, pretrained = _prepare_run(args, file_cfg)
    bundle, report = train_baseline(labeled, dev, vocab, tagset, config, tcfg,
                                    pretrained=pretrained)
    prov = _provenance("train", config, tcfg, labeled=args.labeled, dev=args.dev)
    return _finish_training(args, bundle, report, prov)


def cmd_distill(args, file_cfg):
    unlabeled_raw = _read_maybe_tagged(args.unlabeled)
    labeled, dev, tagset, vocab, config, tcfg, pretrained = _prepare_run(
        args, file_cfg, extra_sentences=unlabeled_raw)
    store = load_teacher_logits(args.teacher_logits)
    # ids continue across files, labeled first: the same numbering
    # export-logits produces for --data labeled --data unlabeled
    unlabeled = [Sentence(len(labeled) + i, s.tokens, None)
                 for i, s in enumerate(unlabeled_raw)]
    bundle, report = train_distilled(labeled, unlabeled, dev, store, vocab,
                                     tagset, config, tcfg, pretrained=pretrained)
    prov = _provenance("distill", config, tcfg, labeled=args.labeled,
                       unlabeled=args.unlabeled, teacher_logits=args.teacher_logits,
                       dev=args.dev)
    return _finish_training(args, bundle, report, prov)


def cmd_export_logits(args, file_cfg):
    bundle, _ = load_checkpoint(args.model)
    sentences = []
    for path in args.data:
        for sent in _read_maybe_tagged(path):
            sentences.append(Sentence(len(sentences), sent.tokens, sent.gold_tags))
    export_model_logits(bundle, sentences, args.out, args.description)
    print(f"wrote teacher scores for {len(sentences)} sentences to {args.out}")
    return 0


def cmd_eval(args, file_cfg):
    bundle, _ = load_checkpoint(args.model)
    sentences, _ = parse_conll(args.data)
    rep = evaluate_model(bundle, sentences)
    print(f"P {rep.precision:.2f}  R {rep.recall:.2f}  F1 {rep.f1:.2f}  "
          f"(gold {rep.gold}, predicted {rep.predicted}, correct {rep.correct})")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump({"model": args.model, "data": args.data, **rep.to_dict()},
                      fh, indent=2)
    return 0


def cmd_predict(args, file_cfg):
    from .model import predict

    bundle, _ = load_checkpoint(args.model)
    sentences = _read_maybe_tagged(args.data)
    tags = predict(bundle, sentences)
    write_conll(sentences, args.out, predicted=tags)
    print(f"tagged {len(sentences)} sentences into {args.out}")
    return 0


def cmd_bench(args, file_cfg):
    sentences = _read_maybe_tagged(args.data)
    bench_kwargs = _gather(args, file_cfg, "bench", BENCH_FIELDS)
    config = BenchConfig(batch_sizes=tuple(args.batch_sizes), **bench_kwargs)
    reports = []
    for path in args.model:
        bundle, _ = load_checkpoint(path)
        label = os.path.splitext(os.path.basename(path))[0]
        reports.append(bench_model(bundle, sentences, config, label=label))
    if args.external:
        reports.extend(external_report(args.external))
    print(reporting.bench_table(reports))
    baseline = args.baseline or reports[0].model
    table = speedup_table(reports, baseline)
    print()
    print(format_speedup_table(table))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        jsonl = os.path.join(args.out_dir, "bench.jsonl")
        with open(jsonl, "w", encoding="utf-8") as fh:
            for rep in reports:
                fh.write(json.dumps(rep.to_dict()) + "\n")
        with open(os.path.join(args.out_dir, "speedups.txt"), "w", encoding="utf-8") as fh:
            fh.write(format_speedup_table(table) + "\n")
        figure = reporting.plot_bench(
            [r for r in reports if r.thread_mode != "external"],
            os.path.join(args.out_dir, "throughput.png"))
        run = {"command": "bench", "bench": dataclasses.asdict(config),
               "data": args.data, "models": list(args.model), "baseline": baseline}
        with open(os.path.join(args.out_dir, "run.json"), "w", encoding="utf-8") as fh:
            json.dump(run, fh, indent=2)
        print(f"\nreport: {jsonl}; figure: {figure}")
    return 0


def cmd_grid(args, file_cfg):
    corpus, corpus_tags = parse_conll(args.train)
    dev, _ = parse_conll(args.dev)
    test, _ = parse_conll(args.test)
    splits = read_split_manifest(args.splits, [s.id for s in corpus])
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    store = load_teacher_logits(args.teacher_logits) if args.teacher_logits else None
    train_kwargs = _gather(args, file_cfg, "train", TRAIN_FIELDS)
    tcfg = TrainConfig(**train_kwargs)
    tagger_kwargs = _gather(args, file_cfg, "tagger", TAGGER_FIELDS)
    base_config = TaggerConfig(n_words=3, n_chars=3, n_tags=3, **tagger_kwargs)
    os.makedirs(args.out_dir, exist_ok=True)
    checkpoint_dir = None
    if args.save_checkpoints:
        checkpoint_dir = os.path.join(args.out_dir, "checkpoints")
        os.makedirs(checkpoint_dir, exist_ok=True)
    report = run_experiment_grid(corpus, dev, test, splits, variants, base_config,
                                 tcfg, store=store, embeddings_path=args.embeddings,
                                 out_dir=checkpoint_dir, workers=args.workers)
    cells_path = os.path.join(args.out_dir, "cells.jsonl")
    write_cells_jsonl(report, cells_path)
    table = reporting.grid_summary_table(report)
    with open(os.path.join(args.out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    figure = reporting.plot_grid(report, os.path.join(args.out_dir, "f1_vs_size.png"))
    run = {"command": "grid", "tagger": dataclasses.asdict(base_config),
           "train": dataclasses.asdict(tcfg), "variants": variants,
           "splits": args.splits, "summary": report.summary}
    with open(os.path.join(args.out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(run, fh, indent=2)
    print(table)
    print(f"\ncells: {cells_path}; figure: {figure}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override it)")

    parser = _Parser(prog="compactner",
                     description="Train, distill, evaluate, and benchmark "
                                 "compact sequence taggers.")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    sub.required = True

    p = sub.add_parser("sample-splits", parents=[common],
                       help="draw low-resource labeled/unlabeled splits")
    p.add_argument("--train", required=True, help="CoNLL training corpus")
    p.add_argument("--sizes", type=_csv_ints, default=[150, 300, 750, 1500, 3000],
                   help="labeled-set sizes (default: 150,300,750,1500,3000)")
    p.add_argument("--seeds", type=int, default=20,
                   help="splits per size (default: 20)")
    p.add_argument("--master-seed", type=int, default=0,
                   help="root seed for the split protocol (default: 0)")
    p.add_argument("--out", required=True, help="manifest output path (JSONL)")
    p.set_defaults(func=cmd_sample_splits)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic pattern-entity corpus")
    p.add_argument("--count", type=int, required=True, help="sentences to draw")
    p.add_argument("--seed", type=int, default=0, help="corpus seed (default: 0)")
    p.add_argument("--out", required=True, help="CoNLL output path")
    p.add_argument("--test-count", type=int, default=0,
                   help="extra held-out sentences (default: 0)")
    p.add_argument("--test-out", help="held-out CoNLL output path")
    p.set_defaults(func=cmd_synth)

    for name, func, distill in (("train", cmd_train, False),
                                ("distill", cmd_distill, True)):
        p = sub.add_parser(name, parents=[common],
                           help=("supervised training" if not distill else
                                 "teacher-guided training on labeled + unlabeled text"))
        p.add_argument("--labeled", required=True, help="labeled CoNLL file")
        p.add_argument("--dev", required=True, help="development CoNLL file")
        if distill:
            p.add_argument("--unlabeled", required=True,
                           help="unlabeled text (CoNLL or token-per-line)")
            p.add_argument("--teacher-logits", required=True,
                           help="teacher score file covering the training text")
        p.add_argument("--embeddings", help="pretrained word vector file")
        p.add_argument("--out", required=True, help="checkpoint output path")
        p.add_argument("--report-dir", help="directory for report.json + curves.png")
        _add_config_flags(p, TaggerConfig, TAGGER_FIELDS)
        _add_config_flags(p, TrainConfig, TRAIN_FIELDS)
        p.set_defaults(func=func)

    p = sub.add_parser("export-logits", parents=[common],
                       help="write a model's emission scores as a teacher file")
    p.add_argument("--model", required=True, help="checkpoint to export from")
    p.add_argument("--data", action="append", required=True,
                   help="text to score; repeat to concatenate files, ids run "
                        "across them in order (labeled first for distill)")
    p.add_argument("--out", required=True, help="teacher score output path (JSONL)")
    p.add_argument("--description", default="exported tagger",
                   help="free-text teacher description for the header")
    p.set_defaults(func=cmd_export_logits)

    p = sub.add_parser("eval", parents=[common], help="score a model on a tagged file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="gold-tagged CoNLL file")
    p.add_argument("--report", help="optional JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", parents=[common], help="tag a file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="CoNLL or token-per-line input")
    p.add_argument("--out", required=True, help="CoNLL output with predicted tags")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", parents=[common],
                       help="time inference across batch sizes")
    p.add_argument("--model", action="append", required=True,
                   help="checkpoint path (repeat for several models)")
    p.add_argument("--data", required=True, help="text to tag")
    p.add_argument("--batch-sizes", type=_csv_ints, default=[1, 32, 64, 128],
                   help="batch sizes (default: 1,32,64,128)")
    p.add_argument("--external", help="externally measured timings (JSONL)")
    p.add_argument("--baseline", help="model label ratios are relative to "
                                      "(default: first --model)")
    p.add_argument("--out-dir", help="directory for bench.jsonl, table, figure")
    _add_config_flags(p, BenchConfig, BENCH_FIELDS)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("grid", parents=[common],
                       help="train every (split x variant) cell and aggregate")
    p.add_argument("--train", required=True, help="full training pool (CoNLL)")
    p.add_argument("--dev", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--splits", required=True, help="split manifest from sample-splits")
    p.add_argument("--variants", default="baseline-softmax,baseline-crf,"
                                         "distilled-softmax,distilled-crf",
                   help="comma-separated variant names")
    p.add_argument("--teacher-logits", help="required when any variant distills")
    p.add_argument("--embeddings", help="pretrained word vector file")
    p.add_argument("--out-dir", required=True,
                   help="directory for cells.jsonl, summary, figure")
    p.add_argument("--save-checkpoints", action="store_true",
                   help="keep each cell's best checkpoint")
    p.add_argument("--workers", type=int, default=1,
                   help="bounded worker pool size (default: 1)")
    _add_config_flags(p, TaggerConfig, TAGGER_FIELDS)
    _add_config_flags(p, TrainConfig, TRAIN_FIELDS)
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args, file_cfg)
    except CompactnerError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        name = exc.filename or exc
        print(f"usage-error: file not found: {name} (check the path)", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
