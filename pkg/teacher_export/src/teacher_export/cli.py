"""Command line: fine-tune on the labeled split, export logits for the
full corpus (labeled sentences included; distillation uses them too)."""

import argparse
import sys

from .config import ExportConfig
from .corpus import read_conll
from .errors import ExporterError
from .export import export_logits
from .finetune import finetune_teacher


def build_parser():
    parser = argparse.ArgumentParser(
        prog="teacher-export",
        description="Fine-tune a pretrained transformer token classifier and "
                    "export word-aligned per-token logits for distillation.")
    parser.add_argument("--pretrained", required=True,
                        help="model identifier or local directory")
    parser.add_argument("--manifest", required=True,
                        help="split manifest (JSONL) naming the labeled ids")
    parser.add_argument("--corpus", required=True, nargs="+",
                        help="CoNLL files, labeled text first")
    parser.add_argument("--out", required=True, help="teacher-logits output path")
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--lr", type=float, default=5e-5)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--split-size", type=int, default=None,
                        help="manifest row selector (default: first row)")
    parser.add_argument("--split-seed-index", type=int, default=None)
    parser.add_argument("--dev-fraction", type=float, default=0.1)
    parser.add_argument("--max-length", type=int, default=None,
                        help="override the model's sentence-length limit")
    parser.add_argument("--stitch-overlap", type=int, default=8)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = ExportConfig(
            pretrained=args.pretrained, manifest=args.manifest,
            corpus=tuple(args.corpus), output=args.out, epochs=args.epochs,
            lr=args.lr, batch_size=args.batch_size, seed=args.seed,
            device=args.device, split_size=args.split_size,
            split_seed_index=args.split_seed_index,
            dev_fraction=args.dev_fraction, max_length=args.max_length,
            stitch_overlap=args.stitch_overlap)
        handle = finetune_teacher(config)
        sentences = read_conll(config.corpus)
        export_logits(handle, sentences, config.output)
    except ExporterError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"usage-error: file not found: {exc.filename} (check the path)",
              file=sys.stderr)
        return 2
    print(f"wrote teacher logits for {len(sentences)} sentences to {config.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
