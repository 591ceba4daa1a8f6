"""Compact sequence taggers trained with teacher guidance.

Train small char-CNN + BiLSTM taggers from labeled and unlabeled text,
using a larger model's per-token scores as a second supervision signal;
evaluate with entity-span F1; benchmark inference throughput.
"""

from .autodiff import Rng, Tensor, derive_seed, no_grad
from .benchmark import (BenchConfig, BenchReport, bench_model, external_report,
                        format_speedup_table, speedup_table)
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (EmbeddingTable, Sentence, SplitSpec, TagSet, Vocab,
                   build_vocab, convert_iob1_to_bio2, load_embeddings,
                   parse_conll, parse_untagged, read_split_manifest,
                   sample_splits, strip_gold, write_conll, write_split_manifest)
from .distill import (LossBreakdown, TrainConfig, TrainReport, batch_loss,
                      pseudo_labels, train_baseline, train_distilled)
from .errors import (AlignmentError, CompactnerError, ContractError,
                     CoverageError, DimensionError, FormatError, ParameterError,
                     ParseError, UsageError)
from .evaluate import EvalReport, evaluate_model, extract_spans, span_f1
from .grid import VARIANTS, GridReport, run_experiment_grid
from .model import (CRF, SOFTMAX, ModelBundle, TaggerConfig, TaggerParams,
                    count_params, init_params, predict)
from .optim import AdamState, adam_step, grad_check
from .synth import CorpusFactory, bench_corpus, overfit_corpus
from .teacher_store import (TeacherLogitsStore, export_model_logits,
                            load_teacher_logits, write_teacher_logits)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "AlignmentError", "BenchConfig", "BenchReport",
    "CompactnerError", "ContractError", "CorpusFactory", "CoverageError",
    "CRF", "DimensionError", "EmbeddingTable", "EvalReport", "FormatError",
    "GridReport", "LossBreakdown", "ModelBundle", "ParameterError",
    "ParseError", "Rng", "Sentence", "SOFTMAX", "SplitSpec", "TagSet",
    "TaggerConfig", "TaggerParams", "Tensor", "TeacherLogitsStore",
    "TrainConfig", "TrainReport", "UsageError", "VARIANTS", "Vocab",
    "adam_step", "batch_loss", "bench_corpus", "bench_model", "build_vocab",
    "convert_iob1_to_bio2", "count_params", "derive_seed", "evaluate_model",
    "export_model_logits", "external_report", "extract_spans",
    "format_speedup_table", "grad_check", "init_params", "load_checkpoint",
    "load_embeddings", "load_teacher_logits", "no_grad", "overfit_corpus",
    "parse_conll", "parse_untagged", "predict", "pseudo_labels",
    "read_split_manifest", "run_experiment_grid", "sample_splits",
    "save_checkpoint", "span_f1", "speedup_table", "strip_gold",
    "train_baseline", "train_distilled", "write_conll", "write_split_manifest",
    "write_teacher_logits", "__version__",
]
