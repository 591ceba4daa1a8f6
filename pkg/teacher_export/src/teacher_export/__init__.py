"""Transformer teacher fine-tuning and word-aligned logits export.

Couples to the tagger toolkit through files only: CoNLL corpora and a
split manifest in, a teacher-logits JSONL out.
"""

from .config import ExportConfig
from .corpus import Sentence, read_conll, read_manifest, select_split, tag_labels
from .errors import AlignmentError, ConfigError, ExporterError, ParseError
from .export import export_logits, sentence_logits, word_alignment
from .finetune import TeacherHandle, finetune_teacher

__all__ = [
    "AlignmentError", "ConfigError", "ExportConfig", "ExporterError",
    "ParseError", "Sentence", "TeacherHandle", "export_logits",
    "finetune_teacher", "read_conll", "read_manifest", "select_split",
    "sentence_logits", "tag_labels", "word_alignment",
]
