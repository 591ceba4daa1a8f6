"""Run settings for fine-tuning and export."""

from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class ExportConfig:
    """One fine-tune-then-export run.

    ``pretrained`` is a transformer identifier or local directory holding
    weights plus tokenizer. ``corpus`` lists CoNLL paths, labeled text
    first, and the manifest's labeled ids index into that combined
    numbering. ``split_size``/``split_seed_index`` pick the manifest row
    (None matches anything). ``max_length`` defaults to the model's
    position limit; longer sentences are exported by split-and-stitch
    with ``stitch_overlap`` shared words per seam.
    """

    pretrained: str
    manifest: str
    corpus: tuple
    output: str
    epochs: int = 5
    lr: float = 5e-5
    batch_size: int = 16
    seed: int = 0
    device: str = "cpu"
    split_size: int = None
    split_seed_index: int = None
    dev_fraction: float = 0.1
    max_length: int = None
    stitch_overlap: int = 8

    def __post_init__(self):
        self.corpus = tuple(self.corpus)
        if not self.corpus:
            raise ConfigError("corpus must list at least one CoNLL file")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dev_fraction < 0.5:
            raise ConfigError(
                f"dev_fraction must be in [0, 0.5), got {self.dev_fraction}")
        if self.max_length is not None and self.max_length < 8:
            raise ConfigError(f"max_length must be >= 8, got {self.max_length}")
        if self.stitch_overlap < 1:
            raise ConfigError(
                f"stitch_overlap must be >= 1, got {self.stitch_overlap}")
