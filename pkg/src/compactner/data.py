"""CoNLL-style corpus handling: parsing, tag schemes, vocab, splits, embeddings.

The internal tag scheme is BIO2; raw IOB1 input is converted on parse.
Sentence ids are 0-based positions among the parsed sentences of a file,
which is also the id space used by split manifests and teacher logits.
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .autodiff import Rng, derive_seed
from .errors import ParameterError, ParseError

log = logging.getLogger(__name__)

PAD_ID = 0
UNK_ID = 1

_TAG_PATTERN = re.compile(r"^(O|[BI]-\S+)$")


@dataclass
class Sentence:
    id: int
    tokens: list
    gold_tags: Optional[list] = None

    def __post_init__(self):
        if not self.tokens or any(t == "" for t in self.tokens):
            raise ParseError(f"sentence {self.id}: empty token list or empty token")
        if self.gold_tags is not None and len(self.gold_tags) != len(self.tokens):
            raise ParseError(
                f"sentence {self.id}: {len(self.gold_tags)} tags for {len(self.tokens)} tokens")

    def __len__(self):
        return len(self.tokens)


class TagSet:
    """Ordered BIO2 label space: "O" first, remaining labels sorted.

    Construction inserts any B-X missing for a present I-X so the label
    space is always span-consistent.
    """

    def __init__(self, labels):
        extra = set(labels) - {"O"}
        for lb in list(extra):
            if lb.startswith("I-"):
                extra.add("B-" + lb[2:])
        self.labels = ["O"] + sorted(extra)
        self._ids = {lb: i for i, lb in enumerate(self.labels)}
        self.entity_types = sorted({lb[2:] for lb in self.labels if lb != "O"})

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        return isinstance(other, TagSet) and self.labels == other.labels

    def id_of(self, label):
        return self._ids[label]

    def label_of(self, tag_id):
        return self.labels[tag_id]

    @property
    def outside_id(self):
        return 0


@dataclass
class Vocab:
    """Dense word/char index maps; PAD=0 and UNK=1 are positional, so they
    can never collide with corpus entries. Lookups are total: unknown words
    fall back to the lowercase form, then UNK."""

    words: list
    chars: list
    word_to_id: dict = field(repr=False, default=None)
    char_to_id: dict = field(repr=False, default=None)

    def __post_init__(self):
        if self.word_to_id is None:
            self.word_to_id = {w: i + 2 for i, w in enumerate(self.words)}
        if self.char_to_id is None:
            self.char_to_id = {c: i + 2 for i, c in enumerate(self.chars)}

    @property
    def n_words(self):
        return len(self.words) + 2

    @property
    def n_chars(self):
        return len(self.chars) + 2

    def word_id(self, token):
        wid = self.word_to_id.get(token)
        if wid is None:
            wid = self.word_to_id.get(token.lower(), UNK_ID)
        return wid

    def char_id(self, ch):
        return self.char_to_id.get(ch, UNK_ID)


def convert_iob1_to_bio2(tags):
    """IOB1 -> BIO2: an I-X opening a span (sentence start, after O, or
    after a different type) becomes B-X. Idempotent on BIO2 input."""
    out = []
    prev = "O"
    for tag in tags:
        if tag.startswith("I-") and (prev == "O" or prev[2:] != tag[2:]):
            tag = "B-" + tag[2:]
        out.append(tag)
        prev = tag
    return out


def parse_conll(source, column=-1):
    """Parse whitespace-columned, blank-line-separated sentences.

    ``source`` is a file path or file object. ``column`` picks the NER tag
    column (default: last). Blocks containing a "-DOCSTART-" line are
    dropped entirely. Returns (sentences, tagset); gold tags stay label
    strings (BIO2 after conversion), so sentences from separately parsed
    files can be combined without an index-space mixup.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()

    blocks = []
    tokens, tags, docstart = [], [], False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            if tokens and not docstart:
                blocks.append((tokens, tags))
            tokens, tags, docstart = [], [], False
            continue
        cols = line.split()
        if cols[0] == "-DOCSTART-":
            docstart = True
            continue
        if column >= 0 and len(cols) < column + 1:
            raise ParseError(f"line {lineno}: {len(cols)} columns, need at least {column + 1}")
        if len(cols) < 2:
            raise ParseError(f"line {lineno}: need a token and a tag column")
        tag = cols[column]
        if not _TAG_PATTERN.match(tag):
            raise ParseError(f"line {lineno}: tag {tag!r} does not match O/B-/I- pattern")
        tokens.append(cols[0])
        tags.append(tag)
    if tokens and not docstart:
        blocks.append((tokens, tags))

    converted = [(toks, convert_iob1_to_bio2(tgs)) for toks, tgs in blocks]
    tagset = TagSet(tag for _, tgs in converted for tag in tgs)
    sentences = [Sentence(i, toks, tgs) for i, (toks, tgs) in enumerate(converted)]
    return sentences, tagset


def parse_untagged(source):
    """Parse token-per-line blocks with no tag column (prediction input)."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    sentences, tokens = [], []
    for raw in text.split("\n"):
        line = raw.strip()
        if not line:
            if tokens:
                sentences.append(Sentence(len(sentences), tokens))
            tokens = []
            continue
        cols = line.split()
        if cols[0] == "-DOCSTART-":
            continue
        tokens.append(cols[0])
    if tokens:
        sentences.append(Sentence(len(sentences), tokens))
    return sentences


def write_conll(sentences, path, predicted=None):
    """Write "token tag" lines (plus a predicted column when given),
    blank line between sentences. Parses back to identical content."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, sent in enumerate(sentences):
            for t, token in enumerate(sent.tokens):
                cols = [token]
                if sent.gold_tags is not None:
                    cols.append(sent.gold_tags[t])
                if predicted is not None:
                    cols.append(predicted[i][t])
                fh.write(" ".join(cols) + "\n")
            fh.write("\n")


def strip_gold(sentences):
    return [Sentence(s.id, s.tokens, None) for s in sentences]


@dataclass
class SplitSpec:
    size: int
    seed_index: int
    derived_seed: int
    labeled_ids: list
    unlabeled_ids: list

    def __post_init__(self):
        labeled = set(self.labeled_ids)
        if len(labeled) != self.size:
            raise ParameterError(f"split has {len(labeled)} labeled ids, expected {self.size}")
        if labeled & set(self.unlabeled_ids):
            raise ParameterError("labeled and unlabeled ids overlap")


def sample_splits(train, sizes, seeds_per_size, master_seed):
    """Low-resource split protocol: for each size, ``seeds_per_size``
    uniform sentence-level samples without replacement; the complement is
    the unlabeled pool. Deterministic in ``master_seed`` via
    derive_seed(master, size, k)."""
    if seeds_per_size < 1:
        raise ParameterError("seeds_per_size must be >= 1")
    all_ids = sorted(s.id for s in train)
    specs = []
    for size in sizes:
        if size > len(all_ids):
            raise ParameterError(f"split size {size} exceeds corpus size {len(all_ids)}")
        for k in range(seeds_per_size):
            seed = derive_seed(master_seed, size, k)
            rng = Rng(seed)
            picks = rng.choice_without_replacement(len(all_ids), size)
            labeled = sorted(all_ids[i] for i in picks)
            unlabeled = sorted(set(all_ids) - set(labeled))
            specs.append(SplitSpec(size, k, seed, labeled, unlabeled))
    return specs


def write_split_manifest(specs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for spec in specs:
            fh.write(json.dumps({
                "size": spec.size,
                "seed_index": spec.seed_index,
                "derived_seed": spec.derived_seed,
                "labeled_ids": spec.labeled_ids,
            }) + "\n")


def read_split_manifest(path, all_ids):
    """Rehydrate SplitSpecs; the unlabeled side is the complement within
    ``all_ids`` (manifests store only the labeled sample)."""
    specs = []
    id_set = set(all_ids)
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            labeled = rec["labeled_ids"]
            missing = set(labeled) - id_set
            if missing:
                raise ParseError(f"manifest references unknown sentence ids {sorted(missing)[:5]}")
            unlabeled = sorted(id_set - set(labeled))
            specs.append(SplitSpec(rec["size"], rec["seed_index"], rec["derived_seed"],
                                   labeled, unlabeled))
    return specs


def build_vocab(sentences, pretrained_words=None):
    """Word vocab = corpus words union pretrained words (sorted); char
    vocab covers every character of corpus words."""
    if not sentences:
        raise ParameterError("build_vocab needs at least one sentence")
    corpus_words = {t for s in sentences for t in s.tokens}
    words = set(corpus_words)
    if pretrained_words:
        words |= set(pretrained_words)
    chars = {c for w in corpus_words for c in w}
    return Vocab(sorted(words), sorted(chars))


def read_embedding_words(path):
    """The word column of an embedding file, for vocab union before the
    vectors themselves are loaded against the final vocab."""
    words = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split(None, 1)
            if parts:
                words.add(parts[0])
    return words


@dataclass
class EmbeddingTable:
    dim: int
    vectors: np.ndarray
    hit_count: int
    skipped_lines: int = 0


def load_embeddings(path, vocab, dim=100, seed=0):
    """Load "word v1 .. vdim" lines into a [n_words, dim] table.

    Matched rows are copied verbatim; everything else (UNK included) gets
    uniform init in +-sqrt(3/dim); the PAD row stays zero. Lines with the
    wrong float count are skipped and counted.
    """
    rng = Rng(seed)
    bound = math.sqrt(3.0 / dim)
    vectors = rng.uniform(-bound, bound, (vocab.n_words, dim), dtype=np.float32)
    vectors[PAD_ID] = 0.0
    hit = 0
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                skipped += 1
                continue
            wid = vocab.word_to_id.get(parts[0])
            if wid is None:
                continue
            try:
                vectors[wid] = np.asarray([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError:
                skipped += 1
                continue
            hit += 1
    if skipped:
        log.warning("load_embeddings: skipped %d malformed lines in %s", skipped, path)
    return EmbeddingTable(dim, vectors, hit, skipped)
